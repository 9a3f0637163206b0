"""Command-line entry point for the fixed-point lab.

Exit codes: 0 success, 1 hypothesis or convergence failure, 2 usage or
input error.
"""
from __future__ import annotations

import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional

import click

import gauges
from lab_config import TOOL_NAME, TOOL_VERSION, LabSettings, load_settings
from lab_reports import (
    SpaceFileModel,
    VolterraProblemModel,
    build_e1_report,
    render_csv,
    render_json,
    report_envelope,
)
from metric_core import validate_metric
from picard_engine import StopRule, global_attraction, iterate, verify_uniqueness
from suzuki_verifier import classify
from volterra_solver import check_condition_ii, solve

logger = logging.getLogger(__name__)


class InputError(click.ClickException):
    exit_code = 2


@contextmanager
def _input_errors() -> Iterator[None]:
    try:
        yield
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _parse_ids(raw: str) -> List[int]:
    ids: List[int] = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                low, high = (int(v) for v in part.split("-", 1))
                ids.extend(range(low, high + 1))
            else:
                ids.append(int(part))
        except ValueError as exc:
            raise InputError(f"invalid catalog id list: {raw!r}") from exc
    if not ids:
        raise InputError("no catalog ids given")
    return ids


def _settings(ctx: click.Context, **overrides: Any) -> LabSettings:
    base: LabSettings = ctx.obj["settings"]
    updates = {key: value for key, value in overrides.items() if value is not None}
    with _input_errors():
        return LabSettings.model_validate({**base.model_dump(), **updates})


def _read_json(stream: Any) -> Any:
    try:
        return json.load(stream)
    except ValueError as exc:
        raise InputError(f"input is not valid JSON: {exc}") from exc


def _emit(envelope: Mapping[str, Any], rows: List[Dict[str, Any]], fmt: str, out: str) -> None:
    text = render_json(envelope) if fmt == "json" else render_csv(rows)
    if out == "-":
        click.echo(text, nl=False)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf8")
    logger.info("report written path=%s format=%s", path, fmt)


def common_options(func: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option("--seed", type=click.IntRange(min=0), default=None, help="Random seed (overrides settings)."),
        click.option("--tol", type=click.FloatRange(min=0), default=None, help="Comparison tolerance override."),
        click.option("--out", default="-", show_default=True, help="Output file, '-' for stdout."),
        click.option(
            "--format",
            "fmt",
            type=click.Choice(["json", "csv"]),
            default="json",
            show_default=True,
            help="Report format.",
        ),
        click.option("--workers", type=click.IntRange(1, 64), default=None, help="Threads for pair sweeps."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default="WARNING",
    show_default=True,
)
@click.version_option(TOOL_VERSION, prog_name=TOOL_NAME)
@click.pass_context
def main(ctx: click.Context, log_level: str) -> None:
    """Integral-type Suzuki fixed-point lab."""

    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    ctx.ensure_object(dict)
    ctx.obj["settings"] = load_settings()


@main.command("check-cclass")
@click.option("--ids", default="1-17", show_default=True, help="Catalog ids, e.g. '1-17' or '2,4,9'.")
@click.option("--points-per-axis", type=click.IntRange(min=100), default=None, help="Grid points per axis.")
@click.option("--grid-max", type=click.FloatRange(min=0, min_open=True), default=None, help="Grid covers [0, max]^2.")
@common_options
@click.pass_context
def check_cclass(
    ctx: click.Context,
    ids: str,
    points_per_axis: Optional[int],
    grid_max: Optional[float],
    seed: Optional[int],
    tol: Optional[float],
    out: str,
    fmt: str,
    workers: Optional[int],
) -> None:
    """Sample the C-class conditions for catalog functions."""

    settings = _settings(ctx, cclassTolerance=tol, gridPointsPerAxis=points_per_axis, gridMax=grid_max, seed=seed)
    grid = gauges.SamplingGrid(s_max=settings.gridMax, points_per_axis=settings.gridPointsPerAxis)

    items: List[Dict[str, Any]] = []
    rows: List[Dict[str, Any]] = []
    with _input_errors():
        for item_id in _parse_ids(ids):
            F = gauges.catalog_cclass(item_id)
            verdict = gauges.verify_cclass(
                F, grid, tol_c=settings.cclassTolerance, equality_band=settings.equalityBand
            )
            items.append({"id": item_id, "formula": F.formula, **verdict.to_dict()})
            rows.append(
                {
                    "id": item_id,
                    "formula": F.formula,
                    "passed": verdict.passed,
                    "checked": verdict.checked,
                    "violations": len(verdict.violations),
                    "suspects": len(verdict.suspects),
                }
            )

    passed = all(row["passed"] for row in rows)
    result = {"passed": passed, "grid": {"max": settings.gridMax, "pointsPerAxis": settings.gridPointsPerAxis}, "items": items}
    _emit(report_envelope("check-cclass", result, settings), rows, fmt, out)
    ctx.exit(0 if passed else 1)


@main.command("verify-space")
@click.argument("input_file", type=click.File("r"))
@common_options
@click.pass_context
def verify_space(
    ctx: click.Context,
    input_file: Any,
    seed: Optional[int],
    tol: Optional[float],
    out: str,
    fmt: str,
    workers: Optional[int],
) -> None:
    """Classify a finite space and self-map against the hypotheses in INPUT_FILE."""

    settings = _settings(ctx, compareTolerance=tol, seed=seed, workers=workers)
    data = _read_json(input_file)
    with _input_errors():
        model = SpaceFileModel.model_validate(data)
        space, self_map = model.load()
        if self_map is None:
            raise InputError("space file needs a 'map'")
        if not model.hypotheses:
            raise InputError("space file needs at least one entry in 'hypotheses'")
        metric = validate_metric(space)
        if not metric.passed:
            raise InputError(f"distances do not form a metric: {metric.violations[0].to_dict()}")
        specs = [h.build(settings) for h in model.hypotheses]
        summary = classify(
            space, self_map, specs, log_rel_tol=settings.logRelativeTolerance, workers=settings.workers
        )

    fixed_points = [space.labels[i] for i in verify_uniqueness(space, self_map)]
    result = {
        "points": space.size,
        "classification": summary.to_dict(space),
        "reports": [report.to_dict(space) for report in summary.reports],
        "fixed_points": fixed_points,
    }
    rows = [
        {
            "theorem": report.theorem.value,
            "holds": report.holds,
            "active": report.premise_active_pairs,
            "vacuous": report.vacuous_pairs,
            "violations": len(report.violations),
        }
        for report in summary.reports
    ]
    _emit(report_envelope("verify-space", result, settings), rows, fmt, out)
    ctx.exit(0 if all(report.holds for report in summary.reports) else 1)


@main.command("example-e1")
@click.option("--n-max", type=click.IntRange(min=1), default=50, show_default=True, help="Truncation of the families.")
@click.option("--strict", is_flag=True, help="Require the C-class hypothesis to hold with no violations at all.")
@common_options
@click.pass_context
def example_e1(
    ctx: click.Context,
    n_max: int,
    strict: bool,
    seed: Optional[int],
    tol: Optional[float],
    out: str,
    fmt: str,
    workers: Optional[int],
) -> None:
    """Reproduce the worked example on its closure-truncated space."""

    settings = _settings(ctx, compareTolerance=tol, seed=seed, workers=workers)
    with _input_errors():
        report = build_e1_report(n_max, settings)

    _emit(report_envelope("example-e1", report.to_dict(), settings), report.csv_rows(), fmt, out)
    ok = report.strict_holds if strict else report.reproduced
    ctx.exit(0 if ok else 1)


@main.command("picard")
@click.argument("input_file", type=click.File("r"))
@click.option("--start", default=None, help="Start point label; every point when omitted.")
@common_options
@click.pass_context
def picard(
    ctx: click.Context,
    input_file: Any,
    start: Optional[str],
    seed: Optional[int],
    tol: Optional[float],
    out: str,
    fmt: str,
    workers: Optional[int],
) -> None:
    """Run Picard iteration on the space and map in INPUT_FILE."""

    settings = _settings(ctx, seed=seed, workers=workers)
    data = _read_json(input_file)
    # Distances on a finite space are exact, so the default stop tolerance is 0.
    rule = StopRule(stop_tol=tol or 0.0, max_iter=settings.maxIterations)
    with _input_errors():
        space, self_map = SpaceFileModel.model_validate(data).load()
        if self_map is None:
            raise InputError("space file needs a 'map'")
        if start is not None:
            traces = [iterate(space, self_map, space.index_of(start), rule)]
        else:
            traces = global_attraction(space, self_map, rule, workers=settings.workers).traces

    label = lambda i: space.labels[i]  # noqa: E731
    result = {
        "fixed_points": [label(i) for i in verify_uniqueness(space, self_map)],
        "traces": [trace.to_dict(label) for trace in traces],
    }
    rows = [
        {"start": label(t.start), "status": t.status, "steps": t.steps, "limit": label(t.fixed_point)}
        for t in traces
    ]
    _emit(report_envelope("picard", result, settings), rows, fmt, out)
    ctx.exit(0 if all(t.converged for t in traces) else 1)


@main.command("solve-volterra")
@click.argument("input_file", type=click.File("r"))
@click.option("--samples", type=click.IntRange(min=1), default=None, help="Also sample condition (ii) this many times.")
@click.option("--check-condition", is_flag=True, help="Sample condition (ii) using the conditionSamples setting.")
@common_options
@click.pass_context
def solve_volterra(
    ctx: click.Context,
    input_file: Any,
    samples: Optional[int],
    check_condition: bool,
    seed: Optional[int],
    tol: Optional[float],
    out: str,
    fmt: str,
    workers: Optional[int],
) -> None:
    """Solve the Volterra problem in INPUT_FILE ('-' reads stdin)."""

    settings = _settings(ctx, stopTolerance=tol, seed=seed, workers=workers)
    data = _read_json(input_file)
    with _input_errors():
        model = VolterraProblemModel.model_validate(data)
        problem = model.build(settings)
        solution = solve(problem, model.stop_rule(settings))
        verdict = None
        if samples is None and check_condition:
            samples = settings.conditionSamples
        if samples is not None:
            if problem.hypothesis is None:
                raise InputError("condition sampling needs a problem with a 'hypothesis'")
            verdict = check_condition_ii(
                problem,
                samples,
                box=(settings.samplingBoxLow, settings.samplingBoxHigh),
                seed=settings.seed,
                workers=settings.workers,
            )

    result: Dict[str, Any] = {"problem": model.name, "solution": solution.to_dict()}
    if verdict is not None:
        result["condition_ii"] = verdict.to_dict()
    values = solution.values
    rows = [
        {"t": float(t), **{f"x{k}": float(v) for k, v in enumerate(values[j])}}
        for j, t in enumerate(solution.grid)
    ]
    _emit(report_envelope("solve-volterra", result, settings), rows, fmt, out)
    ok = solution.converged and (verdict is None or verdict.passed)
    ctx.exit(0 if ok else 1)


if __name__ == "__main__":  # pragma: no cover - manual entrypoint
    main()
