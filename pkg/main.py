"""FastAPI entrypoint for the fixed-point lab.

Exposes the same operations as ``cli.py`` over HTTP: C-class catalog
sweeps, hypothesis classification of finite spaces, Picard runs, the worked
example report (JSON or an HTML download) and Volterra solves. Reports can be
saved under the reports root and fetched back by name.
"""
from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import Response
from pydantic import BaseModel, ConfigDict, Field, conint, confloat

import gauges
from lab_config import (
    DEFAULT_SETTINGS,
    TOOL_VERSION,
    LabSettings,
    get_config,
    load_settings,
    save_settings,
)
from lab_reports import (
    SpaceFileModel,
    VolterraProblemModel,
    build_e1_report,
    html_document,
    render_markdown_html,
    report_envelope,
)
from metric_core import validate_metric
from picard_engine import StopRule, global_attraction, iterate, verify_uniqueness
from suzuki_verifier import classify
from volterra_solver import check_condition_ii, solve

logger = logging.getLogger("suzuki_lab")

REPORT_FILE_EXTENSION = ".json"

app = FastAPI(title="Suzuki fixed-point lab", version=TOOL_VERSION)


def _validate_relative_path(path_str: str) -> str:
    raw = path_str.strip()
    if not raw:
        raise ValueError("Report name must not be empty")

    if raw.startswith(("/", "\\")) or ":" in raw:
        raise ValueError("Report name must be a relative path")

    parts: List[str] = list(Path(raw).parts)

    if any(part == ".." for part in parts):
        raise ValueError("Report name must not contain '..' segments")

    normalized = Path(*[part for part in parts if part not in (".", "")])

    if not normalized.parts:
        raise ValueError("Report name must not resolve to empty")

    if normalized.suffix != REPORT_FILE_EXTENSION:
        normalized = normalized.with_name(normalized.name + REPORT_FILE_EXTENSION)

    return normalized.as_posix()


def _resolve_report_path(name: str) -> Path:
    cfg = get_config()
    target = (cfg.reports_root / _validate_relative_path(name)).resolve()

    try:
        target.relative_to(cfg.reports_root)
    except ValueError as exc:  # pragma: no cover - symlinked roots
        raise ValueError("Resolved path escapes the reports root") from exc

    return target


def _save_report(name: Optional[str], envelope: Dict[str, Any]) -> Dict[str, Any]:
    if not name:
        return envelope
    target = _resolve_report_path(name)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(envelope, indent=2), encoding="utf8")
    saved = target.relative_to(get_config().reports_root).as_posix()
    logger.info("report saved name=%s", saved)
    return {**envelope, "saved": saved}


class CClassVerifyRequest(BaseModel):
    ids: List[int] = Field(default_factory=lambda: list(range(1, 18)))
    params: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    pointsPerAxis: Optional[conint(ge=100, le=2_000)] = None
    gridMax: Optional[confloat(gt=0)] = None

    model_config = ConfigDict(extra="ignore")


class PicardRequest(BaseModel):
    space: SpaceFileModel
    start: Optional[str] = None
    stopTolerance: confloat(ge=0) = 0.0


@app.get("/health", tags=["system"])
def health() -> Dict[str, Any]:
    cfg = get_config()

    return {
        "status": "ok",
        "version": TOOL_VERSION,
        "reportsRoot": str(cfg.reports_root),
        "settingsPath": str(cfg.settings_path),
    }


@app.get("/api/settings", tags=["settings"])
def get_settings() -> Dict[str, Any]:
    settings = load_settings()
    return {"settings": settings.model_dump()}


@app.put("/api/settings", tags=["settings"])
def update_settings(payload: LabSettings) -> Dict[str, Any]:
    merged_data = {**DEFAULT_SETTINGS.model_dump(), **payload.model_dump()}
    settings = LabSettings.model_validate(merged_data)
    save_settings(settings)
    return {"settings": settings.model_dump()}


@app.get("/api/cclass/catalog", tags=["cclass"])
def cclass_catalog() -> Dict[str, Any]:
    return {"items": [item.describe() for item in gauges.CCLASS_CATALOG.values()]}


@app.post("/api/cclass/verify", tags=["cclass"])
def cclass_verify(payload: CClassVerifyRequest) -> Dict[str, Any]:
    settings = load_settings()
    grid = gauges.SamplingGrid(
        s_max=payload.gridMax or settings.gridMax,
        points_per_axis=payload.pointsPerAxis or settings.gridPointsPerAxis,
    )

    items: List[Dict[str, Any]] = []
    try:
        for item_id in payload.ids:
            F = gauges.catalog_cclass(item_id, payload.params.get(str(item_id)))
            verdict = gauges.verify_cclass(
                F, grid, tol_c=settings.cclassTolerance, equality_band=settings.equalityBand
            )
            items.append({"id": item_id, "formula": F.formula, **verdict.to_dict()})
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc

    return {"passed": all(item["passed"] for item in items), "items": items}


@app.get("/api/example-e1", tags=["example"])
def example_e1(n_max: int = Query(50, ge=1, le=200), save: Optional[str] = None) -> Dict[str, Any]:
    settings = load_settings()
    try:
        report = build_e1_report(n_max, settings)
        return _save_report(save, report_envelope("example-e1", report.to_dict(), settings))
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.get("/api/example-e1/export", tags=["example"])
def export_example_e1(n_max: int = Query(50, ge=1, le=200)) -> Response:
    """Worked-example summary as a standalone HTML download."""

    settings = load_settings()
    try:
        report = build_e1_report(n_max, settings)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc

    html_doc = html_document(f"Worked example n_max={n_max}", render_markdown_html(report.to_markdown()))
    headers = {"Content-Disposition": f"attachment; filename=\"example-e1-n{n_max}.html\""}
    return Response(content=html_doc, media_type="text/html; charset=utf-8", headers=headers)


@app.post("/api/spaces/verify", tags=["spaces"])
def verify_space(payload: SpaceFileModel, save: Optional[str] = None) -> Dict[str, Any]:
    settings = load_settings()
    try:
        space, self_map = payload.load()
        if self_map is None:
            raise ValueError("space needs a 'map'")
        if not payload.hypotheses:
            raise ValueError("space needs at least one entry in 'hypotheses'")
        metric = validate_metric(space)
        if not metric.passed:
            return {"metric": metric.to_dict(), "classification": None}
        specs = [h.build(settings) for h in payload.hypotheses]
        summary = classify(
            space, self_map, specs, log_rel_tol=settings.logRelativeTolerance, workers=settings.workers
        )
        result = {
            "metric": metric.to_dict(),
            "classification": summary.to_dict(space),
            "reports": [report.to_dict(space) for report in summary.reports],
            "fixed_points": [space.labels[i] for i in verify_uniqueness(space, self_map)],
        }
        return _save_report(save, report_envelope("verify-space", result, settings))
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.post("/api/picard", tags=["picard"])
def picard(payload: PicardRequest) -> Dict[str, Any]:
    settings = load_settings()
    rule = StopRule(stop_tol=payload.stopTolerance, max_iter=settings.maxIterations)
    try:
        space, self_map = payload.space.load()
        if self_map is None:
            raise ValueError("space needs a 'map'")
        if payload.start is not None:
            traces = [iterate(space, self_map, space.index_of(payload.start), rule)]
        else:
            traces = global_attraction(space, self_map, rule, workers=settings.workers).traces
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc

    label = lambda i: space.labels[i]  # noqa: E731
    return {
        "fixed_points": [label(i) for i in verify_uniqueness(space, self_map)],
        "traces": [trace.to_dict(label) for trace in traces],
    }


@app.post("/api/volterra/solve", tags=["volterra"])
def volterra_solve(
    payload: VolterraProblemModel,
    samples: Optional[int] = Query(None, ge=1, le=100_000),
    check_condition: bool = False,
    save: Optional[str] = None,
) -> Dict[str, Any]:
    settings = load_settings()
    try:
        problem = payload.build(settings)
        solution = solve(problem, payload.stop_rule(settings))
        result: Dict[str, Any] = {"problem": payload.name, "solution": solution.to_dict()}
        if samples is None and check_condition:
            samples = settings.conditionSamples
        if samples is not None:
            if problem.hypothesis is None:
                raise ValueError("condition sampling needs a problem with a 'hypothesis'")
            verdict = check_condition_ii(
                problem,
                samples,
                box=(settings.samplingBoxLow, settings.samplingBoxHigh),
                seed=settings.seed,
                workers=settings.workers,
            )
            result["condition_ii"] = verdict.to_dict()
        return _save_report(save, report_envelope("solve-volterra", result, settings))
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.get("/api/reports", tags=["reports"])
def list_reports() -> Dict[str, Any]:
    root = get_config().reports_root
    names = sorted(
        path.relative_to(root).as_posix()
        for path in root.rglob(f"*{REPORT_FILE_EXTENSION}")
        if path.is_file() and not path.name.startswith(".")
    )
    return {"root": str(root), "reports": names}


@app.get("/api/reports/{name:path}", tags=["reports"])
def get_report(name: str) -> Dict[str, Any]:
    try:
        target = _resolve_report_path(name)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc

    if not target.is_file():
        raise HTTPException(status_code=404, detail="Report not found")

    try:
        return json.loads(target.read_text(encoding="utf8"))
    except ValueError as exc:
        raise HTTPException(status_code=400, detail="Report is not valid JSON") from exc


if __name__ == "__main__":  # pragma: no cover - manual/dev entrypoint
    # This allows `python main.py` in addition to `uvicorn main:app`.
    import uvicorn

    uvicorn.run(
        "main:app",
        host=os.getenv("HOST", "127.0.0.1"),
        port=int(os.getenv("PORT", "8000")),
        reload=os.getenv("UVICORN_RELOAD", "false").lower() == "true",
    )
