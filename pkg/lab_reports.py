"""Input file models, the consolidated worked-example report and report rendering.

Shared by ``cli.py`` and ``main.py`` so both surfaces accept the same JSON
files and emit the same report envelopes.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from html import escape as html_escape
from typing import Any, Dict, Iterable, List, Literal, Mapping, Optional, Tuple, Union

import markdown
from pydantic import BaseModel, ConfigDict, Field, conint

from gauges import (
    CClassFn,
    GaugePair,
    IntegralGauge,
    cclass_from_spec,
    gauge_pair_from_spec,
    linear_cclass,
    make_integral_gauge,
    power_tower_gauge,
)
from lab_config import TOOL_NAME, TOOL_VERSION, LabSettings, get_config
from metric_core import FiniteMetricSpace, SelfMap, example_e1_space, space_from_json
from picard_engine import AttractionSummary, StopRule, global_attraction, verify_uniqueness
from suzuki_verifier import (
    ClassificationSummary,
    HypothesisSpec,
    Theorem,
    VerificationReport,
    as_fraction,
    classify,
)
from volterra_solver import ConditionHypothesis, VolterraProblem, make_forcing, make_kernel, make_problem

logger = logging.getLogger(__name__)

Number = Union[int, float]


# ---------------------------------------------------------------------------
# Input models
# ---------------------------------------------------------------------------


class CClassSpecModel(BaseModel):
    kind: Literal["cclass", "linear"] = "cclass"
    id: Optional[int] = None
    beta: Optional[float] = None
    params: Dict[str, Any] = Field(default_factory=dict)

    model_config = ConfigDict(extra="ignore")

    def build(self) -> CClassFn:
        return cclass_from_spec(self.model_dump())


class GaugeSpecModel(BaseModel):
    kind: Literal["closed_form", "quadrature"] = "closed_form"
    name: str = "identity"
    params: Dict[str, Any] = Field(default_factory=dict)
    quad_tol: Optional[float] = None
    max_subdivisions: Optional[int] = None

    model_config = ConfigDict(extra="ignore")

    def build(self, settings: LabSettings) -> IntegralGauge:
        spec = self.model_dump()
        spec["quad_tol"] = self.quad_tol or settings.quadTolerance
        spec["max_subdivisions"] = self.max_subdivisions or settings.quadMaxSubdivisions
        return make_integral_gauge(spec)


class GaugePairSpecModel(BaseModel):
    psi: Dict[str, Any] = Field(default_factory=lambda: {"kind": "linear"})
    phi: Dict[str, Any] = Field(default_factory=lambda: {"kind": "linear"})

    def build(self) -> GaugePair:
        return gauge_pair_from_spec(self.model_dump())


class HypothesisModel(BaseModel):
    theorem: Theorem
    alpha: Optional[Union[str, Number]] = None
    beta: Optional[float] = None
    tol: Optional[float] = None
    gauge: Optional[GaugeSpecModel] = None
    F: Optional[CClassSpecModel] = None
    gp: Optional[GaugePairSpecModel] = None

    model_config = ConfigDict(extra="ignore")

    def build(self, settings: LabSettings) -> HypothesisSpec:
        return HypothesisSpec(
            theorem=self.theorem,
            alpha=as_fraction(self.alpha) if self.alpha is not None else None,
            beta=self.beta,
            gauge=self.gauge.build(settings) if self.gauge else None,
            F=self.F.build() if self.F else None,
            gp=self.gp.build() if self.gp else None,
            tol=self.tol if self.tol is not None else settings.compareTolerance,
        )


class SpaceFileModel(BaseModel):
    points: List[Dict[str, Any]]
    dist: Optional[List[List[float]]] = None
    map: Optional[List[int]] = None
    hypotheses: List[HypothesisModel] = Field(default_factory=list)

    model_config = ConfigDict(extra="ignore")

    def load(self) -> Tuple[FiniteMetricSpace, Optional[SelfMap]]:
        return space_from_json(self.model_dump(include={"points", "dist", "map"}))


class ConditionModel(BaseModel):
    alpha: Union[str, Number]
    F: CClassSpecModel
    gp: GaugePairSpecModel = Field(default_factory=GaugePairSpecModel)
    gauge: GaugeSpecModel = Field(default_factory=GaugeSpecModel)
    tol: Optional[float] = None

    def build(self, settings: LabSettings) -> ConditionHypothesis:
        return ConditionHypothesis(
            alpha=as_fraction(self.alpha),
            F=self.F.build(),
            gp=self.gp.build(),
            gauge=self.gauge.build(settings),
            tol=self.tol if self.tol is not None else settings.compareTolerance,
        )


class VolterraProblemModel(BaseModel):
    name: str = "volterra"
    g: Union[Dict[str, Any], List[float]] = Field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    K: Dict[str, Any]
    M: conint(ge=1) = 1000
    dim: conint(ge=1) = 1
    stop_tol: Optional[float] = Field(default=None, ge=0)
    max_iter: Optional[conint(ge=1)] = None
    hypothesis: Optional[ConditionModel] = None

    model_config = ConfigDict(extra="ignore")

    def build(self, settings: LabSettings) -> VolterraProblem:
        return make_problem(
            make_forcing(self.g),
            make_kernel(self.K),
            self.M,
            dim=self.dim,
            hypothesis=self.hypothesis.build(settings) if self.hypothesis else None,
            name=self.name,
        )

    def stop_rule(self, settings: LabSettings) -> StopRule:
        return StopRule(
            stop_tol=self.stop_tol if self.stop_tol is not None else settings.stopTolerance,
            max_iter=self.max_iter or settings.maxIterations,
        )


# ---------------------------------------------------------------------------
# Envelope and rendering
# ---------------------------------------------------------------------------


def report_envelope(command: str, result: Mapping[str, Any], settings: LabSettings) -> Dict[str, Any]:
    """Wrap ``result`` with the tool version, config echo and tolerances used."""

    cfg = get_config()
    return {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "command": command,
        "config": {"reportsRoot": str(cfg.reports_root), "settings": settings.model_dump(mode="json")},
        "tolerances": settings.tolerances(),
        "result": dict(result),
    }


def render_json(data: Mapping[str, Any]) -> str:
    return json.dumps(data, indent=2) + "\n"


def render_csv(rows: Iterable[Mapping[str, Any]]) -> str:
    rows = list(rows)
    buffer = io.StringIO()
    if not rows:
        return ""
    fieldnames: List[str] = []
    for row in rows:
        for key in row:
            if key not in fieldnames:
                fieldnames.append(key)
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in row.items()})
    return buffer.getvalue()


def render_markdown_html(markdown_text: str) -> str:
    return markdown.markdown(
        markdown_text,
        extensions=["extra", "pymdownx.tasklist"],
        output_format="html5",
    )


def html_document(title: str, body_html: str) -> str:
    return """<!doctype html>
<html lang=\"en\">
<head>
  <meta charset=\"utf-8\" />
  <title>{title}</title>
  <meta name=\"viewport\" content=\"width=device-width, initial-scale=1\" />
</head>
<body>
  <div class=\"content-view\">
{body}
  </div>
</body>
</html>
""".format(title=html_escape(title), body=body_html)


# ---------------------------------------------------------------------------
# Worked example report
# ---------------------------------------------------------------------------

E1_ALPHA = "5/12"
E1_BETA = 0.5
E1_FIXED_POINT = "(0,0)"
E1_BRANCIARI_WITNESS = ("(5,6)", "(5,4)")
E1_VACUOUS_PAIRS = (("(5,6)", "(5,4)"), ("(5,4)", "(5,6)"))
# Active pairs with d(Tx,Ty) = d(x,y) = 4; the stated example misses them.
E1_DOCUMENTED_PAIRS = frozenset({("(5,4)", "(5,0)"), ("(5,0)", "(5,4)")})
E1_MAX_STEPS = 2


def e1_hypotheses(tol: float) -> List[HypothesisSpec]:
    """alpha = 5/12, beta = 1/2, F(s,t) = s/2, psi(t) = 2t, phi(t) = t, G(x) = x^x."""

    gauge = power_tower_gauge()
    alpha = as_fraction(E1_ALPHA)
    return [
        HypothesisSpec(Theorem.BANACH, beta=E1_BETA, tol=tol),
        HypothesisSpec(Theorem.BRANCIARI, beta=E1_BETA, gauge=gauge, tol=tol),
        HypothesisSpec(Theorem.SUZUKI, alpha=alpha, beta=E1_BETA, tol=tol),
        HypothesisSpec(Theorem.INTEGRAL_SUZUKI, alpha=alpha, beta=E1_BETA, gauge=gauge, tol=tol),
        HypothesisSpec(
            Theorem.CCLASS_INTEGRAL_SUZUKI,
            alpha=alpha,
            F=linear_cclass(E1_BETA),
            gp=GaugePair.linear(2.0, 1.0),
            gauge=gauge,
            tol=tol,
        ),
    ]


@dataclass
class E1Report:
    n_max: int
    space: FiniteMetricSpace
    self_map: SelfMap
    summary: ClassificationSummary
    attraction: AttractionSummary
    fixed_points: List[str]
    claims: Dict[str, bool] = field(default_factory=dict)
    discrepancies: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def cclass(self) -> VerificationReport:
        return self.summary.report_for(Theorem.CCLASS_INTEGRAL_SUZUKI)

    @property
    def reproduced(self) -> bool:
        return all(self.claims.values())

    @property
    def strict_holds(self) -> bool:
        return self.reproduced and self.cclass.holds

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_max": self.n_max,
            "points": self.space.size,
            "classification": self.summary.to_dict(self.space),
            "reports": [report.to_dict(self.space) for report in self.summary.reports],
            "fixed_points": self.fixed_points,
            "attraction": self.attraction.to_dict(self.space),
            "claims": dict(self.claims),
            "documented_discrepancies": list(self.discrepancies),
            "reproduced": self.reproduced,
        }

    def csv_rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "theorem": report.theorem.value,
                "holds": report.holds,
                "pairs": report.total_pairs,
                "active": report.premise_active_pairs,
                "vacuous": report.vacuous_pairs,
                "violations": len(report.violations),
                "min_feasible_beta": report.min_feasible_beta,
            }
            for report in self.summary.reports
        ]

    def to_markdown(self) -> str:
        lines = [
            f"# Worked example (n_max = {self.n_max})",
            "",
            f"{self.space.size} points, fixed points: {', '.join(self.fixed_points)}.",
            "",
            "| Theorem | holds | active | vacuous | violations |",
            "|---|---|---|---|---|",
        ]
        for report in self.summary.reports:
            lines.append(
                f"| {report.theorem.value} | {report.holds} | {report.premise_active_pairs} "
                f"| {report.vacuous_pairs} | {len(report.violations)} |"
            )
        lines += ["", "## Claims", ""]
        lines += [f"- [{'x' if ok else ' '}] {name.replace('_', ' ')}" for name, ok in self.claims.items()]
        if self.discrepancies:
            lines += ["", "## Documented discrepancies", ""]
            for item in self.discrepancies:
                lines.append(
                    f"- `{item['x']}`, `{item['y']}`: {item['cond_lhs']} > {item['cond_rhs']} "
                    f"with d(x,y) = d(Tx,Ty) = {item['d_xy']}"
                )
        if self.summary.family_ratios:
            n, ratio = self.summary.family_ratios[-1]
            lines += ["", f"Family ratio at n = {n}: {ratio.numerator}/{ratio.denominator}."]
        return "\n".join(lines) + "\n"


def _pair_labels(report: VerificationReport) -> List[Tuple[str, str]]:
    return [(v.x_label, v.y_label) for v in report.violations]


def _evaluate_e1_claims(report: E1Report) -> None:
    space = report.space
    banach = report.summary.report_for(Theorem.BANACH)
    branciari = report.summary.report_for(Theorem.BRANCIARI)
    cclass = report.cclass

    witness = next(
        (v for v in branciari.violations if (v.x_label, v.y_label) == E1_BRANCIARI_WITNESS),
        None,
    )
    vacuous = set(cclass.vacuous)
    ratios = [r for _, r in report.summary.family_ratios]

    report.claims = {
        "banach_fails": not banach.holds,
        "branciari_fails": not branciari.holds,
        "branciari_witness_9_pow_9": witness is not None and witness.cond_lhs == 387420489.0,
        "premise_vacuous_pairs": all(
            (space.index_of(x), space.index_of(y)) in vacuous for x, y in E1_VACUOUS_PAIRS
        ),
        "cclass_violations_documented": set(_pair_labels(cclass)) <= E1_DOCUMENTED_PAIRS,
        "unique_fixed_point": report.fixed_points == [E1_FIXED_POINT],
        "global_attraction": report.attraction.all_converged and report.attraction.max_steps <= E1_MAX_STEPS,
        "family_ratio_increasing": all(a < b for a, b in zip(ratios, ratios[1:])) and all(r < 1 for r in ratios),
    }
    report.discrepancies = [v.to_dict() for v in cclass.violations if (v.x_label, v.y_label) in E1_DOCUMENTED_PAIRS]


def build_e1_report(n_max: int, settings: LabSettings, *, workers: Optional[int] = None) -> E1Report:
    space, self_map = example_e1_space(n_max)
    workers = workers or settings.workers
    summary = classify(
        space,
        self_map,
        e1_hypotheses(settings.compareTolerance),
        log_rel_tol=settings.logRelativeTolerance,
        workers=workers,
    )
    attraction = global_attraction(space, self_map, StopRule(0.0, settings.maxIterations), workers=workers)
    report = E1Report(
        n_max=n_max,
        space=space,
        self_map=self_map,
        summary=summary,
        attraction=attraction,
        fixed_points=[space.labels[i] for i in verify_uniqueness(space, self_map)],
    )
    _evaluate_e1_claims(report)
    logger.info(
        "e1 report completed n_max=%s reproduced=%s cclass_holds=%s",
        n_max,
        report.reproduced,
        report.cclass.holds,
    )
    return report
