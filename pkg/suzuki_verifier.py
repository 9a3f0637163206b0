"""Exhaustive hypothesis checks for contraction-type fixed-point theorems.

Every ordered pair (x, y), x != y, of a finite space is examined against one
of five hypotheses:

- Banach:           d(Tx,Ty) <= beta d(x,y)
- Branciari:        G(d(Tx,Ty)) <= beta G(d(x,y))
- Suzuki:           alpha d(x,Tx) <= d(x,y)  =>  d(Tx,Ty) <= beta d(x,y)
- IntegralSuzuki:   alpha d(x,Tx) <= d(x,y)  =>  G(d(Tx,Ty)) <= beta G(d(x,y))
- CClassIntegralSuzuki:
                    alpha d(x,Tx) <= d(x,y)  =>
                    psi(G(d(Tx,Ty))) <= F(psi(G(d(x,y))), phi(G(d(x,y))))

where G is an integral gauge. Pairs whose Suzuki premise fails are counted as
vacuous. Reports carry every failing pair as a witness.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from gauges import CClassFn, GaugeError, GaugePair, IntegralGauge
from metric_core import FiniteMetricSpace, MetricError, SelfMap
from verdicts import json_float

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
LOG_REL_TOL = 1e-12

Rational = Union[Fraction, int, float, str]


class HypothesisError(ValueError):
    """Raised for hypothesis parameters outside their admissible ranges."""


class Theorem(str, Enum):
    BANACH = "Banach"
    BRANCIARI = "Branciari"
    SUZUKI = "Suzuki"
    INTEGRAL_SUZUKI = "IntegralSuzuki"
    CCLASS_INTEGRAL_SUZUKI = "CClassIntegralSuzuki"


SUZUKI_TYPE = {Theorem.SUZUKI, Theorem.INTEGRAL_SUZUKI, Theorem.CCLASS_INTEGRAL_SUZUKI}
BETA_TYPE = {Theorem.BANACH, Theorem.BRANCIARI, Theorem.SUZUKI, Theorem.INTEGRAL_SUZUKI}
INTEGRAL_TYPE = {Theorem.BRANCIARI, Theorem.INTEGRAL_SUZUKI, Theorem.CCLASS_INTEGRAL_SUZUKI}


def as_fraction(value: Rational) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise HypothesisError(f"not a number: {value!r}")
    if isinstance(value, (int, str)):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise HypothesisError(f"not a rational number: {value!r}") from exc
    if isinstance(value, float) and math.isfinite(value):
        return Fraction(value)
    raise HypothesisError(f"not a finite number: {value!r}")


def _require_alpha(alpha: Rational) -> Fraction:
    value = as_fraction(alpha)
    if not 0 < value <= Fraction(1, 2):
        raise HypothesisError(f"alpha must lie in (0, 1/2], got {value}")
    return value


def _require_beta(beta: float) -> float:
    if beta is None or isinstance(beta, bool) or not 0.0 < float(beta) < 1.0:
        raise HypothesisError(f"beta must lie in (0, 1), got {beta!r}")
    return float(beta)


def _require_tol(tol: float) -> float:
    if tol is None or not float(tol) >= 0.0:
        raise HypothesisError(f"tol must be nonnegative, got {tol!r}")
    return float(tol)


@dataclass(frozen=True)
class HypothesisSpec:
    theorem: Theorem
    alpha: Optional[Rational] = None
    beta: Optional[float] = None
    gauge: Optional[IntegralGauge] = None
    F: Optional[CClassFn] = None
    gp: Optional[GaugePair] = None
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        object.__setattr__(self, "theorem", Theorem(self.theorem))
        object.__setattr__(self, "tol", _require_tol(self.tol))
        if self.theorem in SUZUKI_TYPE:
            object.__setattr__(self, "alpha", _require_alpha(self.alpha))
        if self.theorem in BETA_TYPE:
            object.__setattr__(self, "beta", _require_beta(self.beta))
        if self.theorem in INTEGRAL_TYPE and self.gauge is None:
            raise HypothesisError(f"{self.theorem.value} needs an integral gauge")
        if self.theorem is Theorem.CCLASS_INTEGRAL_SUZUKI and (self.F is None or self.gp is None):
            raise HypothesisError("CClassIntegralSuzuki needs a C-class function F and a gauge pair")


@dataclass(frozen=True)
class PairViolation:
    x: int
    y: int
    x_label: str
    y_label: str
    d_xy: float
    d_txty: float
    premise_lhs: Optional[float]
    premise_rhs: Optional[float]
    cond_lhs: float
    cond_rhs: float
    kind: str = "contraction"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.x_label,
            "y": self.y_label,
            "d_xy": json_float(self.d_xy),
            "d_TxTy": json_float(self.d_txty),
            "premise_lhs": json_float(self.premise_lhs),
            "premise_rhs": json_float(self.premise_rhs),
            "cond_lhs": json_float(self.cond_lhs),
            "cond_rhs": json_float(self.cond_rhs),
            "kind": self.kind,
        }


@dataclass
class VerificationReport:
    theorem: Theorem
    total_pairs: int = 0
    premise_active_pairs: int = 0
    vacuous_pairs: int = 0
    violations: List[PairViolation] = field(default_factory=list)
    vacuous: List[Tuple[int, int]] = field(default_factory=list)
    min_feasible_beta: Optional[float] = None
    worst_pair: Optional[Tuple[int, int]] = None
    log_space_pairs: int = 0
    _vacuous_set: Optional[FrozenSet[Tuple[int, int]]] = field(default=None, init=False, repr=False, compare=False)

    @property
    def holds(self) -> bool:
        return not self.violations

    def is_vacuous(self, x: int, y: int) -> bool:
        if self._vacuous_set is None:
            self._vacuous_set = frozenset(self.vacuous)
        return (x, y) in self._vacuous_set

    def to_dict(self, space: Optional[FiniteMetricSpace] = None) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "theorem": self.theorem.value,
            "holds": self.holds,
            "pairs": self.total_pairs,
            "active": self.premise_active_pairs,
            "vacuous": self.vacuous_pairs,
            "violations": [v.to_dict() for v in self.violations],
        }
        if self.min_feasible_beta is not None:
            data["min_feasible_beta"] = json_float(self.min_feasible_beta)
        if self.worst_pair is not None and space is not None:
            data["worst_pair"] = [space.labels[self.worst_pair[0]], space.labels[self.worst_pair[1]]]
        if self.log_space_pairs:
            data["log_space_pairs"] = self.log_space_pairs
        return data


# (ok, lhs, rhs, ratio, kind, used_log_space)
Outcome = Tuple[bool, float, float, Optional[float], str, bool]
Conclusion = Callable[[float, float], Outcome]


@dataclass
class _Partial:
    active: int = 0
    vacuous: List[Tuple[int, int]] = field(default_factory=list)
    violations: List[PairViolation] = field(default_factory=list)
    best_ratio: Optional[float] = None
    best_pair: Optional[Tuple[int, int]] = None
    log_space: int = 0


def _check_inputs(space: FiniteMetricSpace, self_map: SelfMap) -> None:
    if len(self_map) != space.size:
        raise MetricError(f"dimension mismatch: map has {len(self_map)} entries for {space.size} points")


def _premise(space: FiniteMetricSpace, alpha: Fraction, i: int, ti: int, j: int, tol: float) -> Tuple[bool, float, float]:
    lhs = float(alpha) * space.d(i, ti)
    rhs = space.d(i, j)
    if space.integral:
        # alpha d(x,Tx) <= d(x,y) compared in integers, e.g. 5 d(x,Tx) <= 12 d(x,y).
        active = alpha.numerator * space.int_d(i, ti) <= alpha.denominator * space.int_d(i, j)
        return active, lhs, rhs
    return lhs <= rhs + tol, lhs, rhs


def _sweep_rows(
    space: FiniteMetricSpace,
    self_map: SelfMap,
    rows: Sequence[int],
    alpha: Optional[Fraction],
    conclusion: Conclusion,
    tol: float,
) -> _Partial:
    part = _Partial()
    n = space.size
    for i in rows:
        ti = self_map(i)
        for j in range(n):
            if j == i:
                continue
            premise_lhs: Optional[float] = None
            premise_rhs: Optional[float] = None
            if alpha is not None:
                active, premise_lhs, premise_rhs = _premise(space, alpha, i, ti, j, tol)
                if not active:
                    part.vacuous.append((i, j))
                    continue
            part.active += 1

            tj = self_map(j)
            m = space.d(i, j)
            d_t = space.d(ti, tj)
            ok, lhs, rhs, ratio, kind, used_log = conclusion(d_t, m)
            if used_log:
                part.log_space += 1
            if ratio is not None and (part.best_ratio is None or ratio > part.best_ratio):
                part.best_ratio = ratio
                part.best_pair = (i, j)
            if not ok:
                part.violations.append(
                    PairViolation(
                        x=i,
                        y=j,
                        x_label=space.labels[i],
                        y_label=space.labels[j],
                        d_xy=m,
                        d_txty=d_t,
                        premise_lhs=premise_lhs,
                        premise_rhs=premise_rhs,
                        cond_lhs=lhs,
                        cond_rhs=rhs,
                        kind=kind,
                    )
                )
    return part


def _run(
    theorem: Theorem,
    space: FiniteMetricSpace,
    self_map: SelfMap,
    alpha: Optional[Fraction],
    conclusion: Conclusion,
    tol: float,
    workers: int,
    track_ratio: bool,
) -> VerificationReport:
    _check_inputs(space, self_map)
    n = space.size
    rows = list(range(n))

    if workers > 1 and n > 1:
        size = math.ceil(n / workers)
        chunks = [rows[start : start + size] for start in range(0, n, size)]
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="pair-sweep") as pool:
            partials = list(pool.map(lambda c: _sweep_rows(space, self_map, c, alpha, conclusion, tol), chunks))
    else:
        partials = [_sweep_rows(space, self_map, rows, alpha, conclusion, tol)]

    report = VerificationReport(theorem=theorem, total_pairs=n * (n - 1))
    for part in partials:
        report.premise_active_pairs += part.active
        report.vacuous.extend(part.vacuous)
        report.violations.extend(part.violations)
        report.log_space_pairs += part.log_space
        if part.best_ratio is not None and (
            report.min_feasible_beta is None or part.best_ratio > report.min_feasible_beta
        ):
            report.min_feasible_beta = part.best_ratio
            report.worst_pair = part.best_pair
    report.vacuous_pairs = len(report.vacuous)
    report._vacuous_set = frozenset(report.vacuous)

    if track_ratio and report.min_feasible_beta is None:
        report.min_feasible_beta = 0.0
    if not track_ratio:
        report.min_feasible_beta = None

    logger.info(
        "hypothesis check completed theorem=%s holds=%s pairs=%s active=%s vacuous=%s violations=%s",
        theorem.value,
        report.holds,
        report.total_pairs,
        report.premise_active_pairs,
        report.vacuous_pairs,
        len(report.violations),
    )
    return report


def _evaluate_gauge(gauge: IntegralGauge, distance: float) -> float:
    try:
        return gauge(distance)
    except GaugeError as exc:
        raise GaugeError(f"gauge {gauge.name} failed at distance {distance}: {exc}") from exc


def _log_gauge(gauge: IntegralGauge, distance: float) -> float:
    try:
        return gauge.log(distance)
    except (GaugeError, ValueError) as exc:
        raise GaugeError(f"gauge {gauge.name} failed at distance {distance}: {exc}") from exc


def _log_compare(gauge: IntegralGauge, beta: float, d_t: float, m: float, rel_tol: float) -> Tuple[bool, float]:
    """Compare G(d_t) <= beta G(m) as ln G(d_t) <= ln beta + ln G(m)."""

    log_lhs = _log_gauge(gauge, d_t)
    log_rhs = math.log(beta) + _log_gauge(gauge, m)
    if log_lhs == -math.inf:
        return True, -math.inf
    slack = rel_tol * max(1.0, abs(log_rhs))
    return log_lhs <= log_rhs + slack, log_lhs - _log_gauge(gauge, m)


def _safe_exp(value: float) -> float:
    try:
        return math.exp(value)
    except OverflowError:
        return math.inf


def _distance_conclusion(beta: float, tol: float) -> Conclusion:
    def conclude(d_t: float, m: float) -> Outcome:
        rhs = beta * m
        return d_t <= rhs + tol, d_t, rhs, d_t / m, "contraction", False

    return conclude


def _gauge_conclusion(beta: float, gauge: IntegralGauge, tol: float, rel_tol: float) -> Conclusion:
    def conclude(d_t: float, m: float) -> Outcome:
        lhs = _evaluate_gauge(gauge, d_t)
        g_m = _evaluate_gauge(gauge, m)
        rhs = beta * g_m
        if math.isfinite(lhs) and math.isfinite(g_m) and g_m > 0:
            return lhs <= rhs + tol, lhs, rhs, lhs / g_m, "contraction", False
        ok, log_ratio = _log_compare(gauge, beta, d_t, m, rel_tol)
        return ok, lhs, rhs, _safe_exp(log_ratio), "contraction", True

    return conclude


def _cclass_conclusion(
    F: CClassFn,
    gp: GaugePair,
    gauge: IntegralGauge,
    tol: float,
    rel_tol: float,
) -> Conclusion:
    log_route = F.linear_factor is not None and gp.psi_scale is not None and 0 < F.linear_factor < 1

    def conclude(d_t: float, m: float) -> Outcome:
        g_t = _evaluate_gauge(gauge, d_t)
        g_m = _evaluate_gauge(gauge, m)
        lhs = rhs = math.inf
        try:
            if math.isfinite(g_t):
                lhs = float(gp.psi(g_t))
            if math.isfinite(g_m):
                rhs = F.eval(float(gp.psi(g_m)), float(gp.phi(g_m)))
        except ArithmeticError:
            # Out-of-range intermediates stay +inf: log route or an "overflow" witness.
            pass
        if math.isfinite(lhs) and math.isfinite(rhs):
            return lhs <= rhs + tol, lhs, rhs, None, "contraction", False
        if log_route:
            # psi = A t and F = beta s: A G(d_t) <= beta A G(m) reduces to the gauge comparison.
            ok, _ = _log_compare(gauge, F.linear_factor, d_t, m, rel_tol)
            return ok, lhs, rhs, None, "contraction", True
        return False, lhs, rhs, None, "overflow", False

    return conclude


def check_banach(
    space: FiniteMetricSpace,
    self_map: SelfMap,
    beta: float,
    tol: float = DEFAULT_TOL,
    *,
    workers: int = 1,
) -> VerificationReport:
    beta, tol = _require_beta(beta), _require_tol(tol)
    return _run(Theorem.BANACH, space, self_map, None, _distance_conclusion(beta, tol), tol, workers, True)


def check_branciari(
    space: FiniteMetricSpace,
    self_map: SelfMap,
    beta: float,
    gauge: IntegralGauge,
    tol: float = DEFAULT_TOL,
    *,
    log_rel_tol: float = LOG_REL_TOL,
    workers: int = 1,
) -> VerificationReport:
    beta, tol = _require_beta(beta), _require_tol(tol)
    conclusion = _gauge_conclusion(beta, gauge, tol, log_rel_tol)
    return _run(Theorem.BRANCIARI, space, self_map, None, conclusion, tol, workers, True)


def check_suzuki(
    space: FiniteMetricSpace,
    self_map: SelfMap,
    alpha: Rational,
    beta: float,
    tol: float = DEFAULT_TOL,
    *,
    workers: int = 1,
) -> VerificationReport:
    alpha, beta, tol = _require_alpha(alpha), _require_beta(beta), _require_tol(tol)
    return _run(Theorem.SUZUKI, space, self_map, alpha, _distance_conclusion(beta, tol), tol, workers, True)


def check_integral_suzuki(
    space: FiniteMetricSpace,
    self_map: SelfMap,
    alpha: Rational,
    beta: float,
    gauge: IntegralGauge,
    tol: float = DEFAULT_TOL,
    *,
    log_rel_tol: float = LOG_REL_TOL,
    workers: int = 1,
) -> VerificationReport:
    alpha, beta, tol = _require_alpha(alpha), _require_beta(beta), _require_tol(tol)
    conclusion = _gauge_conclusion(beta, gauge, tol, log_rel_tol)
    return _run(Theorem.INTEGRAL_SUZUKI, space, self_map, alpha, conclusion, tol, workers, True)


def check_cclass_integral_suzuki(
    space: FiniteMetricSpace,
    self_map: SelfMap,
    alpha: Rational,
    F: CClassFn,
    gp: GaugePair,
    gauge: IntegralGauge,
    tol: float = DEFAULT_TOL,
    *,
    log_rel_tol: float = LOG_REL_TOL,
    workers: int = 1,
) -> VerificationReport:
    alpha, tol = _require_alpha(alpha), _require_tol(tol)
    conclusion = _cclass_conclusion(F, gp, gauge, tol, log_rel_tol)
    return _run(Theorem.CCLASS_INTEGRAL_SUZUKI, space, self_map, alpha, conclusion, tol, workers, False)


def check_hypothesis(
    space: FiniteMetricSpace,
    self_map: SelfMap,
    spec: HypothesisSpec,
    *,
    log_rel_tol: float = LOG_REL_TOL,
    workers: int = 1,
) -> VerificationReport:
    theorem = spec.theorem
    if theorem is Theorem.BANACH:
        return check_banach(space, self_map, spec.beta, spec.tol, workers=workers)
    if theorem is Theorem.BRANCIARI:
        return check_branciari(
            space, self_map, spec.beta, spec.gauge, spec.tol, log_rel_tol=log_rel_tol, workers=workers
        )
    if theorem is Theorem.SUZUKI:
        return check_suzuki(space, self_map, spec.alpha, spec.beta, spec.tol, workers=workers)
    if theorem is Theorem.INTEGRAL_SUZUKI:
        return check_integral_suzuki(
            space, self_map, spec.alpha, spec.beta, spec.gauge, spec.tol, log_rel_tol=log_rel_tol, workers=workers
        )
    return check_cclass_integral_suzuki(
        space, self_map, spec.alpha, spec.F, spec.gp, spec.gauge, spec.tol, log_rel_tol=log_rel_tol, workers=workers
    )


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def sup_ratio(space: FiniteMetricSpace, self_map: SelfMap) -> Tuple[Optional[float], Optional[Tuple[int, int]]]:
    """max over x != y of d(Tx,Ty) / d(x,y), with the attaining pair."""

    _check_inputs(space, self_map)
    n = space.size
    if n < 2:
        return None, None
    image = np.array(self_map.image)
    mapped = space.dist[np.ix_(image, image)]
    ratios = np.full((n, n), -np.inf)
    off = ~np.eye(n, dtype=bool)
    ratios[off] = mapped[off] / space.dist[off]
    i, j = np.unravel_index(int(np.argmax(ratios)), ratios.shape)
    return float(ratios[i, j]), (int(i), int(j))


def e1_family_ratios(space: FiniteMetricSpace, self_map: SelfMap) -> List[Tuple[int, Fraction]]:
    """Exact d(Tx,Ty)/d(x,y) for x = (n+12, n+13), y = (n, 0), each n present."""

    if space.coords is None or not space.integral:
        return []
    index = {c: i for i, c in enumerate(space.coords) if c is not None}
    ratios: List[Tuple[int, Fraction]] = []
    n = 1
    while (n + 12, n + 13) in index:
        x, y = index[(n + 12, n + 13)], index.get((n, 0))
        if y is not None:
            ratios.append((n, Fraction(space.int_d(self_map(x), self_map(y)), space.int_d(x, y))))
        n += 1
    return ratios


@dataclass
class ClassificationSummary:
    reports: List[VerificationReport]
    sup_ratio: Optional[float] = None
    sup_pair: Optional[Tuple[int, int]] = None
    family_ratios: List[Tuple[int, Fraction]] = field(default_factory=list)

    def report_for(self, theorem: Union[Theorem, str]) -> VerificationReport:
        theorem = Theorem(theorem)
        for report in self.reports:
            if report.theorem is theorem:
                return report
        raise KeyError(theorem.value)

    def table(self) -> Dict[str, bool]:
        return {report.theorem.value: report.holds for report in self.reports}

    def to_dict(self, space: Optional[FiniteMetricSpace] = None) -> Dict[str, Any]:
        rows = []
        for report in self.reports:
            row: Dict[str, Any] = {
                "theorem": report.theorem.value,
                "holds": report.holds,
                "violations": len(report.violations),
                "active": report.premise_active_pairs,
                "vacuous": report.vacuous_pairs,
            }
            if report.violations:
                row["witness"] = report.violations[0].to_dict()
            rows.append(row)

        data: Dict[str, Any] = {"table": rows, "sup_ratio": json_float(self.sup_ratio)}
        if self.sup_pair is not None and space is not None:
            data["sup_pair"] = [space.labels[self.sup_pair[0]], space.labels[self.sup_pair[1]]]
        if self.family_ratios:
            data["family_ratios"] = [
                {"n": n, "ratio": float(r), "exact": f"{r.numerator}/{r.denominator}"} for n, r in self.family_ratios
            ]
        return data


def classify(
    space: FiniteMetricSpace,
    self_map: SelfMap,
    specs: Sequence[HypothesisSpec],
    *,
    log_rel_tol: float = LOG_REL_TOL,
    workers: int = 1,
) -> ClassificationSummary:
    reports = [
        check_hypothesis(space, self_map, spec, log_rel_tol=log_rel_tol, workers=workers) for spec in specs
    ]
    ratio, pair = sup_ratio(space, self_map)
    summary = ClassificationSummary(
        reports=reports,
        sup_ratio=ratio,
        sup_pair=pair,
        family_ratios=e1_family_ratios(space, self_map),
    )
    logger.info("classification completed table=%s sup_ratio=%s", summary.table(), ratio)
    return summary
