"""C-class functions, altering-distance pairs and integral gauges.

The three function classes that parameterise an integral-type Suzuki
contraction live here, together with sampled verifiers for each contract:

- ``CClassFn``: a combinator F(s, t) with F(s, t) <= s, and F(s, t) = s only
  when s = 0 or t = 0. Seventeen stock members are available through
  ``catalog_cclass``.
- ``GaugePair``: psi (continuous, strictly increasing, zero only at 0) and
  phi (positive on (0, inf)).
- ``IntegralGauge``: the cumulative map G(x) = int_0^x f(t) dt, either given
  in closed form or evaluated by adaptive quadrature.
"""
from __future__ import annotations

import logging
import math
import threading
import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import gamma

from verdicts import PropertyVerdict, Violation

logger = logging.getLogger(__name__)

TOL_C = 1e-9
EQUALITY_BAND = 1e-7
DEFAULT_QUAD_TOL = 1e-10
QUAD_REL_TOL = 1e-12
DEFAULT_MAX_SUBDIVISIONS = 200
MIN_CCLASS_GRID_POINTS = 10_000

Scalar = Callable[[float], float]
Binary = Callable[[float, float], float]

# Positive points used to sanity-check function-valued parameters.
_CHECK_POINTS = (0.05, 0.5, 1.0, 2.0, 5.0, 10.0)
_LN2 = math.log(2.0)


class GaugeError(ValueError):
    """Raised for malformed gauges, catalog requests or integrands."""


class QuadratureError(GaugeError):
    """Raised when adaptive quadrature does not reach its tolerance."""


# ---------------------------------------------------------------------------
# C-class functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CClassFn:
    id: Any
    params: Mapping[str, Any]
    fn: Binary
    formula: str = ""
    linear_factor: Optional[float] = None

    def eval(self, s: float, t: float) -> float:
        return float(self.fn(s, t))

    def __call__(self, s: float, t: float) -> float:
        return self.eval(s, t)

    def describe(self) -> Dict[str, Any]:
        return {
            "kind": "cclass",
            "id": self.id,
            "formula": self.formula,
            "params": {
                key: (value if isinstance(value, (int, float, str)) else getattr(value, "__name__", "callable"))
                for key, value in self.params.items()
            },
        }


@dataclass(frozen=True)
class ParamRule:
    name: str
    default: Any
    check: Callable[[Any], bool]
    description: str


@dataclass(frozen=True)
class CatalogItem:
    id: int
    formula: str
    params: Tuple[ParamRule, ...]
    build: Callable[[Mapping[str, Any]], Binary]
    linear_param: Optional[str] = None

    def describe(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "formula": self.formula,
            "params": [
                {
                    "name": rule.name,
                    "range": rule.description,
                    "default": rule.default if not callable(rule.default) else rule.default.__name__,
                }
                for rule in self.params
            ],
        }


def _is_real(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _positive(value: Any) -> bool:
    return _is_real(value) and value > 0


def _greater_than_one(value: Any) -> bool:
    return _is_real(value) and value > 1


def _unit_open(value: Any) -> bool:
    return _is_real(value) and 0 < value < 1


def _between_one_and_e(value: Any) -> bool:
    return _is_real(value) and 1 < value < math.e


def _positive_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value >= 1


def _sampled(predicate: Callable[[Callable[..., float]], bool]) -> Callable[[Any], bool]:
    def check(value: Any) -> bool:
        if not callable(value):
            return False
        try:
            return bool(predicate(value))
        except (ArithmeticError, ValueError, TypeError):
            return False

    return check


def _beta_in_unit(beta: Scalar) -> bool:
    return all(0.0 <= beta(s) < 1.0 for s in _CHECK_POINTS)


def _vanishes_only_at_zero(phi: Scalar) -> bool:
    return abs(phi(0.0)) <= TOL_C and all(phi(s) > 0.0 for s in _CHECK_POINTS)


def _h_below_one(h: Binary) -> bool:
    return all(0.0 <= h(s, t) < 1.0 for s in _CHECK_POINTS for t in _CHECK_POINTS)


def _below_diagonal(phi: Scalar) -> bool:
    return abs(phi(0.0)) <= TOL_C and all(0.0 <= phi(s) < s for s in _CHECK_POINTS)


# Default function-valued parameters, one instantiation per item.
def default_beta(s: float) -> float:
    return 1.0 / (1.0 + s)


def default_phi(s: float) -> float:
    return s / (1.0 + s)


def default_h(s: float, t: float) -> float:
    return (1.0 + s) / (1.0 + s + t)


def default_upper(s: float) -> float:
    return s * s / (1.0 + s) if s > 0 else 0.0


ITEM17_TAIL_TOL = 1e-14


@lru_cache(maxsize=8192)
def gamma_weight(t: float, tail_tol: float = ITEM17_TAIL_TOL) -> float:
    """Return (1/Gamma(1/2)) * int_0^inf e^{-x} / (sqrt(x) + t) dx.

    The substitution x = u**2 turns the integrand into 2u e^{-u^2} / (u + t),
    which is bounded at u = 0; the range is cut at U with e^{-U^2} < tail_tol.
    """

    if t < 0:
        raise GaugeError(f"gamma weight needs t >= 0, got {t}")
    if t == 0.0:
        return 1.0

    upper = math.sqrt(math.log(1.0 / tail_tol)) + 1.0
    value, _ = quad(
        lambda u: 2.0 * u * math.exp(-u * u) / (u + t),
        0.0,
        upper,
        epsabs=1e-14,
        epsrel=QUAD_REL_TOL,
        limit=DEFAULT_MAX_SUBDIVISIONS,
    )
    return min(value / float(gamma(0.5)), 1.0)


def _item4(p: Mapping[str, Any]) -> Binary:
    a = p["a"]
    log_a = math.log(a)
    # log_a((t + a^s)/(1+t)) with a^s factored out; a^-s underflows to 0 instead of a^s overflowing.
    return lambda s, t: s + (math.log1p(t * a ** -s) - math.log1p(t)) / log_a


def _item5(p: Mapping[str, Any]) -> Binary:
    log_a = math.log(p["a"])
    return lambda s, t: float(np.logaddexp(0.0, s * log_a)) - _LN2


def _item6(p: Mapping[str, Any]) -> Binary:
    l, r = p["l"], p["r"]
    return lambda s, t: (s + l) ** (1.0 / (1.0 + t) ** r) - l


def _item7(p: Mapping[str, Any]) -> Binary:
    log_a = math.log(p["a"])
    return lambda s, t: s * log_a / math.log(t + p["a"])


def _item14(p: Mapping[str, Any]) -> Binary:
    n = p["n"]

    def F(s: float, t: float) -> float:
        if s > 1.0:
            # ln(1 + s^n) = n ln s + ln(1 + s^-n)
            return (n * math.log(s) + math.log1p(s**-n)) ** (1.0 / n)
        return math.log1p(s**n) ** (1.0 / n)

    return F


def _item17(p: Mapping[str, Any]) -> Binary:
    tail = p["tail_tol"]
    return lambda s, t: s * gamma_weight(float(t), tail)


CCLASS_CATALOG: Dict[int, CatalogItem] = {
    1: CatalogItem(1, "F(s,t) = s - t", (), lambda p: lambda s, t: s - t),
    2: CatalogItem(
        2,
        "F(s,t) = m s",
        (ParamRule("m", 0.5, _unit_open, "m in (0,1)"),),
        lambda p: lambda s, t: p["m"] * s,
        linear_param="m",
    ),
    3: CatalogItem(
        3,
        "F(s,t) = s / (1+t)^r",
        (ParamRule("r", 1.0, _positive, "r in (0,inf)"),),
        lambda p: lambda s, t: s / (1.0 + t) ** p["r"],
    ),
    4: CatalogItem(
        4,
        "F(s,t) = log_a((t + a^s) / (1+t))",
        (ParamRule("a", 2.0, _greater_than_one, "a > 1"),),
        _item4,
    ),
    5: CatalogItem(
        5,
        "F(s,t) = ln((1 + a^s) / 2)",
        (ParamRule("a", 2.0, _between_one_and_e, "1 < a < e"),),
        _item5,
    ),
    6: CatalogItem(
        6,
        "F(s,t) = (s+l)^(1/(1+t)^r) - l",
        (
            ParamRule("l", 2.0, _greater_than_one, "l > 1"),
            ParamRule("r", 1.0, _positive, "r in (0,inf)"),
        ),
        _item6,
    ),
    7: CatalogItem(
        7,
        "F(s,t) = s log_(t+a) a",
        (ParamRule("a", 2.0, _greater_than_one, "a > 1"),),
        _item7,
    ),
    8: CatalogItem(
        8,
        "F(s,t) = s - ((1+s)/(2+s)) (t/(1+t))",
        (),
        lambda p: lambda s, t: s - ((1.0 + s) / (2.0 + s)) * (t / (1.0 + t)),
    ),
    9: CatalogItem(
        9,
        "F(s,t) = s beta(s), beta: [0,inf) -> [0,1)",
        (ParamRule("beta", default_beta, _sampled(_beta_in_unit), "beta(s) in [0,1) for s > 0"),),
        lambda p: lambda s, t: s * p["beta"](s),
    ),
    10: CatalogItem(
        10,
        "F(s,t) = s - t/(k+t)",
        (ParamRule("k", 1.0, _positive, "k > 0"),),
        lambda p: lambda s, t: s - t / (p["k"] + t),
    ),
    11: CatalogItem(
        11,
        "F(s,t) = s - phi(s), phi(t) = 0 iff t = 0",
        (ParamRule("phi", default_phi, _sampled(_vanishes_only_at_zero), "phi >= 0, phi(t) = 0 iff t = 0"),),
        lambda p: lambda s, t: s - p["phi"](s),
    ),
    12: CatalogItem(
        12,
        "F(s,t) = s h(s,t), h(s,t) < 1 for s,t > 0",
        (ParamRule("h", default_h, _sampled(_h_below_one), "h(s,t) in [0,1) for s,t > 0"),),
        lambda p: lambda s, t: s * p["h"](s, t),
    ),
    13: CatalogItem(
        13,
        "F(s,t) = s - ((2+t)/(1+t)) t",
        (),
        lambda p: lambda s, t: s - ((2.0 + t) / (1.0 + t)) * t,
    ),
    14: CatalogItem(
        14,
        "F(s,t) = (ln(1 + s^n))^(1/n)",
        (ParamRule("n", 2, _positive_int, "n positive integer"),),
        _item14,
    ),
    15: CatalogItem(
        15,
        "F(s,t) = phi(s), phi(0) = 0, phi(t) < t for t > 0",
        (ParamRule("phi", default_upper, _sampled(_below_diagonal), "phi(0) = 0, 0 <= phi(t) < t"),),
        lambda p: lambda s, t: p["phi"](s),
    ),
    16: CatalogItem(
        16,
        "F(s,t) = s / (1+s)^r",
        (ParamRule("r", 1.0, _positive, "r in (0,inf)"),),
        lambda p: lambda s, t: s / (1.0 + s) ** p["r"],
    ),
    17: CatalogItem(
        17,
        "F(s,t) = (s / Gamma(1/2)) int_0^inf e^-x / (sqrt(x) + t) dx",
        (ParamRule("tail_tol", ITEM17_TAIL_TOL, lambda v: _unit_open(v), "tail_tol in (0,1)"),),
        _item17,
    ),
}


def catalog_cclass(id: int, params: Optional[Mapping[str, Any]] = None) -> CClassFn:
    """Return catalog item ``id`` bound to ``params`` (defaults fill the gaps)."""

    item = CCLASS_CATALOG.get(id) if isinstance(id, int) else None
    if item is None:
        raise GaugeError(f"Unknown C-class catalog id: {id!r}")

    supplied = dict(params or {})
    known = {rule.name for rule in item.params}
    unknown = sorted(set(supplied) - known)
    if unknown:
        raise GaugeError(f"Catalog item {id} does not take parameter(s): {', '.join(unknown)}")

    bound: Dict[str, Any] = {}
    for rule in item.params:
        value = supplied.get(rule.name, rule.default)
        if not rule.check(value):
            raise GaugeError(f"Catalog item {id}: parameter {rule.name}={value!r} outside {rule.description}")
        bound[rule.name] = value

    linear_factor = float(bound[item.linear_param]) if item.linear_param else None
    return CClassFn(
        id=id,
        params=bound,
        fn=item.build(bound),
        formula=item.formula,
        linear_factor=linear_factor,
    )


def linear_cclass(beta: float) -> CClassFn:
    """F(s,t) = beta * s, the multiplier form every classical contraction uses."""

    return catalog_cclass(2, {"m": beta})


def cclass_from_spec(spec: Mapping[str, Any]) -> CClassFn:
    kind = spec.get("kind", "cclass")
    params = spec.get("params") or {}
    if kind == "linear":
        return linear_cclass(spec.get("beta", params.get("beta")))
    if kind != "cclass":
        raise GaugeError(f"Unsupported C-class spec kind: {kind!r}")
    return catalog_cclass(spec.get("id"), params)


@dataclass(frozen=True)
class SamplingGrid:
    s_max: float = 10.0
    t_max: Optional[float] = None
    points_per_axis: int = 101

    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        t_max = self.s_max if self.t_max is None else self.t_max
        return (
            np.linspace(0.0, self.s_max, self.points_per_axis),
            np.linspace(0.0, t_max, self.points_per_axis),
        )

    @property
    def size(self) -> int:
        return self.points_per_axis * self.points_per_axis


def verify_cclass(
    F: CClassFn,
    grid: SamplingGrid = SamplingGrid(),
    *,
    tol_c: float = TOL_C,
    equality_band: float = EQUALITY_BAND,
) -> PropertyVerdict:
    """Sample both C-class conditions over [0, s_max] x [0, t_max]."""

    if grid.size < MIN_CCLASS_GRID_POINTS:
        raise GaugeError(f"C-class grid needs at least {MIN_CCLASS_GRID_POINTS} points, got {grid.size}")

    verdict = PropertyVerdict(name=f"cclass[{F.id}]")
    s_axis, t_axis = grid.axes()

    for s in s_axis.tolist():
        for t in t_axis.tolist():
            verdict.checked += 1
            try:
                value = F.eval(s, t)
            except (ArithmeticError, ValueError) as exc:
                verdict.violations.append(Violation((s, t), math.nan, s, kind="error", detail=str(exc)))
                continue

            if not math.isfinite(value):
                verdict.violations.append(Violation((s, t), value, s, kind="non_finite"))
            elif value > s + tol_c:
                verdict.violations.append(Violation((s, t), value, s, kind="exceeds_s"))
            elif s > tol_c and t > tol_c and abs(value - s) <= equality_band:
                verdict.suspects.append(Violation((s, t), value, s, kind="equality_off_axes"))

    logger.info(
        "cclass sweep completed id=%s passed=%s violations=%s suspects=%s",
        F.id,
        verdict.passed,
        len(verdict.violations),
        len(verdict.suspects),
    )
    return verdict


# ---------------------------------------------------------------------------
# Altering-distance pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaugePair:
    psi: Scalar
    phi: Scalar
    psi_name: str = "psi"
    phi_name: str = "phi"
    psi_scale: Optional[float] = None

    @classmethod
    def linear(cls, psi_scale: float = 1.0, phi_scale: float = 1.0) -> "GaugePair":
        return cls(
            psi=lambda t: psi_scale * t,
            phi=lambda t: phi_scale * t,
            psi_name=f"{psi_scale:g}*t",
            phi_name=f"{phi_scale:g}*t",
            psi_scale=float(psi_scale),
        )


def _gauge_function(spec: Mapping[str, Any]) -> Tuple[Scalar, str, Optional[float]]:
    kind = spec.get("kind", "linear")
    scale = float(spec.get("scale", 1.0))
    if not math.isfinite(scale) or scale <= 0:
        raise GaugeError(f"gauge function scale must be positive, got {scale}")

    if kind == "linear":
        return (lambda t: scale * t), f"{scale:g}*t", scale
    if kind == "power":
        exponent = float(spec.get("exponent", 1.0))
        if exponent <= 0:
            raise GaugeError("power gauge function needs a positive exponent")
        return (lambda t: scale * t**exponent), f"{scale:g}*t^{exponent:g}", None
    if kind == "log1p":
        return (lambda t: scale * math.log1p(t)), f"{scale:g}*ln(1+t)", None
    raise GaugeError(f"Unknown gauge function kind: {kind!r}")


def gauge_pair_from_spec(spec: Mapping[str, Any]) -> GaugePair:
    psi, psi_name, psi_scale = _gauge_function(spec.get("psi") or {"kind": "linear"})
    phi, phi_name, _ = _gauge_function(spec.get("phi") or {"kind": "linear"})
    return GaugePair(psi=psi, phi=phi, psi_name=psi_name, phi_name=phi_name, psi_scale=psi_scale)


def _strictly_increasing(grid: Sequence[float]) -> bool:
    return all(b > a for a, b in zip(grid, grid[1:]))


def verify_gauge_pair(gp: GaugePair, grid: Sequence[float], *, tol: float = TOL_C) -> PropertyVerdict:
    """Check psi(0) = 0, psi strictly increasing and phi > 0 on a sample."""

    points = [float(x) for x in grid]
    if not points or not _strictly_increasing(points) or points[0] < 0:
        raise GaugeError("gauge pair grid must be a nonempty, strictly increasing sample of [0, s_max]")

    verdict = PropertyVerdict(name="gauge_pair")

    psi0 = float(gp.psi(0.0))
    verdict.checked += 1
    if not math.isfinite(psi0) or abs(psi0) > tol:
        verdict.violations.append(Violation((0.0,), psi0, 0.0, kind="psi_at_zero"))

    psi_values = [float(gp.psi(x)) for x in points]
    for (a, psi_a), (b, psi_b) in zip(zip(points, psi_values), zip(points[1:], psi_values[1:])):
        verdict.checked += 1
        if not (math.isfinite(psi_a) and math.isfinite(psi_b)) or psi_b <= psi_a:
            verdict.violations.append(Violation((a, b), psi_a, psi_b, kind="psi_not_increasing"))

    for x in points:
        value = float(gp.phi(x))
        verdict.checked += 1
        if not math.isfinite(value):
            verdict.violations.append(Violation((x,), value, 0.0, kind="phi_non_finite"))
        elif x > 0 and value <= 0:
            verdict.violations.append(Violation((x,), value, 0.0, kind="phi_not_positive"))
        elif x == 0 and value < 0:
            verdict.violations.append(Violation((x,), value, 0.0, kind="phi_negative_at_zero"))

    return verdict


# ---------------------------------------------------------------------------
# Integral gauges
# ---------------------------------------------------------------------------


class GaugeKind(str, Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class IntegralGauge:
    kind: GaugeKind
    name: str
    closed_form: Optional[Scalar] = None
    integrand: Optional[Scalar] = None
    quad_tol: float = DEFAULT_QUAD_TOL
    max_subdivisions: int = DEFAULT_MAX_SUBDIVISIONS
    log_form: Optional[Scalar] = None
    _cache: Dict[float, float] = field(default_factory=dict, compare=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, compare=False, repr=False)

    def __call__(self, x: float) -> float:
        x = float(x)
        if not math.isfinite(x) or x < 0:
            raise GaugeError(f"gauge {self.name} evaluated at invalid distance {x}")
        if x == 0.0:
            return 0.0
        if self.kind is GaugeKind.CLOSED_FORM:
            return float(self.closed_form(x))

        with self._lock:
            cached = self._cache.get(x)
        if cached is not None:
            return cached

        value = self._integrate(x)
        with self._lock:
            self._cache[x] = value
        return value

    def log(self, x: float) -> float:
        """Natural log of G(x); -inf at 0, finite where G itself overflows."""

        if float(x) == 0.0:
            return -math.inf
        if self.log_form is not None:
            return float(self.log_form(float(x)))
        value = self(x)
        return math.log(value) if value > 0 else -math.inf

    def _integrate(self, x: float) -> float:
        integrand = self.integrand
        name = self.name

        def checked(t: float) -> float:
            value = float(integrand(t))
            if not math.isfinite(value):
                raise GaugeError(f"integrand {name} returned non-finite value {value} at t={t}")
            return value

        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            try:
                value, abserr = quad(
                    checked,
                    0.0,
                    x,
                    epsabs=self.quad_tol,
                    epsrel=QUAD_REL_TOL,
                    limit=self.max_subdivisions,
                )
            except IntegrationWarning as exc:
                logger.warning("quadrature failed gauge=%s x=%s error=%s", name, x, exc)
                raise QuadratureError(
                    f"quadrature for gauge {name} on [0, {x}] did not converge within "
                    f"{self.max_subdivisions} subdivisions: {exc}"
                ) from exc

        if not math.isfinite(value):
            raise QuadratureError(f"quadrature for gauge {name} on [0, {x}] is not finite")
        return float(value)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "name": self.name, "quad_tol": self.quad_tol}


def closed_form_gauge(G: Scalar, name: str = "closed_form", log_form: Optional[Scalar] = None) -> IntegralGauge:
    return IntegralGauge(kind=GaugeKind.CLOSED_FORM, name=name, closed_form=G, log_form=log_form)


def quadrature_gauge(
    f: Scalar,
    name: str = "quadrature",
    quad_tol: float = DEFAULT_QUAD_TOL,
    max_subdivisions: int = DEFAULT_MAX_SUBDIVISIONS,
) -> IntegralGauge:
    if quad_tol <= 0:
        raise GaugeError("quad_tol must be positive")
    return IntegralGauge(
        kind=GaugeKind.QUADRATURE,
        name=name,
        integrand=f,
        quad_tol=quad_tol,
        max_subdivisions=max_subdivisions,
    )


def _power_tower(x: float) -> float:
    # Integer arguments are computed exactly: 9**9 must come out as 387420489.
    if float(x).is_integer():
        n = int(x)
        try:
            return float(n**n)
        except OverflowError:
            return math.inf
    try:
        return x**x
    except OverflowError:
        return math.inf


def identity_gauge() -> IntegralGauge:
    return closed_form_gauge(lambda x: x, name="identity", log_form=math.log)


def power_tower_gauge() -> IntegralGauge:
    """G(x) = x^x for x > 0 and G(0) = 0, the gauge of the worked example.

    Its nominal integrand t^t (1 + ln t) is negative on (0, 1/e), so this gauge
    is only offered in closed form; note lim_{x->0+} x^x = 1 != G(0).
    """

    return closed_form_gauge(_power_tower, name="power_tower", log_form=lambda x: x * math.log(x))


def e1_integrand(t: float) -> float:
    return t**t * (1.0 + math.log(t)) if t > 0 else 0.0


CLOSED_FORMS: Dict[str, Callable[[Mapping[str, Any]], IntegralGauge]] = {
    "identity": lambda p: identity_gauge(),
    "power_tower": lambda p: power_tower_gauge(),
    "scaled": lambda p: closed_form_gauge(
        lambda x, c=float(p.get("scale", 1.0)): c * x,
        name="scaled",
        log_form=lambda x, c=float(p.get("scale", 1.0)): math.log(c) + math.log(x),
    ),
}

INTEGRANDS: Dict[str, Callable[[Mapping[str, Any]], Scalar]] = {
    "constant": lambda p: (lambda t, c=float(p.get("value", 1.0)): c),
    "linear": lambda p: (lambda t, k=float(p.get("slope", 1.0)): k * t),
    "power": lambda p: (
        lambda t, c=float(p.get("coef", 1.0)), e=float(p.get("exponent", 1.0)): c * t**e
    ),
    "exp": lambda p: (lambda t, r=float(p.get("rate", 1.0)): math.exp(r * t)),
}


def make_integral_gauge(spec: Mapping[str, Any]) -> IntegralGauge:
    """Build a gauge from ``{"kind": ..., "name": ..., "params": {...}}``.

    ``closed_form`` specs either name a registry entry or pass ``G`` (and
    optionally ``log_G``) as callables; ``quadrature`` specs name an integrand
    or pass ``f`` directly, plus ``quad_tol`` / ``max_subdivisions``.
    """

    kind = spec.get("kind")
    params = spec.get("params") or {}

    if kind == GaugeKind.CLOSED_FORM.value:
        if callable(spec.get("G")):
            return closed_form_gauge(spec["G"], name=spec.get("name", "closed_form"), log_form=spec.get("log_G"))
        factory = CLOSED_FORMS.get(spec.get("name", ""))
        if factory is None:
            raise GaugeError(f"Unknown closed-form gauge: {spec.get('name')!r}")
        return factory(params)

    if kind == GaugeKind.QUADRATURE.value:
        f = spec.get("f")
        name = spec.get("name", "quadrature")
        if not callable(f):
            factory = INTEGRANDS.get(name)
            if factory is None:
                raise GaugeError(f"Unknown integrand: {name!r}")
            f = factory(params)
        return quadrature_gauge(
            f,
            name=name,
            quad_tol=float(spec.get("quad_tol", DEFAULT_QUAD_TOL)),
            max_subdivisions=int(spec.get("max_subdivisions", DEFAULT_MAX_SUBDIVISIONS)),
        )

    raise GaugeError(f"Unknown gauge kind: {kind!r}")


def verify_integral_gauge(gauge: IntegralGauge, grid: Iterable[float]) -> PropertyVerdict:
    """Sampled check of G(0) = 0 and monotonicity (strict for quadrature gauges)."""

    points = sorted(float(x) for x in grid)
    verdict = PropertyVerdict(name=f"integral_gauge[{gauge.name}]")

    verdict.checked += 1
    g0 = gauge(0.0)
    if g0 != 0.0:
        verdict.violations.append(Violation((0.0,), g0, 0.0, kind="nonzero_at_zero"))

    strict = gauge.kind is GaugeKind.QUADRATURE
    values: List[float] = [gauge(x) for x in points]
    for (a, ga), (b, gb) in zip(zip(points, values), zip(points[1:], values[1:])):
        if b <= a:
            continue
        verdict.checked += 1
        if gb < ga or (strict and gb <= ga):
            verdict.violations.append(Violation((a, b), ga, gb, kind="not_increasing"))

    return verdict


def verify_integrand(f: Scalar, grid: Iterable[float]) -> PropertyVerdict:
    """Sampled check that f is finite and positive on the positive grid points."""

    verdict = PropertyVerdict(name="integrand_positive")
    for t in grid:
        t = float(t)
        if t <= 0:
            continue
        verdict.checked += 1
        value = float(f(t))
        if not math.isfinite(value):
            verdict.violations.append(Violation((t,), value, 0.0, kind="non_finite"))
        elif value <= 0:
            verdict.violations.append(Violation((t,), value, 0.0, kind="not_positive"))
    return verdict
