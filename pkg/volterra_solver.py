"""Successive approximation for x(t) = g(t) + int_0^t K(s, x(s)) ds on [0, 1].

Grid functions are arrays of shape (M+1, n): one row per node t_j = j/M, one
column per coordinate. Distances are the max norm over nodes and coordinates.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from gauges import CClassFn, GaugePair, IntegralGauge
from picard_engine import PicardTrace, StopRule, iterate_operator
from verdicts import PropertyVerdict, Violation, json_float

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9

Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]
Forcing = Union[Callable[[np.ndarray], np.ndarray], Sequence[float], np.ndarray]


class VolterraError(ValueError):
    """Raised for malformed problems and non-finite kernel values."""


# ---------------------------------------------------------------------------
# Kernel and forcing registries
# ---------------------------------------------------------------------------


def _number(params: Mapping[str, Any], key: str, default: float) -> float:
    value = params.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise VolterraError(f"parameter {key!r} must be a finite number, got {value!r}")
    return float(value)


def _coefficients(params: Mapping[str, Any]) -> List[float]:
    coefs = params.get("coefs")
    if not isinstance(coefs, list) or not coefs:
        raise VolterraError("polynomial needs a nonempty 'coefs' list (constant term first)")
    return [_number({"c": c}, "c", 0.0) for c in coefs]


def _polyval(coefs: Sequence[float], x: np.ndarray) -> np.ndarray:
    return np.polynomial.polynomial.polyval(x, coefs)


def _zero_kernel(params: Mapping[str, Any]) -> Kernel:
    return lambda s, x: np.zeros_like(x, dtype=float)


def _linear_kernel(params: Mapping[str, Any]) -> Kernel:
    lam = _number(params, "lambda", 1.0)
    return lambda s, x: lam * x


def _sine_kernel(params: Mapping[str, Any]) -> Kernel:
    lam = _number(params, "lambda", 1.0)
    return lambda s, x: lam * np.sin(x)


def _polynomial_kernel(params: Mapping[str, Any]) -> Kernel:
    coefs = _coefficients(params)
    return lambda s, x: _polyval(coefs, x)


KERNELS: Dict[str, Callable[[Mapping[str, Any]], Kernel]] = {
    "zero": _zero_kernel,
    "linear": _linear_kernel,
    "scaled-sine": _sine_kernel,
    "polynomial": _polynomial_kernel,
}


def make_kernel(spec: Mapping[str, Any]) -> Kernel:
    """Kernel from ``{"kind": "linear", "lambda": 0.5}`` style specs."""

    kind = spec.get("kind")
    factory = KERNELS.get(kind)
    if factory is None:
        raise VolterraError(f"Unknown kernel: {kind!r} (known: {', '.join(sorted(KERNELS))})")
    return factory(spec.get("params") or spec)


def make_forcing(spec: Union[Mapping[str, Any], Sequence[float]]) -> Forcing:
    """Forcing term g from a registry spec or an explicit list of node values."""

    if isinstance(spec, (list, tuple)):
        return list(spec)
    kind = spec.get("kind")
    params = spec.get("params") or spec
    if kind == "constant":
        value = _number(params, "value", 1.0)
        return lambda t: np.full_like(t, value, dtype=float)
    if kind == "polynomial":
        coefs = _coefficients(params)
        return lambda t: _polyval(coefs, t)
    if kind == "exp":
        scale, rate = _number(params, "scale", 1.0), _number(params, "rate", 1.0)
        return lambda t: scale * np.exp(rate * t)
    if kind == "values":
        values = params.get("values")
        if not isinstance(values, list):
            raise VolterraError("'values' forcing needs a list of node values")
        return values
    raise VolterraError(f"Unknown forcing: {kind!r}")


# ---------------------------------------------------------------------------
# Problem and solution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionHypothesis:
    alpha: Union[Fraction, float]
    F: CClassFn
    gp: GaugePair
    gauge: IntegralGauge
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if not 0 < float(self.alpha) <= 0.5:
            raise VolterraError(f"alpha must lie in (0, 1/2], got {self.alpha}")


@dataclass(frozen=True, eq=False)
class VolterraProblem:
    g_values: np.ndarray
    kernel: Kernel
    M: int
    hypothesis: Optional[ConditionHypothesis] = None
    name: str = "volterra"

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.M + 1)

    @property
    def dim(self) -> int:
        return int(self.g_values.shape[1])


def make_problem(
    g: Forcing,
    kernel: Kernel,
    M: int,
    *,
    dim: int = 1,
    hypothesis: Optional[ConditionHypothesis] = None,
    name: str = "volterra",
) -> VolterraProblem:
    if not isinstance(M, int) or isinstance(M, bool) or M < 1:
        raise VolterraError(f"M must be a positive integer, got {M!r}")
    if not isinstance(dim, int) or dim < 1:
        raise VolterraError(f"dim must be a positive integer, got {dim!r}")

    t = np.linspace(0.0, 1.0, M + 1)
    values = np.asarray(g(t) if callable(g) else g, dtype=float)
    if values.ndim == 1:
        if values.shape[0] != M + 1:
            raise VolterraError(f"forcing has {values.shape[0]} node values, grid has {M + 1} nodes")
        values = np.repeat(values[:, None], dim, axis=1)
    if values.shape != (M + 1, dim):
        raise VolterraError(f"forcing shape {values.shape} does not match grid ({M + 1}, {dim})")
    if not np.all(np.isfinite(values)):
        raise VolterraError("forcing term g is not finite on the grid")

    values.setflags(write=False)
    return VolterraProblem(g_values=values, kernel=kernel, M=M, hypothesis=hypothesis, name=name)


def _as_grid_function(problem: VolterraProblem, x: Any) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape != problem.g_values.shape:
        raise VolterraError(f"grid function shape {arr.shape} does not match {problem.g_values.shape}")
    return arr


def kernel_values(problem: VolterraProblem, x: np.ndarray) -> np.ndarray:
    s = problem.grid[:, None]
    k = np.asarray(problem.kernel(s, x), dtype=float)
    k = np.broadcast_to(k, x.shape)
    if not np.all(np.isfinite(k)):
        j = int(np.argwhere(~np.isfinite(k))[0][0])
        raise VolterraError(f"kernel is not finite at t={problem.grid[j]:g}, x={x[j].tolist()}")
    return k


def apply_T(problem: VolterraProblem, x: Any) -> np.ndarray:
    """T(x)(t_j) = g(t_j) + trapezoid integral of K(s, x(s)) over [0, t_j]."""

    arr = _as_grid_function(problem, x)
    k = kernel_values(problem, arr)
    return problem.g_values + cumulative_trapezoid(k, problem.grid, axis=0, initial=0.0)


def sup_distance(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(x) - np.asarray(y)))) if np.size(x) else 0.0


@dataclass
class VolterraSolution:
    values: np.ndarray
    grid: np.ndarray
    residual: float
    iterations: int
    converged: bool
    status: str
    step_dists: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        values = self.values[:, 0] if self.values.shape[1] == 1 else self.values
        return {
            "M": len(self.grid) - 1,
            "t": self.grid.tolist(),
            "values": values.tolist(),
            "residual": json_float(self.residual),
            "iterations": self.iterations,
            "converged": self.converged,
            "status": self.status,
        }


def solve(problem: VolterraProblem, rule: StopRule = StopRule(stop_tol=1e-12, max_iter=1000)) -> VolterraSolution:
    """Picard iteration from x0 = g; non-convergent runs return the best iterate."""

    trace: PicardTrace[np.ndarray] = iterate_operator(
        lambda x: apply_T(problem, x),
        sup_distance,
        problem.g_values,
        rule,
    )
    values = trace.fixed_point if trace.converged else trace.best
    solution = VolterraSolution(
        values=np.array(values),
        grid=problem.grid,
        residual=trace.best_step if not trace.converged else trace.step_dists[-1],
        iterations=len(trace.step_dists),
        converged=trace.converged,
        status=trace.status,
        step_dists=list(trace.step_dists),
    )
    log = logger.info if solution.converged else logger.warning
    log(
        "volterra solve completed name=%s M=%s status=%s iterations=%s residual=%s",
        problem.name,
        problem.M,
        solution.status,
        solution.iterations,
        solution.residual,
    )
    return solution


@dataclass
class RefinementStudy:
    Ms: List[int]
    errors: List[float]
    ratios: List[float]

    def to_dict(self) -> Dict[str, Any]:
        return {"M": self.Ms, "errors": [json_float(e) for e in self.errors], "ratios": [json_float(r) for r in self.ratios]}


def refinement_study(
    problem_factory: Callable[[int], VolterraProblem],
    exact: Callable[[np.ndarray], np.ndarray],
    Ms: Sequence[int],
    rule: StopRule = StopRule(stop_tol=1e-12, max_iter=1000),
) -> RefinementStudy:
    """Max node error against ``exact`` per grid size; ratio k is error[k-1] / error[k]."""

    Ms = sorted(int(m) for m in Ms)
    errors: List[float] = []
    for M in Ms:
        problem = problem_factory(M)
        solution = solve(problem, rule)
        reference = np.asarray(exact(problem.grid), dtype=float).reshape(solution.values.shape)
        errors.append(sup_distance(solution.values, reference))
    ratios = [a / b if b > 0 else math.inf for a, b in zip(errors, errors[1:])]
    return RefinementStudy(Ms=Ms, errors=errors, ratios=ratios)


# ---------------------------------------------------------------------------
# Condition (ii) and the sup-norm gauge lemma
# ---------------------------------------------------------------------------


def _node_value(row: np.ndarray) -> Any:
    return float(row[0]) if row.shape[0] == 1 else [float(v) for v in row]


def _sample_violations(
    problem: VolterraProblem,
    hyp: ConditionHypothesis,
    seed_seq: np.random.SeedSequence,
    index: int,
    box: Tuple[float, float],
) -> Tuple[int, int, List[Violation]]:
    rng = np.random.default_rng(seed_seq)
    shape = problem.g_values.shape
    x = rng.uniform(box[0], box[1], size=shape)
    y = rng.uniform(box[0], box[1], size=shape)

    residual = np.max(np.abs(x - apply_T(problem, x)), axis=1)
    gap = np.max(np.abs(x - y), axis=1)
    kernel_gap = np.max(np.abs(kernel_values(problem, x) - kernel_values(problem, y)), axis=1)
    active = float(hyp.alpha) * residual <= gap + hyp.tol

    violations: List[Violation] = []
    t = problem.grid
    for j in np.flatnonzero(active).tolist():
        g_gap = hyp.gauge(float(gap[j]))
        lhs = float(hyp.gp.psi(hyp.gauge(float(kernel_gap[j]))))
        rhs = hyp.F.eval(float(hyp.gp.psi(g_gap)), float(hyp.gp.phi(g_gap)))
        if not lhs <= rhs + hyp.tol:
            violations.append(
                Violation(
                    (float(t[j]), _node_value(x[j]), _node_value(y[j])),
                    lhs,
                    rhs,
                    kind="condition_ii",
                    detail=f"sample={index}",
                )
            )
    return int(active.sum()), int((~active).sum()), violations


def check_condition_ii(
    problem: VolterraProblem,
    samples: int,
    *,
    box: Tuple[float, float] = (-1.0, 1.0),
    seed: int = 0,
    workers: int = 1,
) -> PropertyVerdict:
    """Sample random grid-function pairs and test the pointwise condition at active nodes."""

    hyp = problem.hypothesis
    if hyp is None:
        raise VolterraError("problem carries no hypothesis (alpha, F, psi/phi, gauge)")
    if not isinstance(samples, int) or samples < 1:
        raise VolterraError(f"samples must be a positive integer, got {samples!r}")
    if not box[1] > box[0]:
        raise VolterraError(f"sampling box must have high > low, got {box}")

    children = np.random.SeedSequence(seed).spawn(samples)
    run = lambda pair: _sample_violations(problem, hyp, pair[1], pair[0], box)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="condition-ii") as pool:
            results = list(pool.map(run, enumerate(children)))
    else:
        results = [run(pair) for pair in enumerate(children)]

    verdict = PropertyVerdict(name="condition_ii")
    vacuous = 0
    for active, skipped, violations in results:
        verdict.checked += active
        vacuous += skipped
        verdict.violations.extend(violations)
    verdict.notes.append(f"samples={samples} seed={seed} box=[{box[0]:g},{box[1]:g}] vacuous_nodes={vacuous}")

    logger.info(
        "condition ii check completed name=%s samples=%s passed=%s active=%s violations=%s",
        problem.name,
        samples,
        verdict.passed,
        verdict.checked,
        len(verdict.violations),
    )
    return verdict


def supnorm_gauge_lemma_check(
    a_fn: Any,
    b_fn: Any,
    L: float,
    gauge: IntegralGauge,
    grid: Optional[np.ndarray] = None,
) -> PropertyVerdict:
    """Pointwise G(|a|) < L G(|b|) at every node should lift to G(||a||) < L G(||b||).

    ``a_fn``/``b_fn`` are node-value arrays or callables evaluated on ``grid``
    (default 101 nodes on [0, 1]). Nodes where both sides vanish are vacuous.
    """

    if grid is None:
        grid = np.linspace(0.0, 1.0, 101)
    a = np.abs(np.asarray(a_fn(grid) if callable(a_fn) else a_fn, dtype=float).reshape(len(grid), -1))
    b = np.abs(np.asarray(b_fn(grid) if callable(b_fn) else b_fn, dtype=float).reshape(len(grid), -1))
    a_node, b_node = a.max(axis=1), b.max(axis=1)

    verdict = PropertyVerdict(name="supnorm_gauge_lemma")
    for t, av, bv in zip(grid.tolist(), a_node.tolist(), b_node.tolist()):
        lhs, rhs = gauge(av), L * gauge(bv)
        if lhs == 0.0 and rhs == 0.0:
            continue
        verdict.checked += 1
        if not lhs < rhs:
            verdict.violations.append(Violation((t,), lhs, rhs, kind="premise_not_established"))

    if verdict.violations:
        verdict.notes.append("premise not established")
        return verdict

    sup_a, sup_b = float(a_node.max()), float(b_node.max())
    lhs, rhs = gauge(sup_a), L * gauge(sup_b)
    verdict.checked += 1
    if not (lhs < rhs or (lhs == 0.0 and rhs == 0.0)):
        verdict.violations.append(Violation(("sup",), lhs, rhs, kind="sup_norm"))
    return verdict
