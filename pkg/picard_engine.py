"""Picard iteration x_{n+1} = T x_n on finite spaces and on grid functions."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Generic, List, Optional, TypeVar

from metric_core import FiniteMetricSpace, MetricError, SelfMap
from verdicts import json_float

logger = logging.getLogger(__name__)

P = TypeVar("P")

STATUS_CONVERGED = "converged"
STATUS_CYCLE = "cycle"
STATUS_MAX_ITER = "max_iter"


class PicardError(ValueError):
    """Raised for invalid stop rules or start points."""


@dataclass(frozen=True)
class StopRule:
    stop_tol: float = 0.0
    max_iter: int = 1000

    def __post_init__(self) -> None:
        if not isinstance(self.max_iter, int) or isinstance(self.max_iter, bool) or self.max_iter < 1:
            raise PicardError(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if not (isinstance(self.stop_tol, (int, float)) and self.stop_tol >= 0 and math.isfinite(self.stop_tol)):
            raise PicardError(f"stop_tol must be a nonnegative real, got {self.stop_tol!r}")


@dataclass
class PicardTrace(Generic[P]):
    start: P
    iterates: List[P] = field(default_factory=list)
    step_dists: List[float] = field(default_factory=list)
    status: str = STATUS_MAX_ITER
    cycle: List[P] = field(default_factory=list)
    best: Optional[P] = None
    best_step: float = math.inf

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED

    @property
    def fixed_point(self) -> P:
        return self.iterates[-1]

    @property
    def steps(self) -> int:
        # Number of applications of T before the stop test passed.
        return len(self.iterates) - 1

    def is_non_increasing(self, tol: float = 0.0) -> bool:
        return all(b <= a + tol for a, b in zip(self.step_dists, self.step_dists[1:]))

    def to_dict(self, label: Callable[[P], Any] = lambda p: p) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "start": label(self.start),
            "path": [label(p) for p in self.iterates],
            "a_n": [json_float(a) for a in self.step_dists],
            "converged": self.converged,
            "status": self.status,
            "steps": self.steps,
        }
        if self.cycle:
            data["cycle"] = [label(p) for p in self.cycle]
        return data


def iterate_operator(
    step: Callable[[P], P],
    distance: Callable[[P, P], float],
    x0: P,
    rule: StopRule,
    *,
    key: Optional[Callable[[P], Any]] = None,
) -> PicardTrace[P]:
    """Run x <- step(x) from x0 until d(x, Tx) <= stop_tol or max_iter applications.

    ``iterates`` ends at the last point whose step was measured; a_n is
    d(x_n, x_{n+1}). With ``key`` (finite spaces) a revisited point that is not
    within tolerance of its image ends the run with status ``cycle``.
    """

    trace: PicardTrace[P] = PicardTrace(start=x0, iterates=[x0])
    seen: Dict[Any, int] = {key(x0): 0} if key is not None else {}
    x = x0

    for n in range(rule.max_iter):
        image = step(x)
        a_n = float(distance(x, image))
        trace.step_dists.append(a_n)
        if a_n < trace.best_step:
            trace.best, trace.best_step = x, a_n
        if a_n <= rule.stop_tol:
            trace.status = STATUS_CONVERGED
            return trace

        if key is not None:
            k = key(image)
            if k in seen:
                trace.status = STATUS_CYCLE
                trace.cycle = trace.iterates[seen[k] :]
                return trace
            seen[k] = len(trace.iterates)

        if n + 1 == rule.max_iter:
            break
        trace.iterates.append(image)
        x = image

    trace.status = STATUS_MAX_ITER
    logger.warning("picard iteration exhausted max_iter=%s best_step=%s", rule.max_iter, trace.best_step)
    return trace


def _check_map(space: FiniteMetricSpace, self_map: SelfMap) -> None:
    if len(self_map) != space.size:
        raise MetricError(f"dimension mismatch: map has {len(self_map)} entries for {space.size} points")


def _check_start(space: FiniteMetricSpace, self_map: SelfMap, x0: int) -> None:
    _check_map(space, self_map)
    if not isinstance(x0, int) or not 0 <= x0 < space.size:
        raise PicardError(f"start point {x0!r} is not a point of the space")


def iterate(space: FiniteMetricSpace, self_map: SelfMap, x0: int, rule: StopRule = StopRule()) -> PicardTrace[int]:
    _check_start(space, self_map, x0)
    return iterate_operator(self_map, space.d, x0, rule, key=lambda i: i)


def verify_uniqueness(space: FiniteMetricSpace, self_map: SelfMap) -> List[int]:
    """Indices of every fixed point, in space order."""

    _check_map(space, self_map)
    return [i for i in range(space.size) if self_map.is_fixed(i)]


@dataclass
class AttractionSummary:
    traces: List[PicardTrace[int]]
    max_steps: int
    non_convergent: List[int]
    limits: List[int]

    @property
    def all_converged(self) -> bool:
        return not self.non_convergent

    def to_dict(self, space: FiniteMetricSpace, *, include_traces: bool = False) -> Dict[str, Any]:
        label = lambda i: space.labels[i]  # noqa: E731
        data: Dict[str, Any] = {
            "starts": len(self.traces),
            "all_converged": self.all_converged,
            "max_steps": self.max_steps,
            "non_convergent": [label(i) for i in self.non_convergent],
            "limits": [label(i) for i in self.limits],
        }
        if include_traces:
            data["traces"] = [trace.to_dict(label) for trace in self.traces]
        return data


def global_attraction(
    space: FiniteMetricSpace,
    self_map: SelfMap,
    rule: StopRule = StopRule(),
    *,
    workers: int = 1,
) -> AttractionSummary:
    """Iterate from every start point; traces are returned in start order."""

    _check_map(space, self_map)
    starts = list(range(space.size))

    run = lambda x0: iterate(space, self_map, x0, rule)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="picard") as pool:
            traces = list(pool.map(run, starts))
    else:
        traces = [run(x0) for x0 in starts]

    converged = [t for t in traces if t.converged]
    limits = sorted({t.fixed_point for t in converged})
    summary = AttractionSummary(
        traces=traces,
        max_steps=max((t.steps for t in converged), default=0),
        non_convergent=[t.start for t in traces if not t.converged],
        limits=limits,
    )
    logger.info(
        "global attraction completed starts=%s non_convergent=%s max_steps=%s limits=%s",
        len(traces),
        len(summary.non_convergent),
        summary.max_steps,
        len(limits),
    )
    return summary
