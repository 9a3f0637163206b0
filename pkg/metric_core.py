"""Finite metric spaces, self-maps and the worked example space.

A space is an explicit list of labelled points with a dense distance matrix;
a self-map is an index table. Both are immutable once built so they can be
shared by concurrent pair sweeps.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from verdicts import PropertyVerdict, Violation

logger = logging.getLogger(__name__)

Coords = Tuple[int, int]


class MetricError(ValueError):
    """Raised for malformed spaces and maps."""


class ClosureError(MetricError):
    """Raised when a map image falls outside the space it should map into."""


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    labels: Tuple[str, ...]
    dist: np.ndarray
    coords: Optional[Tuple[Optional[Coords], ...]] = None
    integral: bool = field(init=False)

    def __post_init__(self) -> None:
        n = len(self.labels)
        if self.dist.ndim != 2 or self.dist.shape != (n, n):
            raise MetricError(
                f"dimension mismatch: {n} points but distance matrix has shape {self.dist.shape}"
            )
        if self.coords is not None and len(self.coords) != n:
            raise MetricError(f"dimension mismatch: {n} points but {len(self.coords)} coordinates")
        if len(set(self.labels)) != n:
            raise MetricError("point labels must be unique")
        self.dist.setflags(write=False)
        finite = bool(np.all(np.isfinite(self.dist)))
        object.__setattr__(self, "integral", finite and bool(np.all(self.dist == np.round(self.dist))))

    @property
    def size(self) -> int:
        return len(self.labels)

    def d(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    def int_d(self, i: int, j: int) -> int:
        return int(self.dist[i, j])

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError as exc:
            raise MetricError(f"unknown point label: {label!r}") from exc

    def index_of_coords(self, point: Coords) -> int:
        if self.coords is None:
            raise MetricError("space has no coordinates")
        try:
            return self.coords.index(tuple(point))
        except ValueError as exc:
            raise MetricError(f"no point with coordinates {tuple(point)}") from exc

    def to_json(self) -> Dict[str, Any]:
        points: List[Dict[str, Any]] = []
        for i, label in enumerate(self.labels):
            entry: Dict[str, Any] = {"label": label}
            if self.coords is not None and self.coords[i] is not None:
                entry["coords"] = list(self.coords[i])
            points.append(entry)
        return {"points": points, "dist": self.dist.tolist()}


@dataclass(frozen=True)
class SelfMap:
    image: Tuple[int, ...]

    def __call__(self, i: int) -> int:
        return self.image[i]

    def __len__(self) -> int:
        return len(self.image)

    def is_fixed(self, i: int) -> bool:
        return self.image[i] == i


def make_space(
    labels: Sequence[str],
    dist: Any,
    coords: Optional[Sequence[Optional[Sequence[int]]]] = None,
) -> FiniteMetricSpace:
    matrix = np.array(dist, dtype=float)
    coord_tuple = None
    if coords is not None:
        coord_tuple = tuple(tuple(int(v) for v in c) if c is not None else None for c in coords)
    return FiniteMetricSpace(labels=tuple(str(l) for l in labels), dist=matrix, coords=coord_tuple)


def space_from_coords(points: Sequence[Sequence[int]], labels: Optional[Sequence[str]] = None) -> FiniteMetricSpace:
    """Finite space with the L1 metric |x1 - y1| + |x2 - y2| on integer points."""

    coords = np.array(points, dtype=np.int64).reshape(len(points), -1)
    dist = np.abs(coords[:, None, :] - coords[None, :, :]).sum(axis=2)
    if labels is None:
        labels = [_coords_label(tuple(int(v) for v in p)) for p in coords]
    return make_space(labels, dist, coords=[tuple(int(v) for v in p) for p in coords])


def make_self_map(image: Sequence[int], space: FiniteMetricSpace) -> SelfMap:
    if len(image) != space.size:
        raise MetricError(f"dimension mismatch: map has {len(image)} entries for {space.size} points")
    for i, j in enumerate(image):
        if not isinstance(j, (int, np.integer)) or not 0 <= int(j) < space.size:
            raise MetricError(f"map sends point {i} to invalid index {j!r}")
    return SelfMap(tuple(int(j) for j in image))


def validate_metric(space: FiniteMetricSpace, *, tol: float = 0.0) -> PropertyVerdict:
    """List every metric-axiom failure with a witness index pair or triple."""

    D = space.dist
    n = space.size
    verdict = PropertyVerdict(name="metric_axioms")

    if not np.all(np.isfinite(D)):
        for i, j in np.argwhere(~np.isfinite(D)).tolist():
            verdict.violations.append(Violation((i, j), float(D[i, j]), 0.0, kind="non_finite"))
        return verdict

    for i in range(n):
        verdict.checked += 1
        if D[i, i] != 0:
            verdict.violations.append(Violation((i, i), float(D[i, i]), 0.0, kind="nonzero_diagonal"))
        for j in range(n):
            if D[i, j] < 0:
                verdict.violations.append(Violation((i, j), float(D[i, j]), 0.0, kind="negative"))
        for j in range(i + 1, n):
            verdict.checked += 1
            if abs(D[i, j] - D[j, i]) > tol:
                verdict.violations.append(Violation((i, j), float(D[i, j]), float(D[j, i]), kind="asymmetric"))
            if D[i, j] == 0 or D[j, i] == 0:
                verdict.violations.append(Violation((i, j), 0.0, 0.0, kind="zero_off_diagonal"))

    triangle: List[Violation] = []
    for j in range(n):
        bound = D[:, j, None] + D[None, j, :]
        verdict.checked += n * n
        for i, k in np.argwhere(D > bound + tol).tolist():
            if i < k:
                triangle.append(Violation((i, j, k), float(D[i, k]), float(bound[i, k]), kind="triangle"))
    triangle.sort(key=lambda v: tuple(v.point))
    verdict.violations.extend(triangle)

    return verdict


def repair_triangle(dist: Any) -> np.ndarray:
    """Shortest-path closure of a symmetric nonnegative weight matrix."""

    D = np.array(dist, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise MetricError(f"dimension mismatch: weight matrix has shape {D.shape}")
    if np.any(D < 0) or not np.allclose(D, D.T):
        raise MetricError("weights must be symmetric and nonnegative")
    for k in range(D.shape[0]):
        D = np.minimum(D, D[:, k : k + 1] + D[k : k + 1, :])
    return D


def random_integer_space(rng: np.random.Generator, size: int, max_distance: int = 10) -> FiniteMetricSpace:
    """Random integer metric: uniform weights in [1, max_distance], triangle-repaired."""

    if size < 1:
        raise MetricError("random space needs at least one point")
    weights = rng.integers(1, max_distance + 1, size=(size, size))
    weights = np.triu(weights, 1)
    weights = weights + weights.T
    return make_space([f"p{i}" for i in range(size)], repair_triangle(weights))


def random_self_map(rng: np.random.Generator, size: int) -> SelfMap:
    return SelfMap(tuple(int(j) for j in rng.integers(0, size, size=size)))


def space_from_json(data: Mapping[str, Any]) -> Tuple[FiniteMetricSpace, Optional[SelfMap]]:
    """Load ``{"points": [...], "dist": [[...]]?, "map": [...]?}``.

    When ``dist`` is absent every point needs integer ``coords`` and the L1
    metric is used.
    """

    points = data.get("points")
    if not isinstance(points, list) or not points:
        raise MetricError("space file needs a nonempty 'points' list")

    labels: List[str] = []
    coords: List[Optional[Tuple[int, ...]]] = []
    for index, entry in enumerate(points):
        if not isinstance(entry, Mapping) or "label" not in entry:
            raise MetricError(f"point {index} needs a 'label'")
        labels.append(str(entry["label"]))
        raw = entry.get("coords")
        coords.append(tuple(int(v) for v in raw) if raw is not None else None)

    if data.get("dist") is not None:
        space = make_space(labels, data["dist"], coords=coords if any(c is not None for c in coords) else None)
    else:
        if any(c is None for c in coords):
            raise MetricError("'dist' may only be omitted when every point has coords")
        space = space_from_coords(coords, labels=labels)

    mapping = data.get("map")
    self_map = make_self_map(mapping, space) if mapping is not None else None
    return space, self_map


# ---------------------------------------------------------------------------
# Worked example: X = {(0,0),(5,6),(5,4),(0,4)} u {(n,0)} u {(n+12,n+13)}
# ---------------------------------------------------------------------------

E1_FIXED_POINTS: Tuple[Coords, ...] = ((0, 0), (5, 6), (5, 4), (0, 4))


def _coords_label(point: Sequence[int]) -> str:
    return "(" + ",".join(str(int(v)) for v in point) + ")"


def e1_map_point(point: Coords) -> Coords:
    x1, x2 = point
    return (x1, 0) if x1 <= x2 else (0, x2)


def in_e1_space(point: Coords) -> bool:
    x1, x2 = point
    if point in E1_FIXED_POINTS:
        return True
    if x2 == 0 and x1 >= 1:
        return True
    return x1 >= 13 and x2 == x1 + 1


def _e1_order(point: Coords) -> Tuple[int, int, int]:
    if point in E1_FIXED_POINTS:
        return (0, E1_FIXED_POINTS.index(point), 0)
    if point[1] == 0:
        return (1, point[0], 0)
    return (2, point[0], point[1])


def example_e1_space(n_max: int) -> Tuple[FiniteMetricSpace, SelfMap]:
    """Truncate the example space at n_max, extended until the map is total.

    The (n,0) family grows past n_max whenever an image (n+12, 0) of the
    diagonal family, or (5,0) = T(5,6), is not yet present.
    """

    if not isinstance(n_max, int) or isinstance(n_max, bool) or n_max < 1:
        raise MetricError(f"n_max must be a positive integer, got {n_max!r}")

    points: Dict[Coords, None] = dict.fromkeys(E1_FIXED_POINTS)
    for n in range(1, n_max + 1):
        points.setdefault((n, 0))
    for n in range(1, n_max + 1):
        points.setdefault((n + 12, n + 13))
    naive = len(points)

    pending = list(points)
    while pending:
        image = e1_map_point(pending.pop())
        if image in points:
            continue
        if not in_e1_space(image):
            raise ClosureError(f"image {image} escapes the example space")
        points[image] = None
        pending.append(image)

    ordered = sorted(points, key=_e1_order)
    space = space_from_coords(ordered)
    index = {p: i for i, p in enumerate(ordered)}
    self_map = SelfMap(tuple(index[e1_map_point(p)] for p in ordered))

    logger.info("e1 space built n_max=%s points=%s extended=%s", n_max, space.size, space.size - naive)
    return space, self_map
