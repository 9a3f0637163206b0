import numpy as np
import pytest

from metric_core import (
    ClosureError,
    MetricError,
    e1_map_point,
    example_e1_space,
    make_self_map,
    make_space,
    random_integer_space,
    random_self_map,
    repair_triangle,
    space_from_coords,
    space_from_json,
    validate_metric,
)


def test_space_from_coords_uses_l1_metric():
    space = space_from_coords([(0, 0), (5, 6), (5, 4)])
    assert space.labels == ("(0,0)", "(5,6)", "(5,4)")
    assert space.d(0, 1) == 11.0
    assert space.int_d(1, 2) == 2
    assert space.integral
    assert space.index_of_coords((5, 4)) == 2
    assert validate_metric(space).passed


def test_distance_matrix_is_read_only():
    space = space_from_coords([(0, 0), (1, 0)])
    with pytest.raises(ValueError):
        space.dist[0, 1] = 3.0


def test_dimension_mismatch_and_bad_map_raise():
    with pytest.raises(MetricError):
        make_space(["a", "b"], [[0.0]])
    with pytest.raises(MetricError):
        make_space(["a", "a"], [[0, 1], [1, 0]])

    space = make_space(["a", "b"], [[0, 1], [1, 0]])
    with pytest.raises(MetricError):
        make_self_map([0], space)
    with pytest.raises(MetricError):
        make_self_map([0, 2], space)


def test_validate_metric_reports_each_axiom_failure():
    bad = make_space(
        ["a", "b", "c"],
        [
            [0.0, 1.0, 5.0],
            [2.0, 0.0, 1.0],
            [5.0, 1.0, 0.0],
        ],
    )
    verdict = validate_metric(bad)
    kinds = [v.kind for v in verdict.violations]

    assert "asymmetric" in kinds
    triangle = [v for v in verdict.violations if v.kind == "triangle"]
    assert triangle[0].point == (0, 1, 2)
    assert triangle[0].lhs == 5.0
    assert triangle[0].rhs == 2.0


def test_validate_metric_flags_non_finite_entries():
    verdict = validate_metric(make_space(["a", "b"], [[0.0, np.inf], [np.inf, 0.0]]))
    assert not verdict.passed
    assert {v.kind for v in verdict.violations} == {"non_finite"}


def test_repair_triangle_produces_a_metric():
    weights = [
        [0, 1, 9],
        [1, 0, 1],
        [9, 1, 0],
    ]
    repaired = repair_triangle(weights)
    assert repaired[0, 2] == 2.0
    assert validate_metric(make_space(["a", "b", "c"], repaired)).passed

    with pytest.raises(MetricError):
        repair_triangle([[0, -1], [-1, 0]])


def test_random_spaces_are_metrics_and_reproducible():
    first = random_integer_space(np.random.default_rng(7), 8)
    second = random_integer_space(np.random.default_rng(7), 8)

    assert np.array_equal(first.dist, second.dist)
    assert first.integral
    assert validate_metric(first).passed

    self_map = random_self_map(np.random.default_rng(7), 8)
    assert len(self_map) == 8
    assert all(0 <= j < 8 for j in self_map.image)


def test_space_from_json_with_coords_or_matrix():
    space, self_map = space_from_json(
        {"points": [{"label": "a", "coords": [0, 0]}, {"label": "b", "coords": [2, 1]}], "map": [0, 0]}
    )
    assert space.d(0, 1) == 3.0
    assert self_map.image == (0, 0)

    space, self_map = space_from_json({"points": [{"label": "p"}, {"label": "q"}], "dist": [[0, 4], [4, 0]]})
    assert space.coords is None
    assert self_map is None
    assert space.index_of("q") == 1

    with pytest.raises(MetricError):
        space_from_json({"points": [{"label": "p"}, {"label": "q"}]})
    with pytest.raises(MetricError):
        space_from_json({"points": []})


def test_e1_map_definition():
    assert e1_map_point((5, 6)) == (5, 0)
    assert e1_map_point((5, 4)) == (0, 4)
    assert e1_map_point((0, 4)) == (0, 0)
    assert e1_map_point((7, 0)) == (0, 0)
    assert e1_map_point((13, 14)) == (13, 0)


def test_example_space_closure_at_fifty():
    space, self_map = example_e1_space(50)

    # 4 special points, (n,0) for n <= 62 and 50 diagonal points
    assert space.size == 116
    assert space.labels[:4] == ("(0,0)", "(5,6)", "(5,4)", "(0,4)")
    assert "(62,0)" in space.labels
    assert "(63,0)" not in space.labels
    assert validate_metric(space).passed

    for i in range(space.size):
        image = e1_map_point(space.coords[i])
        assert space.coords[self_map(i)] == image


def test_example_space_small_truncation_is_extended():
    space, self_map = example_e1_space(5)
    assert "(17,0)" in space.labels
    assert "(5,0)" in space.labels
    assert len(self_map) == space.size


def test_example_space_with_one_step_truncation_is_closed():
    space, self_map = example_e1_space(1)
    assert list(space.labels) == ["(0,0)", "(5,6)", "(5,4)", "(0,4)", "(1,0)", "(5,0)", "(13,0)", "(13,14)"]
    assert self_map.image == (0, 5, 3, 0, 0, 0, 0, 6)


def test_example_space_rejects_bad_truncation():
    for bad in (0, -3, 2.5, True):
        with pytest.raises(MetricError):
            example_e1_space(bad)


def test_closure_error_is_a_metric_error():
    assert issubclass(ClosureError, MetricError)
