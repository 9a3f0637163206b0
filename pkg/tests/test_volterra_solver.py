import math
from fractions import Fraction

import numpy as np
import pytest

from gauges import GaugePair, identity_gauge, linear_cclass
from picard_engine import StopRule
from volterra_solver import (
    ConditionHypothesis,
    VolterraError,
    apply_T,
    check_condition_ii,
    make_forcing,
    make_kernel,
    make_problem,
    refinement_study,
    solve,
    sup_distance,
    supnorm_gauge_lemma_check,
)

RULE = StopRule(stop_tol=1e-12, max_iter=1000)


def _identity_hypothesis(alpha=Fraction(1, 2)):
    return ConditionHypothesis(
        alpha=alpha,
        F=linear_cclass(0.5),
        gp=GaugePair.linear(1.0, 1.0),
        gauge=identity_gauge(),
    )


def test_apply_t_zero_kernel_returns_forcing():
    problem = make_problem(lambda t: t, make_kernel({"kind": "zero"}), 10)
    image = apply_T(problem, np.full(11, 7.0))
    assert np.allclose(image[:, 0], problem.grid)


def test_apply_t_linear_kernel_on_constant():
    problem = make_problem(make_forcing({"kind": "constant", "value": 1.0}), make_kernel({"kind": "linear"}), 10)
    image = apply_T(problem, np.ones(11))
    assert np.allclose(image[:, 0], 1.0 + problem.grid, atol=1e-15)


def test_apply_t_is_exact_on_linear_integrand():
    problem = make_problem(np.zeros(11), lambda s, x: s + 0.0 * x, 10)
    image = apply_T(problem, np.zeros(11))
    assert np.allclose(image[:, 0], problem.grid**2 / 2.0, atol=1e-15)


def test_apply_t_is_causal():
    problem = make_problem(make_forcing({"kind": "constant", "value": 1.0}), make_kernel({"kind": "scaled-sine"}), 20)
    x = np.linspace(0.0, 1.0, 21)
    perturbed = x.copy()
    perturbed[12:] += 5.0

    base, moved = apply_T(problem, x), apply_T(problem, perturbed)
    assert np.array_equal(base[:12], moved[:12])
    assert not np.array_equal(base[12:], moved[12:])


def test_non_finite_kernel_raises():
    problem = make_problem(np.ones(11), lambda s, x: x / 0.0, 10)
    with np.errstate(divide="ignore"):
        with pytest.raises(VolterraError):
            apply_T(problem, np.ones(11))


def test_solve_exponential_growth():
    problem = make_problem(make_forcing({"kind": "constant", "value": 1.0}), make_kernel({"kind": "linear"}), 1000)
    solution = solve(problem, RULE)

    assert solution.converged
    assert solution.residual <= 1e-12
    assert sup_distance(solution.values[:, 0], np.exp(problem.grid)) < 1e-5


def test_solve_exponential_decay():
    problem = make_problem(
        make_forcing({"kind": "constant", "value": 1.0}), make_kernel({"kind": "linear", "lambda": -2.0}), 1000
    )
    solution = solve(problem, RULE)
    assert solution.converged
    assert sup_distance(solution.values[:, 0], np.exp(-2.0 * problem.grid)) < 1e-4


def test_zero_kernel_converges_in_one_step():
    g = np.sin(np.linspace(0.0, 1.0, 51))
    solution = solve(make_problem(g, make_kernel({"kind": "zero"}), 50), RULE)
    assert solution.converged
    assert solution.iterations == 1
    assert np.array_equal(solution.values[:, 0], g)


def test_refinement_is_second_order():
    study = refinement_study(
        lambda M: make_problem(make_forcing({"kind": "constant", "value": 1.0}), make_kernel({"kind": "linear"}), M),
        np.exp,
        [1000, 500],
        RULE,
    )
    assert study.Ms == [500, 1000]
    assert 3.0 <= study.ratios[0] <= 5.0


def test_short_budget_returns_best_iterate():
    problem = make_problem(
        make_forcing({"kind": "constant", "value": 1.0}), make_kernel({"kind": "linear", "lambda": 5.0}), 100
    )
    solution = solve(problem, StopRule(stop_tol=1e-12, max_iter=10))

    assert not solution.converged
    assert solution.status == "max_iter"
    assert solution.iterations == 10
    assert solution.residual == min(solution.step_dists)
    assert solution.to_dict()["converged"] is False


def test_vector_problem_uses_max_norm():
    problem = make_problem(make_forcing({"kind": "constant", "value": 1.0}), make_kernel({"kind": "linear"}), 200, dim=2)
    solution = solve(problem, RULE)
    assert solution.values.shape == (201, 2)
    assert np.allclose(solution.values[:, 0], solution.values[:, 1])
    assert sup_distance(np.zeros((2, 2)), np.array([[0.0, -3.0], [1.0, 0.0]])) == 3.0


def test_problem_validation():
    with pytest.raises(VolterraError):
        make_problem([1.0, 2.0], make_kernel({"kind": "zero"}), 10)
    with pytest.raises(VolterraError):
        make_problem(np.ones(11), make_kernel({"kind": "zero"}), 0)
    with pytest.raises(VolterraError):
        make_kernel({"kind": "bessel"})
    with pytest.raises(VolterraError):
        make_forcing({"kind": "polynomial"})
    with pytest.raises(VolterraError):
        make_kernel({"kind": "linear", "lambda": "big"})


def test_polynomial_registry_entries():
    kernel = make_kernel({"kind": "polynomial", "coefs": [1.0, 0.0, 2.0]})
    assert kernel(np.zeros(1), np.array([3.0]))[0] == 19.0
    forcing = make_forcing({"kind": "polynomial", "coefs": [0.0, 1.0]})
    assert np.array_equal(forcing(np.array([0.0, 0.5])), np.array([0.0, 0.5]))
    assert make_forcing([1, 2, 3]) == [1, 2, 3]


def test_condition_ii_holds_for_half_lipschitz_kernel():
    problem = make_problem(
        make_forcing({"kind": "constant", "value": 0.0}),
        make_kernel({"kind": "linear", "lambda": 0.5}),
        100,
        hypothesis=_identity_hypothesis(),
    )
    verdict = check_condition_ii(problem, 1000, seed=1)

    assert verdict.passed
    assert verdict.checked > 0
    assert "samples=1000" in verdict.notes[0]


def test_condition_ii_fails_for_quadratic_kernel():
    problem = make_problem(
        make_forcing({"kind": "constant", "value": 0.0}),
        make_kernel({"kind": "polynomial", "coefs": [0.0, 0.0, 1.0]}),
        100,
        hypothesis=_identity_hypothesis(Fraction(1, 10)),
    )
    verdict = check_condition_ii(problem, 50, box=(-10.0, 10.0), seed=3)

    assert not verdict.passed
    witness = verdict.violations[0]
    t, x, y = witness.point
    assert 0.0 <= t <= 1.0
    assert witness.lhs == pytest.approx(abs(x * x - y * y))
    assert witness.lhs > witness.rhs


def test_condition_ii_is_reproducible_and_parallel_safe():
    problem = make_problem(
        make_forcing({"kind": "constant", "value": 0.0}),
        make_kernel({"kind": "polynomial", "coefs": [0.0, 0.0, 1.0]}),
        50,
        hypothesis=_identity_hypothesis(Fraction(1, 10)),
    )
    first = check_condition_ii(problem, 20, box=(-10.0, 10.0), seed=9)
    second = check_condition_ii(problem, 20, box=(-10.0, 10.0), seed=9, workers=4)
    assert [v.to_dict() for v in first.violations] == [v.to_dict() for v in second.violations]


def test_condition_ii_needs_hypothesis_and_samples():
    problem = make_problem(np.zeros(11), make_kernel({"kind": "zero"}), 10)
    with pytest.raises(VolterraError):
        check_condition_ii(problem, 10)

    problem = make_problem(np.zeros(11), make_kernel({"kind": "zero"}), 10, hypothesis=_identity_hypothesis())
    assert check_condition_ii(problem, 5).passed
    with pytest.raises(VolterraError):
        check_condition_ii(problem, 0)


def test_gauge_lemma_examples():
    grid = np.linspace(0.0, 1.0, 101)
    G = identity_gauge()

    assert supnorm_gauge_lemma_check(np.zeros(101), lambda t: 1.0 + t, 1.0, G, grid).passed

    halves = supnorm_gauge_lemma_check(lambda t: t / 2.0, lambda t: t, 1.0, G, grid)
    assert halves.passed
    assert halves.checked == 101

    reversed_ = supnorm_gauge_lemma_check(lambda t: t, lambda t: t / 2.0, 1.0, G, grid)
    assert not reversed_.passed
    assert reversed_.notes == ["premise not established"]
    assert reversed_.violations[0].kind == "premise_not_established"


def test_condition_hypothesis_alpha_range():
    with pytest.raises(VolterraError):
        _identity_hypothesis(Fraction(3, 4))
    assert math.isclose(float(_identity_hypothesis().alpha), 0.5)
