import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gpss.operator import DenseOperator, gen_gaussian_problem
from gpss.prox import (L1Ball, l1_ball_threshold, lambda_from_rho, lambda_max, project_l1_ball,
                       rho_from_lambda, soft_threshold)
from gpss.solvers import Objective, StopRule, fista_solve, gpss_solve
from gpss.verify import projection_kkt_violation

from oracles import l1_projection_by_bisection, scalar_prox_by_grid

vectors = arrays(np.float64, st.integers(1, 25),
                 elements=st.floats(-100, 100, allow_nan=False, allow_infinity=False))
radii = st.floats(0, 200, allow_nan=False)


def test_soft_threshold_definition():
    np.testing.assert_allclose(soft_threshold([2, -0.5, 1.5], 1.0), [1, 0, 0.5])


def test_soft_threshold_zero_is_identity(rng):
    x = rng.standard_normal(10)
    np.testing.assert_array_equal(soft_threshold(x, 0.0), x)


def test_soft_threshold_matches_grid_prox(rng):
    lam = 0.3
    x = rng.uniform(-2, 2, 20)
    s = soft_threshold(x, lam)
    for xi, si in zip(x, s):
        assert abs(si - scalar_prox_by_grid(xi, lam)) <= 1e-4


def test_soft_threshold_rejects_negative():
    with pytest.raises(ValueError):
        soft_threshold([1.0], -0.1)


@given(vectors, st.floats(0, 50))
def test_soft_threshold_shrinks(x, lam):
    s = soft_threshold(x, lam)
    assert np.abs(s).sum() <= np.abs(x).sum()
    assert np.all((np.sign(s) == 0) | (np.sign(s) == np.sign(x)))


@pytest.mark.parametrize("x, rho, expected", [
    ([3.0, 0.0], 1.0, [1.0, 0.0]),
    ([1.0, -0.5], 2.0, [1.0, -0.5]),
    ([0.9, 0.5], 1.0, [0.7, 0.3]),
])
def test_projection_examples(x, rho, expected):
    np.testing.assert_allclose(project_l1_ball(x, rho), expected, atol=1e-15)


def test_projection_threshold_example():
    assert l1_ball_threshold([0.9, 0.5], 1.0) == pytest.approx(0.2, abs=1e-15)
    u, theta = l1_projection_by_bisection([0.9, 0.5], 1.0)
    assert theta == pytest.approx(0.2, abs=1e-12)
    np.testing.assert_allclose(u, [0.7, 0.3], atol=1e-12)


def test_projection_boundary_and_degenerate():
    x = np.array([0.5, -0.5])
    np.testing.assert_array_equal(project_l1_ball(x, 1.0), x)
    assert l1_ball_threshold(x, 1.0) == 0.0
    np.testing.assert_array_equal(project_l1_ball([3.0, -1.0], 0.0), [0.0, 0.0])
    with pytest.raises(ValueError):
        project_l1_ball([1.0], -1.0)


def test_projection_ties():
    np.testing.assert_allclose(project_l1_ball([1.0, 1.0, 1.0], 1.5), [0.5, 0.5, 0.5])
    np.testing.assert_allclose(project_l1_ball([2.0, -2.0, 0.1], 1.0), [0.5, -0.5, 0.0])


def test_projection_matches_bisection_oracle(rng):
    for _ in range(300):
        p = int(rng.integers(2, 13))
        x = rng.standard_normal(p) * 3
        rho = float(rng.uniform(0, 1.5) * np.abs(x).sum())
        u_ref, _ = l1_projection_by_bisection(x, rho)
        np.testing.assert_allclose(project_l1_ball(x, rho), u_ref, atol=1e-10)


@given(vectors, radii)
def test_projection_feasible_and_idempotent(x, rho):
    u = project_l1_ball(x, rho)
    assert np.abs(u).sum() <= rho + 1e-12 * max(1.0, rho)
    np.testing.assert_array_equal(project_l1_ball(u, rho), u)


@given(vectors, radii)
def test_projection_kkt(x, rho):
    u = project_l1_ball(x, rho)
    scale = max(1.0, float(np.abs(x).max(initial=0.0)))
    assert projection_kkt_violation(x, u, rho) <= 1e-10 * scale


@given(vectors, radii)
def test_projection_is_soft_threshold(x, rho):
    if np.abs(x).sum() > rho > 0:
        theta = l1_ball_threshold(x, rho)
        np.testing.assert_array_equal(project_l1_ball(x, rho), soft_threshold(x, theta))


@settings(max_examples=200)
@given(st.integers(1, 15), st.integers(0, 2**32 - 1), radii)
def test_projection_nonexpansive(p, seed, rho):
    r = np.random.default_rng(seed)
    x, x2 = r.standard_normal(p) * 10, r.standard_normal(p) * 10
    d = np.linalg.norm(project_l1_ball(x, rho) - project_l1_ball(x2, rho))
    assert d <= np.linalg.norm(x - x2) * (1 + 1e-12) + 1e-12


def test_l1ball_type():
    ball = L1Ball(1.0)
    assert ball.contains([0.5, -0.5])
    assert not ball.contains([0.5, -0.6])
    np.testing.assert_allclose(ball.project([3.0, 0.0]), [1.0, 0.0])
    with pytest.raises(ValueError):
        L1Ball(-1.0)


def test_lambda_max_simple():
    assert lambda_max(DenseOperator(np.eye(2)), [3.0, -1.0]) == 3.0
    assert lambda_max(DenseOperator(np.ones((2, 3))), [0.0, 0.0]) == 0.0


def test_lambda_max_zeroes_the_solution(rng):
    K = DenseOperator(rng.standard_normal((5, 8)) / 4)
    y = rng.standard_normal(5)
    prob = Objective(K, y)
    lmax = lambda_max(K, y)
    stop = StopRule(max_iters=20000, stationarity_tol=1e-14)
    assert not np.any(fista_solve(prob, 1.01 * lmax, stop).x)
    assert np.any(fista_solve(prob, 0.9 * lmax, stop).x)


def test_rho_from_lambda():
    assert rho_from_lambda(np.zeros(3)) == 0.0
    assert rho_from_lambda([1, -2, 0.5]) == 3.5


def test_lambda_from_rho_at_zero(rng):
    K = DenseOperator(rng.standard_normal((5, 8)))
    y = rng.standard_normal(5)
    assert lambda_from_rho(K, y, np.zeros(8)) == lambda_max(K, y)


def test_lambda_from_rho_identity_operator(rng):
    y = rng.standard_normal(6)
    rho = 0.5 * np.abs(y).sum()
    x_rho = project_l1_ball(y, rho)
    theta = l1_ball_threshold(y, rho)
    assert lambda_from_rho(DenseOperator(np.eye(6)), y, x_rho) == pytest.approx(theta, rel=1e-12)


def test_lambda_rho_round_trip():
    prob = gen_gaussian_problem(30, 80, 5, 0.02, seed=2)
    obj = Objective(prob.K, prob.y)
    lam0 = lambda_max(prob.K, prob.y) / 6
    xbar = fista_solve(obj, lam0, StopRule(max_iters=50000, stationarity_tol=1e-13)).x
    rho = rho_from_lambda(xbar)
    x_rho = gpss_solve(obj, rho, stop=StopRule(max_iters=50000, stationarity_tol=1e-12)).x
    assert lambda_from_rho(prob.K, prob.y, x_rho) == pytest.approx(lam0, rel=1e-3)
