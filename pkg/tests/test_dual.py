import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from slores.data import synthesize
from slores.dual import (
    DualPoint,
    build_geometry,
    dual_gradient,
    dual_objective,
    lambda_max,
    max_geometry,
    project_complement_b,
    radius,
    theta_max,
)
from slores.errors import DegenerateProblemError, GeometryError
from slores.solver import fit

from conftest import folded, random_dense


def entropy(t):
    # Scalar reference written out longhand.
    return t * math.log(t) + (1 - t) * math.log(1 - t)


def test_dual_point_rejects_boundary():
    for bad in ([0.0, 0.5], [0.5, 1.0], [np.nan], []):
        with pytest.raises(ValueError):
            DualPoint(bad)


def test_objective_values():
    assert dual_objective(np.full(4, 0.5)) == pytest.approx(-math.log(2), abs=1e-15)
    for m in (1, 3, 17):
        assert dual_objective(np.full(m, 0.5)) == pytest.approx(-math.log(2), abs=1e-15)
    val = dual_objective([0.25, 0.75])
    assert val == pytest.approx(-0.5623351, abs=1e-7)
    assert val == pytest.approx(entropy(0.25), rel=1e-14)


def test_objective_range_near_boundary():
    th = np.array([1e-15, 1 - 1e-12, 0.3])
    g = dual_objective(th)
    assert np.isfinite(g) and -math.log(2) <= g < 0


def test_gradient_values():
    assert_array_equal(dual_gradient(np.full(5, 0.5)), np.zeros(5))
    assert dual_gradient([math.e / (1 + math.e)])[0] == pytest.approx(1.0, rel=1e-14)


def test_gradient_finite_differences():
    rng = np.random.default_rng(1)
    th = rng.uniform(0.1, 0.9, 10)
    h = 1e-6
    fd = np.empty(10)
    for i in range(10):
        e = np.zeros(10)
        e[i] = h
        fd[i] = (dual_objective(th + e) - dual_objective(th - e)) / (2 * h)
    assert_allclose(dual_gradient(th), fd, atol=1e-6)


def test_theta_max_closed_form():
    ds = folded(np.ones((4, 1)), [1, 1, -1, -1])
    assert_allclose(theta_max(ds).theta, [0.5] * 4)
    ds = folded(np.ones((3, 1)), [1, -1, -1])
    assert_allclose(theta_max(ds).theta, [2 / 3, 1 / 3, 1 / 3], rtol=1e-15)


def test_lambda_max_example(four):
    lm = lambda_max(four)
    # |<theta, col>| / m with theta = 1/2: col 0 gives 2, col 1 gives 0.5.
    assert lm.lambda_max == pytest.approx(0.5, rel=1e-15)
    assert lm.j0 == 0 and lm.sign0 == 1


def test_lambda_max_ties_pick_smallest_index():
    b = [1, 1, -1, -1]
    ds = folded(np.array([[0.0, 1, -1], [0, 1, -1], [1, 1, -1], [0, 1, -1]]), b)
    lm = lambda_max(ds)
    assert (lm.j0, lm.sign0) == (1, 1)


def test_lambda_max_degenerate():
    ds = folded(np.array([[1.0], [-1.0], [0.0], [0.0]]), [1, 1, -1, -1])
    with pytest.raises(DegenerateProblemError):
        lambda_max(ds)


def test_projection():
    rng = np.random.default_rng(2)
    ds, _, b = random_dense(rng, 7, 3)
    assert_allclose(project_complement_b(b, ds), 0.0, atol=0)
    v = rng.standard_normal(7)
    v -= (v @ b) / 7 * b
    assert_allclose(project_complement_b(v, ds), v, atol=1e-15)
    w = rng.standard_normal(7)
    assert abs(project_complement_b(w, ds) @ b) <= 1e-12 * np.linalg.norm(w)


def test_radius_examples(four):
    g = max_geometry(four)
    assert radius(g.lambda0, g) == 0.0
    r = radius(0.5 * g.lambda0, g)
    assert r * r == pytest.approx(2 * (entropy(0.25) + math.log(2)), rel=1e-12)
    assert r == pytest.approx(0.5114920, abs=1e-7)
    with pytest.raises(GeometryError):
        radius(0.0, g)
    with pytest.raises(GeometryError):
        radius(1.01 * g.lambda0, g)


def test_radius_monotone():
    ds = synthesize(40, 60, 0.2, 0.3, 8)
    g = max_geometry(ds)
    rs = [radius(t * g.lambda0, g) for t in np.linspace(1.0, 0.05, 20)]
    assert all(b >= a for a, b in zip(rs, rs[1:]))


@settings(max_examples=200, deadline=None)
@given(
    m=st.sampled_from([1, 5, 50]),
    seed=st.integers(0, 2**32 - 1),
)
def test_strong_convexity(m, seed):
    rng = np.random.default_rng(seed)
    t1 = rng.uniform(1e-3, 1 - 1e-3, m)
    t2 = rng.uniform(1e-3, 1 - 1e-3, m)
    lhs = dual_objective(t2) - dual_objective(t1) - dual_gradient(t1) @ (t2 - t1)
    assert lhs >= (2.0 / m) * np.sum((t2 - t1) ** 2) - 1e-10


def test_hessian_lower_bound():
    th = np.linspace(1e-6, 1 - 1e-6, 1001)
    assert np.all(1.0 / (th * (1 - th)) >= 4.0)


def test_geometry_at_lambda_max():
    ds = synthesize(50, 80, 0.2, 0.5, 9)
    lm = lambda_max(ds)
    g = max_geometry(ds)
    assert (g.j0, g.sign0) == (lm.j0, lm.sign0)
    xstar = g.sign0 * ds.dense_column(g.j0)
    assert g.theta0.theta @ xstar == pytest.approx(ds.m * g.lambda0, rel=1e-9)
    assert abs(g.theta0.theta @ ds.labels) <= 1e-9 * ds.m
    assert g.g_theta0 == pytest.approx(dual_objective(g.theta0))
    assert not g.approximate


def test_geometry_from_solver_dual():
    ds = synthesize(50, 80, 0.2, 0.5, 9)
    lam0 = 0.6 * lambda_max(ds).lambda_max
    sol = fit(ds, lam0, tol_gap=1e-12)
    g = build_geometry(ds, lam0, sol.theta)
    assert abs(sol.beta[g.j0]) > 0
    xstar = g.sign0 * ds.dense_column(g.j0)
    assert g.theta0.theta @ xstar == pytest.approx(ds.m * lam0, rel=1e-7)


def test_geometry_rejects_perturbed_theta():
    ds = synthesize(50, 80, 0.2, 0.5, 9)
    g = max_geometry(ds)
    rng = np.random.default_rng(0)
    noisy = g.theta0.theta + 1e-3 * rng.standard_normal(ds.m)
    with pytest.raises(GeometryError):
        build_geometry(ds, g.lambda0, noisy)
    # Re-centered so only the active-set condition can fail.
    noisy -= (noisy @ ds.labels) / ds.m * ds.labels
    with pytest.raises(GeometryError):
        build_geometry(ds, g.lambda0, noisy * 0.999)


def test_geometry_argument_errors(four):
    g = max_geometry(four)
    with pytest.raises(GeometryError):
        build_geometry(four, 2 * g.lambda_max, g.theta0)
    with pytest.raises(GeometryError):
        build_geometry(four, g.lambda0, np.full(3, 0.5))


def test_column_parallel_to_b_never_becomes_reference():
    # <theta0, alpha*b> = 0 under the centering constraint, so it is never active.
    b = np.array([1.0, 1.0, -1.0, -1.0])
    ds = folded(np.column_stack([3 * b, [0.1, 0.0, 0.0, 0.2]]), b)
    g = max_geometry(ds)
    assert g.j0 == 1 and not g.degenerate


def test_degenerate_flag():
    from dataclasses import replace

    b = np.array([1.0, 1.0, -1.0, -1.0])
    g = max_geometry(folded(np.column_stack([b, [0.1, 0.0, 0.0, 0.2]]), b))
    assert replace(g, proj_xstar_norm=0.0).degenerate


def test_scaled_reference_is_feasible():
    ds = synthesize(60, 100, 0.2, 0.0, 12)
    g = max_geometry(ds)
    for t in (0.9, 0.5, 0.1):
        lam = t * g.lambda0
        th = t * g.theta0.theta
        assert np.all((th > 0) & (th < 1))
        assert abs(th @ ds.labels) <= 1e-12 * ds.m
        assert np.max(np.abs(ds.X.T @ th)) <= ds.m * lam * (1 + 1e-12)


def test_ball_contains_dual_optimum():
    ds = synthesize(60, 100, 0.2, 0.0, 12)
    g = max_geometry(ds)
    for t in (0.95, 0.7, 0.4, 0.1):
        lam = t * g.lambda0
        sol = fit(ds, lam, tol_gap=1e-10)
        dist = np.linalg.norm(sol.theta.theta - g.theta0.theta)
        r = radius(lam, g)
        assert dist**2 <= r * r + 1e-8
        if dist > 1e-6:
            assert dist < r
