import numpy as np
import pytest
from numpy.testing import assert_allclose

from slores.bounds import BoundCase, bound_all, bound_feature, oracle_bound, screen_all
from slores.data import synthesize
from slores.dual import max_geometry, radius
from slores.errors import BoundError
from slores.solver import fit

from conftest import folded, random_dense, with_cbar_columns


def tol(ds, lam):
    return max(1e-8, 1e-6 * ds.m * lam)


def random_geometry(seed, m=10, p=8):
    rng = np.random.default_rng(seed)
    ds, _, _ = random_dense(rng, m, p, 0.7)
    return ds, max_geometry(ds)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("t", [0.2, 0.5, 0.8, 0.95, 0.99])
def test_matches_oracle(seed, t):
    ds, g = random_geometry(seed)
    lam = t * g.lambda0
    for j in range(ds.p):
        res = bound_feature(j, lam, g)
        for xi, val in ((1, res.t_plus), (-1, res.t_minus)):
            assert val == pytest.approx(oracle_bound(j, xi, lam, g, ds), abs=tol(ds, lam))


def test_both_cases_are_exercised():
    seen = set()
    for seed in range(6):
        ds, g = random_geometry(seed)
        for t in (0.2, 0.5, 0.8, 0.99):
            fb = bound_all(t * g.lambda0, g)
            seen.update(fb.case_plus.tolist() + fb.case_minus.tolist())
    assert {BoundCase.CASE_A, BoundCase.CASE_B} <= seen


def test_result_invariants():
    ds, g = random_geometry(3)
    lam = 0.6 * g.lambda0
    for j in range(ds.p):
        res = bound_feature(j, lam, g)
        assert res.t == max(res.t_plus, res.t_minus)
        assert 0.0 < res.d <= 1.0
        for side in (res.plus, res.minus):
            if side.case is BoundCase.CASE_B:
                a0, a1, a2, delta = side.quad
                assert side.u2_star >= 0.0 and delta >= 0.0
                assert a2 > 0.0
                # u2* is a root of the quadratic.
                resid = a2 * side.u2_star**2 + a1 * side.u2_star + a0
                assert abs(resid) <= 1e-9 * (abs(a0) + abs(a1) * side.u2_star + a2 * side.u2_star**2 + 1e-300)
            else:
                assert side.u2_star is None and side.quad is None


def test_delta_nonnegative_before_clamping():
    ds, g = random_geometry(4)
    pre = g.features
    s = g.proj_xstar_norm
    for t in (0.3, 0.7, 0.95):
        lam = t * g.lambda0
        r = radius(lam, g)
        d = ds.m * (g.lambda0 - lam) / (r * s)
        q = pre.proj_norm
        for xi in (1, -1):
            ip = -xi * pre.dot_proj_xstar
            a2 = s**4 * (1 - d * d)
            a1 = 2 * ip * s**2 * (1 - d * d)
            a0 = ip**2 - d * d * q**2 * s**2
            raw = a1**2 - 4 * a2 * a0
            scale = a1**2 + np.abs(4 * a2 * a0)
            assert np.all(raw >= -1e-10 * scale)


def test_zero_projection_feature():
    rng = np.random.default_rng(0)
    ds, X, b = random_dense(rng, 8, 4)
    ds = folded(np.column_stack([X, 2.5 * b, -0.1 * b]), b)
    g = max_geometry(ds)
    for t in (0.3, 0.9):
        for j in (4, 5):
            res = bound_feature(j, t * g.lambda0, g)
            assert res.case is BoundCase.ZERO_PROJECTION
            assert res.t == 0.0
            assert oracle_bound(j, 1, t * g.lambda0, g, ds) == pytest.approx(0.0, abs=1e-12)


def test_reference_column_collinear_case(four):
    g = max_geometry(four)
    for t in (0.2, 0.5, 0.9):
        lam = t * g.lambda0
        res = bound_feature(g.j0, lam, g)
        # xi = sign0 gives xbar = -xstar, cosine exactly -1.
        side = res.plus if g.sign0 == 1 else res.minus
        assert side.case is BoundCase.CASE_B
        assert side.t == pytest.approx(four.m * lam, rel=1e-12)
        assert side.t == pytest.approx(oracle_bound(g.j0, g.sign0, lam, g, four), abs=tol(four, lam))


def test_engineered_cosines_match_oracle():
    rng = np.random.default_rng(5)
    base, _, _ = random_dense(rng, 12, 6, 0.8)
    g0 = max_geometry(base)
    for t in (0.3, 0.8, 0.99):
        lam = t * g0.lambda0
        d = base.m * (g0.lambda0 - lam) / (radius(lam, g0) * g0.proj_xstar_norm)
        targets = [-1.0, d - 1e-6, d + 1e-6, 1.0]
        # Side xi = -1 sees the column's own cosine.
        ds = with_cbar_columns(base, g0, targets, rng)
        g = max_geometry(ds)
        assert (g.j0, g.lambda_max) == (g0.j0, pytest.approx(g0.lambda_max, rel=1e-14))
        for k, c in enumerate(targets):
            j = base.p + k
            res = bound_feature(j, lam, g)
            want = BoundCase.CASE_A if c >= d else BoundCase.CASE_B
            assert res.minus.case is want
            for xi, val in ((1, res.t_plus), (-1, res.t_minus)):
                assert val == pytest.approx(oracle_bound(j, xi, lam, g, ds), abs=tol(ds, lam))


def test_case_continuity_at_threshold():
    rng = np.random.default_rng(6)
    base, _, _ = random_dense(rng, 12, 6, 0.8)
    g0 = max_geometry(base)
    lam = 0.7 * g0.lambda0
    d = base.m * (g0.lambda0 - lam) / (radius(lam, g0) * g0.proj_xstar_norm)
    eps = 1e-9
    ds = with_cbar_columns(base, g0, [d - eps, d + eps], rng)
    g = max_geometry(ds)
    lo = bound_feature(base.p, lam, g).minus
    hi = bound_feature(base.p + 1, lam, g).minus
    assert (lo.case, hi.case) == (BoundCase.CASE_B, BoundCase.CASE_A)
    assert lo.u2_star == pytest.approx(0.0, abs=1e-6)
    # Both columns have the same norm and nearly equal direction.
    assert lo.t == pytest.approx(hi.t, abs=1e-8)


def test_sign_symmetry():
    ds, g = random_geometry(7)
    neg = folded(-ds.X.toarray(), ds.labels)
    gn = max_geometry(neg)
    lam = 0.55 * g.lambda0
    a, b = bound_all(lam, g), bound_all(lam, gn)
    assert_allclose(a.t_plus, b.t_minus, rtol=1e-12, atol=1e-12)
    assert_allclose(a.t_minus, b.t_plus, rtol=1e-12, atol=1e-12)


def test_fast_path_matches_detailed():
    for seed in range(4):
        ds = synthesize(60, 300, 0.1, 0.5, seed)
        g = max_geometry(ds)
        for t in (0.1, 0.5, 0.9, 0.999):
            lam = t * g.lambda_max
            assert_allclose(screen_all(lam, g), bound_all(lam, g).t, rtol=1e-14, atol=1e-13)


def test_bound_is_sound():
    ds = synthesize(40, 120, 0.2, 0.3, 21)
    g = max_geometry(ds)
    for t in (0.9, 0.6, 0.3):
        lam = t * g.lambda0
        sol = fit(ds, lam, tol_gap=1e-10)
        dots = np.abs(ds.X.T @ sol.theta.theta)
        assert np.all(dots <= bound_all(lam, g).t + 1e-7)


def test_argument_errors(four):
    g = max_geometry(four)
    for lam in (0.0, g.lambda0, 1.1 * g.lambda0):
        with pytest.raises(BoundError):
            bound_all(lam, g)


def test_oracle_trivial_cases():
    ds, g = random_geometry(8)
    # Tiny step below lambda0: region shrinks to the centre.
    lam = g.lambda0 * (1 - 1e-10)
    for j in range(ds.p):
        val = oracle_bound(j, 1, lam, g, ds)
        centre = g.theta0.theta @ ds.dense_column(j)
        assert val == pytest.approx(centre, abs=1e-3)
        assert val <= ds.m * g.lambda0 * (1 + 1e-9)


def test_sound_with_tolerance_selected_reference():
    # From an iterative dual the reference column is only within tolerance of
    # the constraint; the bound must use the slack it actually has.
    ds = synthesize(40, 120, 0.1, 0.3, 0)
    lm = max_geometry(ds).lambda_max
    lam0 = 0.66 * lm
    prev = fit(ds, lam0, tol_gap=1e-10)
    from slores.dual import build_geometry

    g = build_geometry(ds, lam0, prev.theta, approximate=True)
    xstar = g.sign0 * ds.dense_column(g.j0)
    assert g.slack(lam0) == pytest.approx(g.theta0.theta @ xstar - ds.m * lam0, abs=1e-12)
    for t in (0.99, 0.9, 0.6):
        lam = t * lam0
        sol = fit(ds, lam, tol_gap=1e-12)
        dots = np.abs(ds.X.T @ sol.theta.theta)
        fb = bound_all(lam, g)
        assert np.all(dots <= fb.t + 1e-7)
        for j in (g.j0, 0, 5):
            res = bound_feature(j, lam, g)
            assert res.t_plus == pytest.approx(oracle_bound(j, 1, lam, g, ds), abs=tol(ds, lam))
            assert res.t_minus == pytest.approx(oracle_bound(j, -1, lam, g, ds), abs=tol(ds, lam))
