"""Closed-form upper bound on |<theta*_lam, xbar^j>| over the screening region.

The region is the intersection of the ball ``||theta - theta0|| <= r``, the
hyperplane ``<theta, b> = 0`` and the halfspace ``<theta, xstar> <= m*lam``.
For each sign ``xi`` the maximum of ``<theta, xi*xbar^j>`` over it is either
the plain ball-and-hyperplane maximum (the halfspace is inactive) or the
maximum on the halfspace boundary, obtained from the positive root of a
quadratic in the halfspace multiplier.

Everything here works on the scalar statistics of
:class:`~slores.data.FeaturePrecompute`; no column is touched twice.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._cd import screen_bounds
from .dual import project_complement_b, radius
from .errors import BoundError, GeometryError

# A column whose b-complement projection is below this fraction of its norm
# is treated as parallel to b. Kept small: a wrong call here discards unsafely.
EPS_PROJ = 1e-10
D_SLACK = 1e-9


class BoundCase(enum.IntEnum):
    ZERO_PROJECTION = 0
    CASE_A = 1
    CASE_B = 2


@dataclass(frozen=True)
class SideBound:
    t: float
    case: BoundCase
    u2_star: float | None = None
    quad: tuple | None = None  # (a0, a1, a2, delta)


@dataclass(frozen=True)
class BoundResult:
    feature: int
    plus: SideBound
    minus: SideBound
    d: float

    @property
    def t_plus(self):
        return self.plus.t

    @property
    def t_minus(self):
        return self.minus.t

    @property
    def t(self):
        return max(self.plus.t, self.minus.t)

    @property
    def case(self):
        """Case of the side attaining the maximum."""
        return self.plus.case if self.plus.t >= self.minus.t else self.minus.case

    @property
    def u2_star(self):
        side = self.plus if self.plus.t >= self.minus.t else self.minus
        return side.u2_star


@dataclass(frozen=True, eq=False)
class FeatureBounds:
    """Vectorized bounds for every feature at one ``lam``."""

    lam: float
    r: float
    d: float
    t_plus: np.ndarray
    t_minus: np.ndarray
    case_plus: np.ndarray
    case_minus: np.ndarray
    u2_plus: np.ndarray
    u2_minus: np.ndarray
    quad_plus: np.ndarray  # shape (p, 4): a0, a1, a2, delta
    quad_minus: np.ndarray

    @property
    def t(self):
        return np.maximum(self.t_plus, self.t_minus)


def _d_constant(lam, geom, r):
    d = geom.slack(lam) / (r * geom.proj_xstar_norm)
    if not d > 0.0:
        raise GeometryError(f"d = {d!r} is not positive")
    if d > 1.0 + D_SLACK:
        raise GeometryError(f"d = {d!r} exceeds 1: theta0 is not a dual optimum at lambda0")
    return min(d, 1.0)


def _side(xi, q, cross, dot_theta0, zero, lam, geom, r, d):
    """Bound of max <theta, xi * xbar^j> for arrays of features."""
    m = geom.m
    s = geom.proj_xstar_norm
    gap = geom.slack(lam)
    # xbar = -xi * xbar^j
    ip = -xi * cross
    th_x = -xi * dot_theta0

    with np.errstate(divide="ignore", invalid="ignore"):
        cbar = np.clip(np.where(zero, 0.0, ip / (q * s)), -1.0, 1.0)
    case_a = (cbar >= d) & ~zero
    case_b = ~case_a & ~zero

    t = np.zeros_like(q)
    t[case_a] = r * q[case_a] - th_x[case_a]

    omd = (1.0 - d) * (1.0 + d)
    s2, s4 = s * s, s**4
    a2 = s4 * omd
    a1 = 2.0 * ip * s2 * omd
    a0 = ip * ip - d * d * q * q * s2
    one_m_c2 = (1.0 - cbar) * (1.0 + cbar)
    delta = 4.0 * d * d * omd * s4 * (q * q * s2 * one_m_c2)
    delta = np.maximum(delta, 0.0)
    sq = np.sqrt(delta)

    u = np.full_like(q, np.nan)
    if np.any(case_b):
        if a2 <= 1e-14 * s4:
            collinear = case_b & (cbar == -1.0)
            if np.any(case_b & ~collinear):
                raise BoundError("a2 vanishes in case B with cbar > -1")
            u[collinear] = q[collinear] / s
        else:
            pos = case_b & (a1 > 0.0)
            neg = case_b & ~(a1 > 0.0)
            # Same positive root, written to avoid cancellation in -a1 + sqrt(delta).
            u[pos] = 2.0 * a0[pos] / (-a1[pos] - sq[pos])
            u[neg] = (-a1[neg] + sq[neg]) / (2.0 * a2)
        ub = u[case_b]
        qb, cb = q[case_b], cbar[case_b]
        norm_sq = qb * qb * one_m_c2[case_b] + (ub * s + cb * qb) ** 2
        t[case_b] = r * np.sqrt(norm_sq) - ub * gap - th_x[case_b]

    cases = np.where(zero, BoundCase.ZERO_PROJECTION, np.where(case_a, BoundCase.CASE_A, BoundCase.CASE_B))
    quad = np.column_stack([a0, a1, np.full_like(q, a2), delta])
    quad[~case_b] = np.nan
    return t, cases.astype(np.int8), u, quad


def bound_all(lam, geom):
    """Closed-form bounds ``T_+`` and ``T_-`` for every feature at ``lam < lambda0``."""
    r, d = _prepare(lam, geom)
    pre = geom.features
    q = np.asarray(pre.proj_norm)
    zero = zero_projection(pre)
    args = (q, pre.dot_proj_xstar, pre.dot_theta0, zero, lam, geom, r, d)
    tp, cp, up, qp = _side(+1, *args)
    tm, cm, um, qm = _side(-1, *args)
    return FeatureBounds(lam, r, d, tp, tm, cp, cm, up, um, qp, qm)


def _prepare(lam, geom):
    if not 0.0 < lam < geom.lambda0:
        raise BoundError(f"bounds need 0 < lam < lambda0 = {geom.lambda0!r}, got {lam!r}")
    if geom.degenerate:
        raise GeometryError("reference column has zero projection; bound undefined")
    r = radius(lam, geom)
    if r == 0.0:
        raise BoundError("zero radius: lam is numerically equal to lambda0")
    return r, _d_constant(lam, geom, r)


def zero_projection(pre):
    """Mask of features whose projection off ``b`` is numerically zero."""
    return np.asarray(pre.proj_norm) <= EPS_PROJ * np.sqrt(pre.norm_sq)


def screen_all(lam, geom):
    """``max(T_+, T_-)`` for every feature, without the per-case detail.

    Compiled fast path of :func:`bound_all` used by the screening rule.
    """
    r, d = _prepare(lam, geom)
    pre = geom.features
    t = screen_bounds(
        pre.proj_norm,
        pre.dot_proj_xstar,
        pre.dot_theta0,
        zero_projection(pre),
        r,
        d,
        geom.proj_xstar_norm,
        geom.slack(lam),
    )
    if np.isnan(t).any():
        raise BoundError("a2 vanishes in case B with cbar > -1")
    return t


def bound_feature(j, lam, geom, pre=None):
    """Closed-form bound for feature ``j``; ``pre`` defaults to ``geom.features``."""
    if pre is not None and pre is not geom.features:
        geom = _with_features(geom, pre)
    fb = bound_all(lam, geom)

    def side(t, c, u, qd):
        c = BoundCase(int(c[j]))
        if c is BoundCase.CASE_B:
            return SideBound(float(t[j]), c, float(u[j]), tuple(float(x) for x in qd[j]))
        return SideBound(float(t[j]), c)

    return BoundResult(
        feature=int(j),
        plus=side(fb.t_plus, fb.case_plus, fb.u2_plus, fb.quad_plus),
        minus=side(fb.t_minus, fb.case_minus, fb.u2_minus, fb.quad_minus),
        d=fb.d,
    )


def _with_features(geom, pre):
    from dataclasses import replace

    return replace(geom, features=pre)


def oracle_bound(j, xi, lam, geom, ds, tol=1e-12):
    """Maximize ``<theta, xi*xbar^j>`` over the screening region by direct search.

    Works on dense vectors, independently of the precomputed statistics.
    If the ball-and-hyperplane maximizer violates the halfspace, the value is
    ``min_{mu >= 0} <theta0, w> + r ||P w - mu P xstar|| - mu (<theta0, xstar> - m lam)``
    found by bisection on the sign of the derivative in ``mu``.
    """
    r = radius(lam, geom)
    if r < 0.0:
        raise GeometryError("negative radius")
    m = ds.m
    th0 = geom.theta0.theta
    w = xi * ds.dense_column(j)
    xstar = geom.sign0 * ds.dense_column(geom.j0)
    pw = project_complement_b(w, ds)
    v = project_complement_b(xstar, ds)
    base = float(th0 @ w)
    npw = float(np.linalg.norm(pw))
    halfspace = m * lam
    if npw == 0.0 or r == 0.0:
        return base

    theta_ball = th0 + r * pw / npw
    if theta_ball @ xstar <= halfspace * (1.0 + 1e-15):
        return base + r * npw

    slack = float(th0 @ xstar) - halfspace
    if slack <= 0.0:
        raise GeometryError("need <theta0, xstar> > m*lam for a nonempty gap")
    nv = float(np.linalg.norm(v))
    if r * nv <= slack:
        # Region reduces to a single point on the ball.
        return float((th0 - r * v / nv) @ w)

    def dual(mu):
        return r * np.linalg.norm(pw - mu * v) - mu * slack

    def deriv(mu):
        res = pw - mu * v
        nr = np.linalg.norm(res)
        if nr == 0.0:
            return 0.0
        return -r * (res @ v) / nr - slack

    lo, hi = 0.0, max(1.0, npw / nv)
    while deriv(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if deriv(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return base + float(min(dual(lo), dual(hi)))
