"""Proximal Newton and accelerated proximal gradient solvers for l1-regularized
logistic regression.

Minimizes

    (1/m) sum_i log(1 + exp(-<beta, xbar_i> - b_i c)) + lam ||beta||_1

over ``(beta, c)`` with an unpenalized intercept. Convergence is certified by
the duality gap against a feasible point of the dual problem recovered from
the current iterate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from ._cd import newton_direction
from .dual import DualPoint, dual_objective
from .errors import ConvergenceError, SloresError

CLIP_EPS = 1e-12
KKT_DELTA = 1e-5
NEWTON_DAMPING = 1e-10
ARMIJO = 1e-4
ROUNDOFF = 1e-13


def tau_zero(beta):
    return 1e-8 * max(1.0, float(np.max(np.abs(beta), initial=0.0)))


@dataclass(frozen=True, eq=False)
class PrimalSolution:
    beta: np.ndarray
    c: float
    lam: float
    objective: float
    gap: float
    iterations: int
    theta: DualPoint
    theta_raw: DualPoint | None = None
    kept: np.ndarray | None = None
    history: list = field(default_factory=list, repr=False)

    def support(self, tol=None):
        tol = tau_zero(self.beta) if tol is None else tol
        return np.flatnonzero(np.abs(self.beta) > tol)

    def n_zero(self):
        return self.beta.shape[0] - self.support().shape[0]


class DualRecovery(NamedTuple):
    raw: DualPoint
    feasible: DualPoint


def primal_objective(ds, lam, beta, c):
    z = ds.X @ beta + ds.labels * c
    return float(np.mean(np.logaddexp(0.0, -z)) + lam * np.sum(np.abs(beta)))


def _raw_theta(z):
    th = expit(-z)
    return np.clip(th, np.finfo(float).tiny, np.nextafter(1.0, 0.0))


def _make_feasible(theta, Xt_theta, Xt_b, b, XT, lam, free=None):
    """Re-center onto <theta, b> = 0, then scale into the l-inf constraint.

    ``Xt_theta`` and ``Xt_b`` are ``XT @ theta`` and ``XT @ b``; only the
    columns flagged in ``free`` (all when ``None``) constrain the scaling.
    """
    m = theta.shape[0]
    shift = -(theta @ b) / m
    th = theta + shift * b
    dots = Xt_theta + shift * Xt_b
    clipped = np.clip(th, CLIP_EPS, 1.0 - CLIP_EPS)
    if not np.array_equal(clipped, th):
        th = clipped
        dots = XT @ th
    if free is not None:
        dots = dots[free]
    top = float(np.max(np.abs(dots), initial=0.0))
    scale = min(1.0, m * lam / top) if top > 0.0 else 1.0
    return th * scale


def recover_dual(sol, ds, lam=None):
    """Dual point from the primal optimality conditions, plus a feasible repair."""
    lam = sol.lam if lam is None else lam
    b = ds.labels
    z = ds.X @ sol.beta + b * sol.c
    raw = _raw_theta(z)
    XT = ds._XT
    feas = _make_feasible(raw, XT @ raw, XT @ b, b, XT, lam)
    return DualRecovery(DualPoint(raw), DualPoint(feas))


def duality_gap(sol, theta_feasible, ds, lam, rtol=1e-9):
    """Primal objective plus dual objective at a feasible ``theta``."""
    th = theta_feasible.theta if isinstance(theta_feasible, DualPoint) else DualPoint(theta_feasible).theta
    m = ds.m
    viol = float(np.max(np.abs(ds.X.T @ th), initial=0.0)) - m * lam
    if viol > rtol * m * lam:
        raise SloresError(f"theta infeasible: l-inf constraint exceeded by {viol:.3e}")
    if abs(th @ ds.labels) > rtol * m:
        raise SloresError("theta infeasible: <theta, b> != 0")
    return primal_objective(ds, lam, sol.beta, sol.c) + dual_objective(th)


@dataclass(frozen=True)
class KKTReport:
    max_violation: float
    offending: np.ndarray
    residuals: np.ndarray

    @property
    def ok(self):
        return self.offending.size == 0


def kkt_check(sol, theta, ds, lam, delta=KKT_DELTA):
    """Per-feature violation of the optimality conditions, relative to ``m*lam``."""
    th = theta.theta if isinstance(theta, DualPoint) else np.asarray(theta)
    bound = ds.m * lam
    u = (ds.X.T @ th) / bound
    beta = sol.beta
    tz = tau_zero(beta)
    res = np.where(
        beta > tz,
        np.abs(u - 1.0),
        np.where(beta < -tz, np.abs(u + 1.0), np.maximum(np.abs(u) - 1.0, 0.0)),
    )
    bad = np.flatnonzero(res > delta)
    return KKTReport(float(np.max(res, initial=0.0)), bad, res)


def _smooth(z):
    return float(np.mean(np.logaddexp(0.0, -z)))


class _Problem:
    """Column-restricted view of the data shared by both methods.

    A small kept set is sliced out. A large one is handled as a mask over the
    full matrix (``free``), which avoids copying nearly all of it.
    """

    def __init__(self, ds, lam, cols, slice_always=False):
        self.m = ds.m
        self.b = ds.labels
        self.lam = lam
        p = ds.p
        self.free = None
        if cols.shape[0] == p or (not slice_always and 2 * cols.shape[0] >= p):
            self.X, self.XT = ds.X, ds._XT
            self.indptr, self.indices, self.data, self.bw = ds._kernel
            if cols.shape[0] < p:
                self.free = np.zeros(p, dtype=bool)
                self.free[cols] = True
        else:
            self.X = ds.X[:, cols]
            self.XT = self.X.T.tocsr()
            self.X.sort_indices()
            # Writable int64/float64 arrays only, so the compiled kernel has a
            # single signature.
            self.indptr = self.X.indptr.astype(np.int64)
            self.indices = self.X.indices.astype(np.int64)
            self.data = np.require(self.X.data, np.float64, "W")
            self.bw = np.array(self.b)
        self.Xt_b = self.XT @ self.b

    @property
    def width(self):
        return self.X.shape[1]

    def objective(self, z, beta):
        return _smooth(z) + self.lam * float(np.sum(np.abs(beta)))

    def gap(self, F, theta, Xt_theta):
        feas = _make_feasible(theta, Xt_theta, self.Xt_b, self.b, self.XT, self.lam, self.free)
        return F + dual_objective(feas), feas


def fit(
    ds,
    lam,
    kept=None,
    warm=None,
    tol_gap=1e-9,
    max_iter=100_000,
    method="newton",
    record=False,
):
    """Solve the penalized problem, optionally restricted to ``kept`` columns.

    Discarded coefficients are fixed at zero. The gap is certified on the
    restricted problem; for a safe screen it equals the full-problem gap.

    Parameters
    ----------
    method : {"newton", "apg"}
        ``"newton"`` takes proximal Newton steps whose weighted-lasso
        subproblem is solved by coordinate descent, with an Armijo line search
        on the full objective. ``"apg"`` is accelerated proximal gradient with
        backtracking and adaptive restart; it is much slower to reach small
        gaps on nearly separable data.
    record : bool
        Keep the objective value after every accepted iteration in
        ``history``.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` iterations pass without reaching ``tol_gap``.
    """
    if not lam > 0.0:
        raise SloresError(f"lam must be positive, got {lam!r}")
    if not tol_gap > 0.0:
        raise SloresError("tol_gap must be positive")
    p = ds.p
    cols = np.arange(p) if kept is None else np.asarray(kept, dtype=np.int64)
    prob = _Problem(ds, lam, cols, slice_always=method == "apg")

    beta0 = np.zeros(prob.width)
    # Sliced problems index kept columns densely; masked ones by position.
    pos = slice(None) if prob.width < p else cols
    if warm is not None:
        beta0[pos] = np.asarray(warm.beta, dtype=np.float64)[cols]
        c0 = float(warm.c)
    else:
        c0 = float(np.log(ds.m_plus / ds.m_minus))

    if method == "newton":
        run = _newton
    elif method == "apg":
        run = _apg
    else:
        raise SloresError(f"unknown method {method!r}")
    x_beta, x_c, x_z, F, gap, feas, it, history = run(prob, beta0, c0, tol_gap, max_iter, record)

    if prob.width == p:
        beta = x_beta
    else:
        beta = np.zeros(p)
        beta[cols] = x_beta
    return PrimalSolution(
        beta=beta,
        c=x_c,
        lam=float(lam),
        objective=F,
        gap=float(gap),
        iterations=it,
        theta=DualPoint(feas),
        theta_raw=DualPoint(_raw_theta(x_z)),
        kept=None if kept is None else cols,
        history=history,
    )


def _fail(prob, max_iter, gap):
    return ConvergenceError(
        f"no convergence at lam={prob.lam:.6g} after {max_iter} iterations (gap {gap:.3e})",
        lam=prob.lam,
        gap=gap,
    )


def _newton(prob, beta, c, tol_gap, max_iter, record):
    m, b, lam, X = prob.m, prob.b, prob.lam, prob.X
    z = X @ beta + b * c
    F = prob.objective(z, beta)
    history = [F] if record else []
    free = np.ones(prob.width, dtype=bool) if prob.free is None else prob.free
    gap = np.inf
    for it in range(1, max_iter + 1):
        theta = _raw_theta(z)
        Xt_theta = prob.XT @ theta
        gap, feas = prob.gap(F, theta, Xt_theta)
        if gap <= tol_gap:
            return beta, c, z, F, gap, feas, it, history

        g = -Xt_theta / m
        g_c = -float(theta @ b) / m
        viol = np.where(beta != 0.0, np.abs(g + lam * np.sign(beta)), np.maximum(np.abs(g) - lam, 0.0))
        viol[~free] = 0.0
        opt = max(float(np.max(viol, initial=0.0)), abs(g_c))
        w = theta * (1.0 - theta)
        tol_in = max(min(0.1, np.sqrt(opt)) * opt, 1e-16)
        d, dc, q = newton_direction(
            prob.indptr, prob.indices, prob.data, prob.bw, w, g, g_c, beta, free, lam, NEWTON_DAMPING, tol_in, 10_000
        )

        l1_change = float(np.sum(np.abs(beta + d) - np.abs(beta)))
        descent = float(g @ d) + g_c * dc + lam * l1_change
        if descent > -ROUNDOFF * abs(F):
            # The decrease is below what F can resolve, while the gap is still
            # linear in the remaining KKT violation: take the full step.
            if not np.any(d) and dc == 0.0:
                break
            alpha = 1.0
            b_new, z_new = beta + d, z + q
            F_new = prob.objective(z_new, b_new)
        else:
            alpha = 1.0
            for _ in range(60):
                z_new = z + alpha * q
                b_new = beta + alpha * d
                F_new = prob.objective(z_new, b_new)
                if F_new <= F + ARMIJO * alpha * descent:
                    break
                alpha *= 0.5
            else:
                break
        beta, c, z, F = b_new, c + alpha * dc, z_new, F_new
        if record:
            history.append(F)

    theta = _raw_theta(z)
    gap, feas = prob.gap(F, theta, prob.XT @ theta)
    if gap <= tol_gap:
        return beta, c, z, F, gap, feas, it, history
    raise _fail(prob, max_iter, gap)


def _apg(prob, x_beta, x_c, tol_gap, max_iter, record, check_every=10):
    m, b, lam, X, XT = prob.m, prob.b, prob.lam, prob.X, prob.XT
    x_z = X @ x_beta + b * x_c
    x_F = prob.objective(x_z, x_beta)

    # Backtracking starts from a cheap estimate and adapts both ways.
    col_sq = np.asarray(X.multiply(X).sum(axis=0)).ravel()
    L = 0.25 * (1.0 + float(np.max(col_sq, initial=0.0)))
    y_beta, y_c, y_z = x_beta, x_c, x_z
    t = 1.0
    gap = np.inf
    history = [x_F] if record else []

    for it in range(1, max_iter + 1):
        theta_y = _raw_theta(y_z)
        Xt_theta = XT @ theta_y
        g_beta = -Xt_theta / m
        g_c = -float(theta_y @ b) / m
        f_y = _smooth(y_z)

        if it % check_every == 1 or check_every == 1:
            # Any feasible dual point certifies; the one at y costs nothing extra.
            gap, feas = prob.gap(x_F, theta_y, Xt_theta)
            if gap <= tol_gap:
                return x_beta, x_c, x_z, x_F, gap, feas, it, history

        while True:
            step = 1.0 / L
            v = y_beta - step * g_beta
            n_beta = np.sign(v) * np.maximum(np.abs(v) - step * lam, 0.0)
            n_c = y_c - step * g_c
            n_z = X @ n_beta + b * n_c
            n_f = _smooth(n_z)
            d_beta = n_beta - y_beta
            d_c = n_c - y_c
            model = f_y + g_beta @ d_beta + g_c * d_c + 0.5 * L * (d_beta @ d_beta + d_c * d_c)
            if n_f <= model + 1e-14 * abs(f_y):
                break
            L *= 2.0
        n_F = n_f + lam * float(np.sum(np.abs(n_beta)))

        # A plain proximal step (t == 1) passing backtracking is a descent step;
        # any increase there is roundoff and is accepted.
        if n_F > x_F and t > 1.0:
            # Momentum overshot: restart from the last accepted iterate.
            t = 1.0
            y_beta, y_c, y_z = x_beta, x_c, x_z
            continue

        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        mom = (t - 1.0) / t_new
        # Gradient-based adaptive restart.
        if (y_beta - n_beta) @ (n_beta - x_beta) + (y_c - n_c) * (n_c - x_c) > 0.0:
            t_new, mom = 1.0, 0.0
        y_beta = n_beta + mom * (n_beta - x_beta)
        y_c = n_c + mom * (n_c - x_c)
        y_z = n_z + mom * (n_z - x_z)
        x_beta, x_c, x_z, x_F = n_beta, n_c, n_z, n_F
        t = t_new
        L *= 0.95
        if record:
            history.append(x_F)

    raise _fail(prob, max_iter, gap)
