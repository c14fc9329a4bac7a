"""Compiled coordinate descent for the weighted-lasso Newton subproblem."""

import numpy as np
from numba import njit


@njit(cache=True)
def _soft(u, t):
    if u > t:
        return u - t
    if u < -t:
        return u + t
    return 0.0


@njit(cache=True)
def newton_direction(indptr, indices, data, b, w, grad, grad_c, beta, free, lam, nu, tol, max_sweeps):
    """Minimize the quadratic model of the smooth loss plus ``lam * ||beta + d||_1``.

    The model is ``grad.d + grad_c*dc + (1/2m) sum_i w_i (X d + b dc)_i^2``
    plus a ``nu/2 ||(d, dc)||^2`` damping term. Returns ``(d, dc, q)`` with
    ``q = X d + b dc``. Coordinates with ``free[j]`` false are held at zero
    change.

    Sweeps alternate between all coordinates and the current nonzeros; the
    loop ends when a full sweep moves no coordinate by more than ``tol``
    (measured as curvature times step).
    """
    m = w.shape[0]
    k = indptr.shape[0] - 1
    d = np.zeros(k)
    q = np.zeros(m)
    dc = 0.0

    a = np.empty(k)
    for j in range(k):
        s = 0.0
        for ptr in range(indptr[j], indptr[j + 1]):
            s += w[indices[ptr]] * data[ptr] * data[ptr]
        a[j] = s / m + nu
    wsum = 0.0
    for i in range(m):
        wsum += w[i]
    a_c = wsum / m + nu

    full = True
    for sweep in range(max_sweeps):
        change = 0.0

        gm = grad_c + nu * dc
        for i in range(m):
            gm += w[i] * q[i] * b[i] / m
        step = -gm / a_c
        if step != 0.0:
            dc += step
            for i in range(m):
                q[i] += step * b[i]
            change = max(change, a_c * abs(step))

        for j in range(k):
            cur = beta[j] + d[j]
            if not free[j] or (not full and cur == 0.0):
                continue
            gm = grad[j] + nu * d[j]
            for ptr in range(indptr[j], indptr[j + 1]):
                gm += w[indices[ptr]] * data[ptr] * q[indices[ptr]] / m
            new = _soft(cur - gm / a[j], lam / a[j])
            delta = new - cur
            if delta != 0.0:
                d[j] += delta
                for ptr in range(indptr[j], indptr[j + 1]):
                    q[indices[ptr]] += delta * data[ptr]
                change = max(change, a[j] * abs(delta))

        if change <= tol:
            if full:
                break
            full = True
        else:
            full = False
    return d, dc, q


@njit(cache=True, inline="always")
def _side_bound(ip, th_x, q, r, d, s, gap, s2, a2, omd, sqd):
    # Maximum of <theta, xbar> over the screening region; see bounds._side.
    cbar = ip / (q * s)
    if cbar > 1.0:
        cbar = 1.0
    elif cbar < -1.0:
        cbar = -1.0
    if cbar >= d:
        return r * q - th_x
    w = q * np.sqrt(max((1.0 - cbar) * (1.0 + cbar), 0.0))
    if a2 <= 1e-14 * s2 * s2:
        if cbar != -1.0:
            return np.nan
        u = q / s
    else:
        a1 = 2.0 * ip * s2 * omd
        a0 = ip * ip - d * d * q * q * s2
        # sqrt of the discriminant, factored to avoid a second sqrt
        sq = sqd * s2 * s * w
        if a1 > 0.0:
            u = 2.0 * a0 / (-a1 - sq)
        else:
            u = (-a1 + sq) / (2.0 * a2)
    h = u * s + cbar * q
    return r * np.sqrt(w * w + h * h) - u * gap - th_x


@njit(cache=True)
def screen_bounds(q, cross, dot_theta0, zero, r, d, s, gap):
    """``max(T_+, T_-)`` per feature; zero-projection features get 0."""
    p = q.shape[0]
    out = np.zeros(p)
    omd = (1.0 - d) * (1.0 + d)
    s2 = s * s
    a2 = s2 * s2 * omd
    sqd = 2.0 * d * np.sqrt(max(omd, 0.0))
    for j in range(p):
        if zero[j]:
            continue
        tp = _side_bound(-cross[j], -dot_theta0[j], q[j], r, d, s, gap, s2, a2, omd, sqd)
        tm = _side_bound(cross[j], dot_theta0[j], q[j], r, d, s, gap, s2, a2, omd, sqd)
        out[j] = max(tp, tm)
    return out


def warmup():
    """Compile (or load from cache) the kernels so later calls time only the work."""
    indptr = np.array([0, 1], dtype=np.int64)
    indices = np.array([0], dtype=np.int64)
    one = np.ones(1)
    free = np.ones(1, dtype=np.bool_)
    newton_direction(indptr, indices, one, one, one, one.copy(), 0.0, np.zeros(1), free, 0.1, 1e-10, 1e-12, 5)
    # Screening statistics are frozen arrays, a distinct compiled signature.
    ro = np.ones(1)
    ro.flags.writeable = False
    screen_bounds(ro, ro, ro, ~free, 1.0, 0.5, 1.0, 0.1)

