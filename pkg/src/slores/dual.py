"""Dual of l1-regularized logistic regression and the screening geometry.

The dual objective is the scaled negative binary entropy

    g(theta) = (1/m) * sum_i [theta_i log theta_i + (1 - theta_i) log(1 - theta_i)]

minimized over ``theta`` in the open unit box subject to
``|<theta, xbar^j>| <= m * lam`` for every feature and ``<theta, b> = 0``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logit

from .data import FeaturePrecompute, precompute
from .errors import DegenerateProblemError, GeometryError

logger = logging.getLogger(__name__)

TAU_ACTIVE = 1e-7
FEAS_RTOL = 1e-7


@dataclass(frozen=True, eq=False)
class DualPoint:
    """A point of the open unit box (0, 1)^m."""

    theta: np.ndarray

    def __post_init__(self):
        th = np.array(self.theta, dtype=np.float64).ravel()
        if th.size == 0:
            raise ValueError("empty dual point")
        if not np.all(np.isfinite(th)) or np.any(th <= 0.0) or np.any(th >= 1.0):
            raise ValueError("dual point entries must lie strictly inside (0, 1)")
        th.flags.writeable = False
        object.__setattr__(self, "theta", th)

    def __len__(self):
        return self.theta.shape[0]


def _as_theta(theta):
    if isinstance(theta, DualPoint):
        return theta.theta
    return DualPoint(theta).theta


def _entropy_mean(th):
    return float(np.mean(th * np.log(th) + (1.0 - th) * np.log1p(-th)))


def dual_objective(theta):
    return _entropy_mean(_as_theta(theta))


def dual_gradient(theta):
    th = _as_theta(theta)
    return logit(th) / th.shape[0]


class LambdaMax(NamedTuple):
    lambda_max: float
    theta_max: DualPoint
    j0: int
    sign0: int


def theta_max(ds):
    """Closed-form dual optimum for every ``lam >= lambda_max``."""
    b = ds.labels
    th = np.where(b > 0, ds.m_minus / ds.m, ds.m_plus / ds.m)
    return DualPoint(th)


def lambda_max(ds):
    """Smallest ``lam`` with an all-zero coefficient vector, and its dual optimum.

    ``j0`` is the smallest feature index attaining the maximum.
    """
    th = theta_max(ds)
    dots = ds.X.T @ th.theta
    j0 = int(np.argmax(np.abs(dots)))
    lmax = float(abs(dots[j0]) / ds.m)
    if lmax == 0.0:
        raise DegenerateProblemError("every column is orthogonal to theta_max; lambda_max = 0")
    return LambdaMax(lmax, th, j0, 1 if dots[j0] > 0 else -1)


def project_complement_b(v, ds):
    """Orthogonal projection of ``v`` onto the complement of span{b}."""
    v = np.asarray(v, dtype=np.float64)
    b = ds.labels
    return v - (v @ b / ds.m) * b


@dataclass(frozen=True, eq=False)
class ScreeningGeometry:
    """Everything fixed by the reference pair (lambda0, theta0)."""

    lambda0: float
    theta0: DualPoint
    lambda_max: float
    j0: int
    sign0: int
    proj_xstar_norm: float
    g_theta0: float
    grad_dot_theta0: float
    features: FeaturePrecompute
    approximate: bool = False
    xstar_dot_theta0: float | None = None

    @property
    def m(self):
        return self.theta0.theta.shape[0]

    def slack(self, lam):
        """``<theta0, xstar> - m*lam``: how far the centre sits inside the halfspace.

        Equals ``m*(lambda0 - lam)`` when ``xstar`` attains the constraint
        exactly; with a tolerance-selected reference column it can be
        slightly smaller, and the smaller value is the one that keeps the
        bound valid.
        """
        top = self.m * self.lambda0 if self.xstar_dot_theta0 is None else self.xstar_dot_theta0
        return top - self.m * lam

    @property
    def degenerate(self):
        return self.proj_xstar_norm == 0.0


def radius(lam, geom):
    """Radius of the ball around ``theta0`` known to contain the dual optimum at ``lam``."""
    lam0 = geom.lambda0
    if not 0.0 < lam <= lam0:
        raise GeometryError(f"radius needs 0 < lam <= lambda0 = {lam0!r}, got {lam!r}")
    if lam == lam0:
        return 0.0
    t = lam / lam0
    th0 = geom.theta0.theta
    bracket = (
        # t * theta0 stays inside the box for 0 < t < 1; skip revalidation
        _entropy_mean(t * th0) - geom.g_theta0 + (1.0 - t) * geom.grad_dot_theta0
    )
    if bracket < 0.0:
        if bracket < -1e-12 * max(1.0, abs(geom.g_theta0)):
            raise GeometryError(f"negative radius bracket {bracket!r}")
        bracket = 0.0
    return float(np.sqrt(0.5 * geom.m * bracket))


def build_geometry(ds, lambda0, theta0, approximate=False):
    """Freeze the reference quantities used by every bound at this ``lambda0``.

    Raises :class:`GeometryError` when ``theta0`` is not (numerically) dual
    feasible at ``lambda0`` or has an empty active set.
    """
    th = _as_theta(theta0)
    m = ds.m
    if th.shape[0] != m:
        raise GeometryError(f"theta0 has length {th.shape[0]}, dataset has m={m}")
    lmax = lambda_max(ds).lambda_max
    if not 0.0 < lambda0 <= lmax * (1.0 + 1e-12):
        raise GeometryError(f"lambda0={lambda0!r} outside (0, lambda_max={lmax!r}]")

    dots = ds.X.T @ th
    bound = m * lambda0
    if np.max(np.abs(dots)) > bound * (1.0 + FEAS_RTOL):
        raise GeometryError("theta0 violates |<theta0, xbar^j>| <= m*lambda0")
    if abs(th @ ds.labels) > 1e-9 * m:
        raise GeometryError("theta0 violates <theta0, b> = 0")
    active = np.flatnonzero(np.abs(dots) >= bound * (1.0 - TAU_ACTIVE))
    if active.size == 0:
        raise GeometryError("empty active set: theta0 is not a dual optimum at lambda0")
    j0 = int(active[0])
    sign0 = 1 if dots[j0] > 0 else -1

    table = precompute(ds, th, j0, sign0)
    pnorm = float(table.proj_norm[j0])
    if pnorm == 0.0:
        logger.warning("reference column %d is parallel to b; screening disabled", j0)
    return ScreeningGeometry(
        lambda0=float(lambda0),
        theta0=DualPoint(th),
        lambda_max=lmax,
        j0=j0,
        sign0=sign0,
        proj_xstar_norm=pnorm,
        g_theta0=dual_objective(th),
        grad_dot_theta0=float(dual_gradient(th) @ th),
        features=table,
        approximate=approximate,
        xstar_dot_theta0=float(sign0 * dots[j0]),
    )


def max_geometry(ds):
    """Geometry at the natural reference point ``lambda0 = lambda_max``."""
    lm = lambda_max(ds)
    return build_geometry(ds, lm.lambda_max, lm.theta_max)
