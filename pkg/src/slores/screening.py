"""Feature screening rules and the rejection-ratio metric."""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass

import numpy as np

from .bounds import bound_all, screen_all, zero_projection
from .errors import GeometryError, SloresError
from .solver import tau_zero

logger = logging.getLogger(__name__)

TAU_SCREEN = 1e-9


class Rule(str, enum.Enum):
    SLORES = "slores"
    STRONG = "strong"
    NONE = "none"


@dataclass(frozen=True, eq=False)
class ScreenResult:
    kept: np.ndarray
    discarded: np.ndarray
    rule: Rule
    lam: float
    lambda0: float
    screen_time: float
    bounds: object = None

    @property
    def n_discarded(self):
        return int(self.discarded.shape[0])


def _result(keep_mask, rule, lam, lambda0, t0, bounds=None):
    return ScreenResult(
        kept=np.flatnonzero(keep_mask),
        discarded=np.flatnonzero(~keep_mask),
        rule=rule,
        lam=float(lam),
        lambda0=float(lambda0),
        screen_time=time.perf_counter() - t0,
        bounds=bounds,
    )


def no_screen(ds, lam, lambda0=np.nan):
    t0 = time.perf_counter()
    return _result(np.ones(ds.p, dtype=bool), Rule.NONE, lam, lambda0, t0)


def slores(ds, lam, geom, detail=False):
    """Safe screening: keep exactly the features whose bound reaches ``m*lam``.

    At ``lam >= lambda_max`` nothing is kept. At ``lam == lambda0`` (below
    ``lambda_max``) every feature is kept, since the bound needs ``lam <
    lambda0``. With ``detail`` the per-side bounds are attached to the result.
    """
    t0 = time.perf_counter()
    if ds.m != geom.m or ds.p != len(geom.features):
        raise SloresError("geometry was built for a different dataset")
    if not lam > 0.0:
        raise SloresError(f"lam must be positive, got {lam!r}")
    p = ds.p
    if lam >= geom.lambda_max:
        return _result(np.zeros(p, dtype=bool), Rule.SLORES, lam, geom.lambda0, t0)
    if lam >= geom.lambda0 or geom.degenerate or geom.slack(lam) <= 0.0:
        return _result(np.ones(p, dtype=bool), Rule.SLORES, lam, geom.lambda0, t0)

    zero_proj = zero_projection(geom.features)
    fb = None
    try:
        if detail:
            fb = bound_all(lam, geom)
            t = fb.t
        else:
            t = screen_all(lam, geom)
    except GeometryError:
        if not geom.approximate:
            raise
        # The reference point is only approximately optimal; do not screen.
        logger.warning("approximate reference point gives d > 1 at lam=%g; keeping all", lam)
        return _result(np.ones(p, dtype=bool), Rule.SLORES, lam, geom.lambda0, t0)
    keep = ~(zero_proj | (t < ds.m * lam * (1.0 - TAU_SCREEN)))
    return _result(keep, Rule.SLORES, lam, geom.lambda0, t0, bounds=fb)


def strong_rule(ds, lam, lambda0, theta0):
    """Basic strong rule: discard ``j`` when ``|<theta0, xbar^j>| < m (2 lam - lambda0)``.

    Heuristic, not safe. With ``2*lam <= lambda0`` it discards nothing.
    """
    t0 = time.perf_counter()
    th = getattr(theta0, "theta", theta0)
    dots = np.abs(ds.X.T @ th)
    thresh = ds.m * (2.0 * lam - lambda0)
    keep = ~(dots < thresh)
    return _result(keep, Rule.STRONG, lam, lambda0, t0)


def rejection_ratio(sr, sol):
    """Discarded features over features with a zero coefficient.

    Returns ``None`` when the solution has no zero coefficient.
    """
    beta = sol.beta
    n_zero = int(np.count_nonzero(np.abs(beta) <= tau_zero(beta)))
    if n_zero == 0:
        return None
    return sr.n_discarded / n_zero
