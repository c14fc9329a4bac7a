"""Invariant suite run against one dataset: closed forms, containment, safety."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dual import max_geometry, radius
from .screening import rejection_ratio, slores, strong_rule
from .solver import KKT_DELTA, fit, kkt_check, tau_zero


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""
    safety: bool = False

    def line(self):
        tag = "PASS" if self.ok else "FAIL"
        return f"{tag} {self.name}" + (f": {self.detail}" if self.detail else "")


def run_checks(ds, ratios, tol_gap=1e-10):
    """Run every invariant on ``ds`` over the given ``lambda/lambda_max`` ratios.

    Returns a list of :class:`Check`. ``safety`` marks the checks whose
    failure means a safe rule discarded an active feature.
    """
    geom = max_geometry(ds)
    lm = geom.lambda_max
    out = []

    above = fit(ds, 1.01 * lm, tol_gap=tol_gap)
    c_ref = float(np.log(ds.m_plus / ds.m_minus))
    err = max(float(np.max(np.abs(above.beta), initial=0.0)), abs(above.c - c_ref))
    out.append(Check("closed form above lambda_max", err <= 1e-8 and above.gap <= tol_gap, f"max error {err:.3e}"))
    sr = slores(ds, 1.01 * lm, geom)
    out.append(Check("slores keeps nothing above lambda_max", sr.kept.size == 0, f"kept {sr.kept.size}"))

    th0 = geom.theta0.theta
    worst_ball = -np.inf
    unsafe = []
    worst_rr = 0.0
    strong_bad = []
    worst_kkt = 0.0
    prev = above
    for ratio in sorted(ratios, reverse=True):
        lam = float(ratio * lm)
        sol = fit(ds, lam, warm=prev, tol_gap=tol_gap)
        prev = sol
        active = np.abs(sol.beta) > tau_zero(sol.beta)

        r = radius(lam, geom)
        dist_sq = float(np.sum((sol.theta.theta - th0) ** 2))
        worst_ball = max(worst_ball, dist_sq - r * r)

        sr = slores(ds, lam, geom)
        hits = np.flatnonzero(active[sr.discarded])
        if hits.size:
            unsafe.append((float(ratio), sr.discarded[hits].tolist()))
        rr = rejection_ratio(sr, sol)
        if rr is not None:
            worst_rr = max(worst_rr, rr)

        if ratio <= 0.5:
            st = strong_rule(ds, lam, lm, geom.theta0)
            if st.n_discarded:
                strong_bad.append(float(ratio))

        rep = kkt_check(sol, sol.theta, ds, lam)
        worst_kkt = max(worst_kkt, rep.max_violation)

    out.append(Check("dual optimum inside the screening ball", worst_ball <= 1e-8, f"max excess {worst_ball:.3e}"))
    detail = "none" if not unsafe else "; ".join(f"ratio {r:.4g}: {js[:5]}" for r, js in unsafe)
    out.append(Check("slores discards no active feature", not unsafe, detail, safety=True))
    out.append(Check("slores rejection ratio at most 1", worst_rr <= 1.0, f"max {worst_rr:.6g}"))
    out.append(Check("strong rule discards nothing at ratio <= 0.5", not strong_bad, f"{len(strong_bad)} offending ratios"))
    out.append(Check("KKT conditions of path solutions", worst_kkt <= KKT_DELTA, f"max violation {worst_kkt:.3e}"))
    return out
