"""Regularization-path experiment: screening, solving and safety auditing on a grid."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._cd import warmup
from .data import load_svmlight, synthesize
from .dual import build_geometry, lambda_max, max_geometry
from .errors import ConfigError, ConvergenceError
from .screening import Rule, no_screen, rejection_ratio, slores, strong_rule
from .solver import fit, recover_dual, tau_zero

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "lambda_ratio",
    "rule",
    "n_discarded",
    "n_zero",
    "rejection_ratio",
    "screen_ms",
    "solve_ms",
    "solve_ms_unscreened",
    "gap",
    "safety_violations",
)
TIMING_FIELDS = ("screen_ms", "solve_ms", "solve_ms_unscreened")


@dataclass
class PathConfig:
    data: str | None = None
    synthetic: tuple | None = None  # (m, p, density, correlation)
    grid: tuple = (0.1, 0.95, 86)
    rules: tuple = ("slores", "strong")
    lambda0: str = "max"
    tol_gap: float = 1e-9
    seed: int = 0
    out_dir: str | None = None
    fmt: str = "csv"
    repeats: int = 1
    subsample: float = 1.0
    timings: bool = True

    def validate(self):
        if (self.data is None) == (self.synthetic is None):
            raise ConfigError("give exactly one of a data file or a synthetic dataset")
        lo, hi, n = self.grid
        if not (0.0 < lo <= hi < 1.0):
            raise ConfigError(f"grid needs 0 < lo <= hi < 1, got {lo}:{hi}")
        if int(n) != n or n < 1:
            raise ConfigError("grid count must be a positive integer")
        bad = set(self.rules) - {r.value for r in Rule}
        if bad or not self.rules:
            raise ConfigError(f"unknown rules {sorted(bad)}")
        if self.lambda0 not in ("max", "sequential"):
            raise ConfigError("lambda0 policy must be 'max' or 'sequential'")
        if not self.tol_gap > 0.0:
            raise ConfigError("tol must be positive")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.repeats < 1 or not 0.0 < self.subsample <= 1.0:
            raise ConfigError("repeats >= 1 and 0 < subsample <= 1 required")
        return self

    def ratios(self):
        lo, hi, n = self.grid
        # Descending, so every fit can warm-start from the previous one.
        return np.linspace(hi, lo, int(n))


@dataclass
class PathRow:
    lambda_ratio: float
    rule: str
    n_discarded: float
    n_zero: float
    rejection_ratio: float | None
    screen_ms: float
    solve_ms: float
    solve_ms_unscreened: float
    gap: float
    safety_violations: int


@dataclass
class PathReport:
    rows: list = field(default_factory=list)
    lambda_max: float = math.nan
    m: int = 0
    p: int = 0
    geometry_ms: float = 0.0
    approximate: bool = False

    def sorted_rows(self):
        return sorted(self.rows, key=lambda r: (-r.lambda_ratio, r.rule))

    def rows_for(self, rule):
        return [r for r in self.sorted_rows() if r.rule == rule]

    @property
    def slores_violations(self):
        return sum(r.safety_violations for r in self.rows if r.rule == Rule.SLORES.value)

    def total_ms(self, rule):
        """Screening plus solve time summed over the grid for one rule."""
        return sum(r.screen_ms + r.solve_ms for r in self.rows_for(rule))

    def unscreened_ms(self):
        per_lambda = {r.lambda_ratio: r.solve_ms_unscreened for r in self.rows}
        return sum(per_lambda.values())


def load_dataset(cfg):
    if cfg.data is not None:
        return load_svmlight(cfg.data)
    m, p, density, corr = cfg.synthetic
    return synthesize(int(m), int(p), float(density), float(corr), cfg.seed)


def _subsample(ds, frac, rng):
    """Stratified row subsample keeping both classes."""
    rows = []
    for sign in (1.0, -1.0):
        idx = np.flatnonzero(ds.labels == sign)
        k = max(1, int(round(frac * idx.shape[0])))
        rows.append(rng.choice(idx, size=k, replace=False))
    return ds.subsample(np.sort(np.concatenate(rows)))


def run_path(cfg, ds=None):
    """Sweep the grid in descending lambda; audit every rule against the full fit."""
    cfg.validate()
    if ds is None:
        ds = load_dataset(cfg)
    if cfg.repeats == 1 and cfg.subsample == 1.0:
        return _run_once(cfg, ds)
    rng = np.random.Generator(np.random.Philox(cfg.seed + 1))
    reports = [_run_once(cfg, _subsample(ds, cfg.subsample, rng)) for _ in range(cfg.repeats)]
    return _average(reports)


def _run_once(cfg, ds):
    rules = sorted(set(cfg.rules))
    warmup()
    lm = lambda_max(ds)
    report = PathReport(lambda_max=lm.lambda_max, m=ds.m, p=ds.p)

    t0 = time.perf_counter()
    geom = max_geometry(ds) if Rule.SLORES.value in rules else None
    report.geometry_ms = 1e3 * (time.perf_counter() - t0)
    geom_charge = report.geometry_ms

    full_prev = None
    warm = {r: None for r in rules}
    ref_lambda, ref_theta = lm.lambda_max, lm.theta_max

    for ratio in cfg.ratios():
        lam = float(ratio * lm.lambda_max)
        t = time.perf_counter()
        full = _fit(ds, lam, ratio, "none", warm=full_prev, tol_gap=cfg.tol_gap)
        full_ms = 1e3 * (time.perf_counter() - t)
        tz = tau_zero(full.beta)
        active = np.abs(full.beta) > tz
        n_zero = int(ds.p - np.count_nonzero(active))

        for rule in rules:
            if rule == Rule.NONE.value:
                sr = no_screen(ds, lam)
                sol, solve_ms, screen_ms = full, full_ms, 1e3 * sr.screen_time
            else:
                if rule == Rule.SLORES.value:
                    if cfg.lambda0 == "sequential" and warm[rule] is not None:
                        geom = _sequential_geometry(ds, warm[rule])
                    sr = slores(ds, lam, geom)
                    screen_ms = 1e3 * sr.screen_time + geom_charge
                    geom_charge = 0.0
                else:
                    sr = strong_rule(ds, lam, ref_lambda, ref_theta)
                    screen_ms = 1e3 * sr.screen_time
                t = time.perf_counter()
                sol = _fit(ds, lam, ratio, rule, kept=sr.kept, warm=warm[rule], tol_gap=cfg.tol_gap)
                solve_ms = 1e3 * (time.perf_counter() - t)
            warm[rule] = sol
            rr = rejection_ratio(sr, full)
            report.rows.append(
                PathRow(
                    lambda_ratio=float(ratio),
                    rule=rule,
                    n_discarded=sr.n_discarded,
                    n_zero=n_zero,
                    rejection_ratio=rr,
                    screen_ms=screen_ms,
                    solve_ms=solve_ms,
                    solve_ms_unscreened=full_ms,
                    gap=float(sol.gap),
                    safety_violations=int(np.count_nonzero(active[sr.discarded])),
                )
            )
        full_prev = full
        if cfg.lambda0 == "sequential":
            ref_lambda, ref_theta = lam, full.theta
    report.approximate = cfg.lambda0 == "sequential"
    return report


def _fit(ds, lam, ratio, rule, **kw):
    try:
        return fit(ds, lam, **kw)
    except ConvergenceError as exc:
        raise ConvergenceError(
            f"path aborted at lambda_ratio={ratio:.6g}, rule={rule}: {exc}", lam=lam, gap=exc.gap
        ) from exc


def _sequential_geometry(ds, prev):
    """Geometry at the previous path point, from that solution's dual estimate."""
    theta = recover_dual(prev, ds).feasible
    lam0 = float(np.max(np.abs(ds.X.T @ theta.theta))) / ds.m
    return build_geometry(ds, lam0, theta, approximate=True)


def _average(reports):
    base = reports[0]
    out = PathReport(
        lambda_max=float(np.mean([r.lambda_max for r in reports])),
        m=base.m,
        p=base.p,
        geometry_ms=float(np.mean([r.geometry_ms for r in reports])),
        approximate=base.approximate,
    )
    for i, row in enumerate(base.rows):
        group = [r.rows[i] for r in reports]
        ratios = [g.rejection_ratio for g in group if g.rejection_ratio is not None]
        out.rows.append(
            PathRow(
                lambda_ratio=row.lambda_ratio,
                rule=row.rule,
                n_discarded=float(np.mean([g.n_discarded for g in group])),
                n_zero=float(np.mean([g.n_zero for g in group])),
                rejection_ratio=float(np.mean(ratios)) if ratios else None,
                screen_ms=float(np.mean([g.screen_ms for g in group])),
                solve_ms=float(np.mean([g.solve_ms for g in group])),
                solve_ms_unscreened=float(np.mean([g.solve_ms_unscreened for g in group])),
                gap=float(np.max([g.gap for g in group])),
                safety_violations=int(sum(g.safety_violations for g in group)),
            )
        )
    return out


# ---------------------------------------------------------------------------
# output


def _fmt(key, value):
    if value is None:
        return ""
    if key == "rule":
        return value
    if key in ("n_discarded", "n_zero", "safety_violations") and float(value).is_integer():
        return str(int(value))
    return f"{float(value):.17e}"


def _records(report, timings):
    for row in report.sorted_rows():
        rec = asdict(row)
        if not timings:
            for k in TIMING_FIELDS:
                rec[k] = None
        yield rec


def report_csv(report, timings=True):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in _records(report, timings):
        writer.writerow([_fmt(k, rec[k]) for k in CSV_HEADER])
    return buf.getvalue()


def report_json(report, timings=True):
    return json.dumps(list(_records(report, timings)), indent=1) + "\n"


def emit_report(report, fmt="csv", out_dir=".", timings=True):
    """Write ``path.csv`` or ``path.json`` under ``out_dir`` and return its path."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            target = out / "path.csv"
            target.write_text(report_csv(report, timings), encoding="utf-8", newline="")
        elif fmt == "json":
            target = out / "path.json"
            target.write_text(report_json(report, timings), encoding="utf-8")
        else:
            raise ConfigError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise ConfigError(f"cannot write report to {out}: {exc}") from exc
    return target
