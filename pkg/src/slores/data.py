"""Sparse binary-classification datasets.

A :class:`Dataset` stores the label-folded design matrix ``Xbar`` whose
i-th row is ``b_i * x_i``, in compressed sparse column layout so that every
per-feature reduction is a single pass over that feature's nonzeros.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DataError

logger = logging.getLogger(__name__)


def _freeze(a):
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable labelled sparse design matrix.

    Attributes
    ----------
    X : scipy.sparse.csc_matrix, shape (m, p)
        Effective matrix with rows ``b_i * x_i``.
    labels : ndarray of float64, shape (m,)
        Entries in {+1, -1}.
    """

    X: sp.csc_matrix
    labels: np.ndarray

    def __post_init__(self):
        X = self.X
        if not sp.isspmatrix_csc(X):
            X = sp.csc_matrix(X)
        X = X.astype(np.float64)
        X.sum_duplicates()
        X.sort_indices()
        b = np.asarray(self.labels, dtype=np.float64).ravel()
        if X.shape[0] != b.shape[0]:
            raise DataError(f"{X.shape[0]} rows but {b.shape[0]} labels")
        if not np.all((b == 1.0) | (b == -1.0)):
            raise DataError("labels must be +1 or -1")
        if not np.all(np.isfinite(X.data)):
            raise DataError("non-finite value in design matrix")
        n_pos = int(np.count_nonzero(b > 0))
        if n_pos == 0 or n_pos == b.shape[0]:
            raise DataError("single-class dataset: both labels must be present")
        for arr in (X.data, X.indices, X.indptr):
            _freeze(arr)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", _freeze(b))
        # Derived layouts for the solver: row-major transpose and writable
        # int64/float64 copies for the compiled kernel.
        object.__setattr__(self, "_XT", X.T.tocsr())
        kernel = (X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data.copy(), b.copy())
        object.__setattr__(self, "_kernel", kernel)

    @classmethod
    def from_raw(cls, X, labels):
        """Build from the raw (unfolded) design matrix and labels."""
        b = np.asarray(labels, dtype=np.float64).ravel()
        Xraw = sp.csr_matrix(X, dtype=np.float64)
        return cls(sp.csc_matrix(sp.diags(b) @ Xraw), b)

    @property
    def m(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def m_plus(self):
        return int(np.count_nonzero(self.labels > 0))

    @property
    def m_minus(self):
        return self.m - self.m_plus

    @property
    def nnz(self):
        return self.X.nnz

    def column(self, j):
        """Row indices and values of column ``j`` of ``Xbar``."""
        lo, hi = self.X.indptr[j], self.X.indptr[j + 1]
        return self.X.indices[lo:hi], self.X.data[lo:hi]

    def dense_column(self, j):
        out = np.zeros(self.m)
        idx, val = self.column(j)
        out[idx] = val
        return out

    def raw_matrix(self):
        """The unfolded design matrix ``X`` (rows ``x_i``) in CSR layout."""
        return sp.csr_matrix(sp.diags(self.labels) @ self.X)

    def subsample(self, rows):
        rows = np.asarray(rows)
        return Dataset(self.X[rows, :], self.labels[rows])

    def equals(self, other):
        """Exact structural equality (same shape, pattern, values and labels)."""
        a, b = self.X, other.X
        return (
            a.shape == b.shape
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True, eq=False)
class FeaturePrecompute:
    """Per-feature statistics gathered in one pass over the columns.

    ``dot_proj_xstar[j]`` is the inner product of the b-complement
    projections of column j and of the signed reference column.
    """

    dot_b: np.ndarray
    norm_sq: np.ndarray
    proj_norm: np.ndarray
    dot_theta0: np.ndarray
    dot_proj_xstar: np.ndarray

    def __len__(self):
        return self.dot_b.shape[0]


def _column_sums(values, indptr):
    out = np.zeros(indptr.shape[0] - 1)
    nonempty = np.diff(indptr) > 0
    if values.size:
        out[nonempty] = np.add.reduceat(values, indptr[:-1][nonempty])
    return out


def precompute(ds, theta0, xstar_index, xstar_sign):
    """Gather the five per-feature statistics used by the screening bound.

    Parameters
    ----------
    ds : Dataset
    theta0 : DualPoint or array_like, shape (m,)
        Reference dual point.
    xstar_index : int
        Column defining the reference constraint vector.
    xstar_sign : {+1, -1}
        Sign applied to that column.
    """
    theta0 = np.asarray(getattr(theta0, "theta", theta0), dtype=np.float64)
    m, p = ds.X.shape
    if theta0.shape != (m,):
        raise DataError(f"theta0 has shape {theta0.shape}, expected ({m},)")
    if not 0 <= xstar_index < p:
        raise DataError(f"xstar_index {xstar_index} out of range for p={p}")
    if xstar_sign not in (1, -1):
        raise DataError("xstar_sign must be +1 or -1")

    xstar = xstar_sign * ds.dense_column(xstar_index)
    # One sparse-times-dense product visits each column once.
    V = np.column_stack([ds.labels, theta0, xstar])
    XtV = np.asarray(ds.X.T @ V)
    dot_b, dot_theta0, dot_xstar = XtV[:, 0], XtV[:, 1], XtV[:, 2]
    X = ds.X
    nnz_per_col = np.diff(X.indptr)
    col_of = np.repeat(np.arange(p), nnz_per_col)
    norm_sq = _column_sums(X.data * X.data, X.indptr)

    # ||P x||^2 summed directly over the residual, avoiding the cancellation
    # in norm_sq - dot_b^2 / m for columns nearly parallel to b.
    t = dot_b / m
    resid = X.data - t[col_of] * ds.labels[X.indices]
    proj_sq = _column_sums(resid * resid, X.indptr) + t * t * (m - nnz_per_col)
    xstar_dot_b = float(ds.labels @ xstar)
    dot_proj_xstar = dot_xstar - dot_b * xstar_dot_b / m
    return FeaturePrecompute(
        dot_b=_freeze(dot_b.copy()),
        norm_sq=_freeze(norm_sq),
        proj_norm=_freeze(np.sqrt(proj_sq)),
        dot_theta0=_freeze(dot_theta0.copy()),
        dot_proj_xstar=_freeze(dot_proj_xstar),
    )


# ---------------------------------------------------------------------------
# svmlight I/O


def _parse_label(tok, lineno):
    try:
        v = float(tok)
    except ValueError:
        raise DataError(f"cannot parse label {tok!r}", lineno) from None
    if v not in (1.0, -1.0, 0.0):
        raise DataError(f"label {tok!r} outside {{+1, -1, 0}}", lineno)
    return v


def load_svmlight(path, n_features=None):
    """Read a binary svmlight/libsvm file into a :class:`Dataset`.

    Labels may be ``+1/-1`` or ``0/1``; zeros map to ``-1`` with a warning.
    Feature indices are 1-based and strictly increasing within a line.
    """
    path = Path(path)
    labels, rows, cols, vals = [], [], [], []
    max_idx = 0
    try:
        fh = open(path, "r", encoding="utf-8", newline=None)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            label = _parse_label(toks[0], lineno)
            i = len(labels)
            prev = 0
            for tok in toks[1:]:
                idx_s, sep, val_s = tok.partition(":")
                if not sep:
                    raise DataError(f"expected idx:val, got {tok!r}", lineno)
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise DataError(f"malformed pair {tok!r}", lineno) from None
                if idx < 1:
                    raise DataError(f"feature index {idx} is not 1-based", lineno)
                if idx == prev:
                    raise DataError(f"duplicate feature index {idx}", lineno)
                if idx < prev:
                    raise DataError(f"feature index {idx} not increasing", lineno)
                if not math.isfinite(val):
                    raise DataError(f"non-finite value {val_s!r}", lineno)
                prev = idx
                rows.append(i)
                cols.append(idx - 1)
                vals.append(val)
            max_idx = max(max_idx, prev)
            labels.append(label)

    if not labels:
        raise DataError(f"{path}: no samples")
    b = np.array(labels)
    if np.any(b == 0.0):
        if np.any(b == -1.0):
            raise DataError("labels mix 0 and -1; use either 0/1 or -1/+1")
        logger.warning("%s: mapping 0/1 labels to -1/+1", path)
        b[b == 0.0] = -1.0
    if np.all(b == b[0]):
        raise DataError("single-class dataset: both labels must be present")

    p = max_idx if n_features is None else int(n_features)
    if p < max_idx:
        raise DataError(f"n_features={p} but index {max_idx} present")
    rows = np.asarray(rows, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64) * b[rows]
    X = sp.csc_matrix((vals, (rows, np.asarray(cols, dtype=np.int64))), shape=(len(b), p))
    return Dataset(X, b)


def dump_svmlight(ds, path):
    """Write ``ds`` as svmlight with -1/+1 labels and unfolded values."""
    Xraw = ds.raw_matrix()
    Xraw.sort_indices()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(ds.m):
            lo, hi = Xraw.indptr[i], Xraw.indptr[i + 1]
            pairs = " ".join(
                f"{j + 1}:{float(v)!r}" for j, v in zip(Xraw.indices[lo:hi], Xraw.data[lo:hi])
            )
            lab = "+1" if ds.labels[i] > 0 else "-1"
            fh.write(f"{lab} {pairs}".rstrip() + "\n")


# ---------------------------------------------------------------------------
# synthetic data


def synthesize(m, p, density, correlation, seed, n_informative=None):
    """Deterministic sparse Gaussian classification data.

    Values are equicorrelated Gaussians ``sqrt(1-rho) z_ij + sqrt(rho) s_i``
    (one shared factor per sample), masked to the requested density.
    Labels rank a sparse linear score plus noise; the top half is +1, which
    keeps the classes balanced to within one sample.

    The generator is numpy's Philox4x64 counter-based bit generator keyed by
    ``seed``, so output is identical across platforms.
    """
    if int(m) != m or m < 4:
        raise DataError("m must be an integer >= 4")
    if int(p) != p or p < 1:
        raise DataError("p must be an integer >= 1")
    if not 0.0 < density <= 1.0:
        raise DataError("density must lie in (0, 1]")
    if not 0.0 <= correlation < 1.0:
        raise DataError("correlation must lie in [0, 1)")
    m, p = int(m), int(p)
    rng = np.random.Generator(np.random.Philox(int(seed)))

    mask = rng.random((m, p)) < density
    z = rng.standard_normal((m, p))
    shared = rng.standard_normal((m, 1))
    values = math.sqrt(1.0 - correlation) * z + math.sqrt(correlation) * shared
    Xraw = sp.csc_matrix(np.where(mask, values, 0.0))

    k = n_informative if n_informative is not None else max(1, min(10, p // 20))
    support = rng.choice(p, size=k, replace=False)
    w = rng.choice([-1.0, 1.0], size=k) * rng.uniform(1.0, 2.0, size=k)
    score = Xraw[:, support] @ w + 0.5 * rng.standard_normal(m)
    order = np.argsort(-score, kind="stable")
    b = -np.ones(m)
    b[order[: (m + 1) // 2]] = 1.0
    return Dataset.from_raw(Xraw, b)
