import numpy as np
import pytest
import scipy.sparse as sp

from slores.data import Dataset, synthesize


def folded(Xbar, b):
    """Dataset straight from a dense label-folded matrix."""
    return Dataset(sp.csc_matrix(np.asarray(Xbar, dtype=float)), np.asarray(b, dtype=float))


@pytest.fixture
def four():
    # b = (1, 1, -1, -1); columns (1,1,1,1), (1,0,0,0) and two generic ones.
    b = np.array([1.0, 1.0, -1.0, -1.0])
    Xbar = np.array(
        [
            [1.0, 1.0, 0.3, -0.2],
            [1.0, 0.0, -0.7, 0.5],
            [1.0, 0.0, 0.4, 0.9],
            [1.0, 0.0, 0.0, -0.6],
        ]
    )
    return folded(Xbar, b)


@pytest.fixture(scope="session")
def mid():
    return synthesize(100, 500, 0.05, 0.3, 11)


def random_dense(rng, m, p, density=0.6):
    """Small random dataset with both classes; returns the dense folded matrix too."""
    while True:
        b = rng.choice([-1.0, 1.0], size=m)
        if 0 < np.count_nonzero(b > 0) < m:
            break
    X = rng.standard_normal((m, p)) * (rng.random((m, p)) < density)
    return folded(X, b), X, b


def with_cbar_columns(ds, geom, cbars, rng, scale=0.5):
    """Append columns whose own cosine with ``P xstar`` is each of ``cbars``.

    Each new column is ``alpha * (c u + sqrt(1 - c^2) v)`` with ``u`` the unit
    projected reference column and ``v`` a unit vector orthogonal to ``b``,
    ``u`` and ``theta0``. With ``alpha`` below ``||P xstar||`` the new columns
    cannot move ``lambda_max`` or the reference column, so ``geom`` stays
    valid for the extended dataset. For sign ``xi`` the bound sees cosine
    ``-xi * c``.
    """
    m = ds.m
    b = ds.labels
    xstar = geom.sign0 * ds.dense_column(geom.j0)
    s = geom.proj_xstar_norm
    u = (xstar - (xstar @ b) / m * b) / s
    basis = np.column_stack([b / np.sqrt(m), u, geom.theta0.theta])
    q, _ = np.linalg.qr(basis)
    cols = []
    for c in cbars:
        v = rng.standard_normal(m)
        v -= q @ (q.T @ v)
        v /= np.linalg.norm(v)
        cols.append(scale * s * (c * u + np.sqrt(max(0.0, 1.0 - c * c)) * v))
    Xbar = np.column_stack([ds.X.toarray()] + cols)
    return folded(Xbar, b)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
