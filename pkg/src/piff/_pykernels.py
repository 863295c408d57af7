"""Pure numpy implementations of the numeric kernels.

A compiled matrix is a list of terms ``(row, col, vi, vj, coef)``: entry
(row, col) receives ``coef * m[vi] * m[vj]``. Index ``S`` stands for the
constant 1, so linear and constant terms share the layout.
"""

from __future__ import annotations

import numpy as np

from piff.errors import NumericError

DRIFT_RENORM = 1e-12
DRIFT_FAIL = 1e-9


def _ext(m):
    return np.append(np.asarray(m, dtype=np.float64), 1.0)


def _ext_simplex(m):
    # the kernel is homogeneous of degree 2, so evaluate it on the simplex
    m = np.asarray(m, dtype=np.float64)
    return np.append(m / m.sum(), 1.0)


def eval_matrix(rows, cols, vi, vj, coef, m, S):
    mext = _ext(m)
    vals = coef * mext[vi] * mext[vj]
    return np.bincount(rows * S + cols, weights=vals, minlength=S * S).reshape(S, S)


def _settle(v, t):
    s = v.sum()
    if abs(s - 1.0) > DRIFT_FAIL:
        raise NumericError(f"distribution drifted off the simplex at step {t}: sum = {s!r}")
    if abs(s - 1.0) > DRIFT_RENORM:
        v = v / s
    return v


def meanfield_run(rows, cols, vi, vj, coef, mu0, T):
    S = len(mu0)
    out = np.empty((T + 1, S))
    mu = np.asarray(mu0, dtype=np.float64).copy()
    out[0] = mu
    for t in range(T):
        mext = _ext_simplex(mu)
        vals = coef * mext[vi] * mext[vj] * mu[rows]
        mu = _settle(np.bincount(cols, weights=vals, minlength=S), t + 1)
        out[t + 1] = mu
    return out


def fastsim_run(rows, cols, vi, vj, coef, traj, h0):
    T = traj.shape[0] - 1
    S = len(h0)
    out = np.empty((T + 1, S))
    h = np.asarray(h0, dtype=np.float64).copy()
    out[0] = h
    for t in range(T):
        mext = _ext_simplex(traj[t])
        vals = coef * mext[vi] * mext[vj] * h[rows]
        h = _settle(np.bincount(cols, weights=vals, minlength=S), t + 1)
        out[t + 1] = h
    return out
