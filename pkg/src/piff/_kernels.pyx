# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels; same contracts as piff._pykernels."""

import numpy as np

from piff.errors import NumericError

cdef double DRIFT_RENORM = 1e-12
cdef double DRIFT_FAIL = 1e-9


def eval_matrix(const long[:] rows, const long[:] cols, const long[:] vi,
                const long[:] vj, const double[:] coef, m, long S):
    cdef Py_ssize_t n = coef.shape[0], k
    cdef double[:] mext = np.append(np.asarray(m, dtype=np.float64), 1.0)
    out = np.zeros((S, S))
    cdef double[:, :] K = out
    for k in range(n):
        K[rows[k], cols[k]] += coef[k] * mext[vi[k]] * mext[vj[k]]
    return out


cdef void _step(const long[:] rows, const long[:] cols, const long[:] vi,
                const long[:] vj, const double[:] coef, double[:] mext,
                double[:] src, double[:] dst) noexcept nogil:
    cdef Py_ssize_t n = coef.shape[0], k, i
    for i in range(dst.shape[0]):
        dst[i] = 0.0
    for k in range(n):
        dst[cols[k]] += coef[k] * mext[vi[k]] * mext[vj[k]] * src[rows[k]]


cdef void _load(double[:] mext, const double[:] m) noexcept nogil:
    # the kernel is homogeneous of degree 2, so evaluate it on the simplex
    cdef Py_ssize_t i, S = m.shape[0]
    cdef double s = 0.0
    for i in range(S):
        s += m[i]
    for i in range(S):
        mext[i] = m[i] / s


cdef double _settle(double[:] v, long t) except? -1.0:
    cdef Py_ssize_t i, S = v.shape[0]
    cdef double s = 0.0
    for i in range(S):
        s += v[i]
    if abs(s - 1.0) > DRIFT_FAIL:
        raise NumericError(f"distribution drifted off the simplex at step {t}: sum = {s!r}")
    if abs(s - 1.0) > DRIFT_RENORM:
        for i in range(S):
            v[i] /= s
    return s


def meanfield_run(const long[:] rows, const long[:] cols, const long[:] vi,
                  const long[:] vj, const double[:] coef, mu0, long T):
    cdef Py_ssize_t S = len(mu0), t, i
    out = np.empty((T + 1, S))
    cdef double[:, :] traj = out
    cdef double[:] mext = np.empty(S + 1)
    cdef double[:] cur = np.asarray(mu0, dtype=np.float64).copy()
    cdef double[:] nxt = np.empty(S)
    traj[0, :] = cur
    mext[S] = 1.0
    for t in range(T):
        _load(mext, cur)
        _step(rows, cols, vi, vj, coef, mext, cur, nxt)
        _settle(nxt, t + 1)
        traj[t + 1, :] = nxt
        cur, nxt = nxt, cur
    return out


def fastsim_run(const long[:] rows, const long[:] cols, const long[:] vi,
                const long[:] vj, const double[:] coef, const double[:, :] field, h0):
    cdef Py_ssize_t T = field.shape[0] - 1, S = len(h0), t, i
    out = np.empty((T + 1, S))
    cdef double[:, :] hs = out
    cdef double[:] mext = np.empty(S + 1)
    cdef double[:] cur = np.asarray(h0, dtype=np.float64).copy()
    cdef double[:] nxt = np.empty(S)
    hs[0, :] = cur
    mext[S] = 1.0
    for t in range(T):
        _load(mext, field[t])
        _step(rows, cols, vi, vj, coef, mext, cur, nxt)
        _settle(nxt, t + 1)
        hs[t + 1, :] = nxt
        cur, nxt = nxt, cur
    return out
