# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled block kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()

BACKEND = "cython"


def gather(const double[:, :, ::1] M, const cnp.int64_t[:, ::1] dofs, const double[::1] x):
    cdef Py_ssize_t nb = M.shape[0], nq = M.shape[1], m = M.shape[2]
    cdef Py_ssize_t b, q, j
    cdef double acc
    out = np.empty((nb, nq))
    cdef double[:, ::1] o = out
    cdef double[::1] xl = np.empty(m)
    with nogil:
        for b in range(nb):
            for j in range(m):
                xl[j] = x[dofs[b, j]]
            for q in range(nq):
                acc = 0.0
                for j in range(m):
                    acc = acc + M[b, q, j] * xl[j]
                o[b, q] = acc
    return out


def scatter(const double[:, :, ::1] M, const cnp.int64_t[:, ::1] dofs,
            const double[:, ::1] y, Py_ssize_t n):
    cdef Py_ssize_t nb = M.shape[0], nq = M.shape[1], m = M.shape[2]
    cdef Py_ssize_t b, q, j
    cdef double acc
    out = np.zeros(n)
    cdef double[::1] r = out
    with nogil:
        for b in range(nb):
            for j in range(m):
                acc = 0.0
                for q in range(nq):
                    acc = acc + M[b, q, j] * y[b, q]
                r[dofs[b, j]] += acc
    return out


def gram(const double[:, :, ::1] M, const double[:, ::1] c):
    cdef Py_ssize_t nb = M.shape[0], nq = M.shape[1], m = M.shape[2]
    cdef Py_ssize_t b, q, i, j
    cdef double ci, mi
    out = np.zeros((nb, m, m))
    cdef double[:, :, ::1] G = out
    with nogil:
        for b in range(nb):
            for q in range(nq):
                if c[b, q] == 0.0:
                    continue
                for i in range(m):
                    mi = M[b, q, i] * c[b, q]
                    if mi == 0.0:
                        continue
                    for j in range(i, m):
                        G[b, i, j] += mi * M[b, q, j]
            for i in range(m):
                for j in range(i + 1, m):
                    G[b, j, i] = G[b, i, j]
    return out


def nonlinearity(t, double p, double eps):
    ta = np.ascontiguousarray(t, dtype=np.float64)
    shape = ta.shape
    cdef double[::1] tv = ta.reshape(-1)
    cdef Py_ssize_t n = tv.shape[0], i
    F = np.empty(n)
    f = np.empty(n)
    df = np.empty(n)
    cdef double[::1] Fv = F, fv = f, dfv = df
    cdef double s, x, a, e2 = eps * eps, ep = pow(eps, p), d0 = 1.0 if p == 2.0 else 0.0
    cdef double h = 0.5 * (p - 4.0)
    with nogil:
        for i in range(n):
            x = tv[i]
            s = x * x + e2
            if s > 0.0:
                # one pow per point: a = s^{(p-4)/2}
                a = pow(s, h)
                dfv[i] = a * ((p - 1.0) * x * x + e2)
                a = a * s
                fv[i] = a * x
                Fv[i] = (a * s - ep) / p
            else:
                Fv[i] = 0.0
                fv[i] = 0.0
                dfv[i] = d0
    return F.reshape(shape), f.reshape(shape), df.reshape(shape)
