# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation and RK4 integration of packed polynomial systems."""

import numpy as np
cimport numpy as cnp
from libc.math cimport isfinite

cnp.import_array()

BACKEND = "compiled"


cdef void _eval(const long[:, ::1] exps, const double[::1] coeffs, const long[::1] comp,
                const double[::1] x, double[::1] out) noexcept nogil:
    cdef Py_ssize_t t, j, k, nterms = exps.shape[0], m = exps.shape[1]
    cdef double term
    for j in range(out.shape[0]):
        out[j] = 0.0
    for t in range(nterms):
        term = coeffs[t]
        for j in range(m):
            for k in range(exps[t, j]):
                term *= x[j]
        out[comp[t]] += term


def eval_system(long[:, ::1] exps, double[::1] coeffs, long[::1] comp, long ncomp, double[::1] x):
    out = np.zeros(ncomp)
    _eval(exps, coeffs, comp, x, out)
    return out


def rk4(long[:, ::1] exps, double[::1] coeffs, long[::1] comp, double[::1] x0,
        double h, long nsteps, double[::1] lo, double[::1] hi):
    """Fixed-step RK4; returns (state, status, steps_done), status 1 on a box exit or overflow."""
    cdef Py_ssize_t n = x0.shape[0], i, step
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef double[::1] k1 = np.zeros(n), k2 = np.zeros(n), k3 = np.zeros(n), k4 = np.zeros(n)
    cdef double[::1] tmp = np.zeros(n)
    cdef int status = 0
    with nogil:
        for step in range(nsteps):
            _eval(exps, coeffs, comp, x, k1)
            for i in range(n):
                tmp[i] = x[i] + 0.5 * h * k1[i]
            _eval(exps, coeffs, comp, tmp, k2)
            for i in range(n):
                tmp[i] = x[i] + 0.5 * h * k2[i]
            _eval(exps, coeffs, comp, tmp, k3)
            for i in range(n):
                tmp[i] = x[i] + h * k3[i]
            _eval(exps, coeffs, comp, tmp, k4)
            for i in range(n):
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            for i in range(n):
                if not isfinite(x[i]) or x[i] < lo[i] or x[i] > hi[i]:
                    status = 1
            if status:
                break
    return np.asarray(x), status, (step + 1 if nsteps else 0)
