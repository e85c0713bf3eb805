"""Pure-Python twin of the compiled kernels, used when the extension is absent."""

import math

import numpy as np

BACKEND = "python"


def _eval(rows, coeffs, comp, ncomp, x):
    out = [0.0] * ncomp
    for row, c, k in zip(rows, coeffs, comp):
        term = c
        for j, e in row:
            term *= x[j] ** e
        out[k] += term
    return out


def _sparse_rows(exps):
    return [[(j, e) for j, e in enumerate(row) if e] for row in exps.tolist()]


def eval_system(exps, coeffs, comp, ncomp, x):
    return np.array(_eval(_sparse_rows(exps), coeffs.tolist(), comp.tolist(), ncomp, list(x)))


def rk4(exps, coeffs, comp, x0, h, nsteps, lo, hi):
    rows, cs, ks = _sparse_rows(exps), coeffs.tolist(), comp.tolist()
    n = len(x0)
    lo, hi = list(lo), list(hi)
    x = [float(v) for v in x0]
    done = 0
    for _ in range(nsteps):
        k1 = _eval(rows, cs, ks, n, x)
        k2 = _eval(rows, cs, ks, n, [a + 0.5 * h * b for a, b in zip(x, k1)])
        k3 = _eval(rows, cs, ks, n, [a + 0.5 * h * b for a, b in zip(x, k2)])
        k4 = _eval(rows, cs, ks, n, [a + h * b for a, b in zip(x, k3)])
        x = [a + h / 6.0 * (p + 2.0 * q + 2.0 * r + s) for a, p, q, r, s in zip(x, k1, k2, k3, k4)]
        done += 1
        if any(not math.isfinite(v) or v < l or v > u for v, l, u in zip(x, lo, hi)):
            return np.array(x), 1, done
    return np.array(x), 0, done
