"""Float evaluation and integration of polynomial systems.

The compiled extension is used when it was built; otherwise, or when
``CARNOTKIT_PURE=1`` is set, the pure-Python implementation is used.  Both
expose the same two functions over a :class:`PackedSystem`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels_py
from .poly import Poly


def _load():
    if os.environ.get("CARNOTKIT_PURE") == "1":
        return _kernels_py
    try:
        from . import _kernels
    except ImportError:
        return _kernels_py
    return _kernels


backend = _load()
BACKEND = backend.BACKEND


@dataclass(frozen=True)
class PackedSystem:
    """Polynomials flattened into term arrays: term t contributes to component comp[t]."""

    exps: np.ndarray
    coeffs: np.ndarray
    comp: np.ndarray
    ncomp: int

    @classmethod
    def pack(cls, polys: Sequence[Poly]) -> "PackedSystem":
        if not polys:
            raise ValueError("empty system")
        m = polys[0].nvars
        exps, coeffs, comp = [], [], []
        for k, p in enumerate(polys):
            for e, c in sorted(p.items()):
                exps.append(e)
                coeffs.append(float(c))
                comp.append(k)
        return cls(
            np.ascontiguousarray(np.array(exps, dtype=np.int64).reshape(-1, m)),
            np.ascontiguousarray(np.array(coeffs, dtype=np.float64)),
            np.ascontiguousarray(np.array(comp, dtype=np.int64)),
            len(polys),
        )


def evaluate(system: PackedSystem, x, impl=None) -> np.ndarray:
    impl = impl or backend
    x = np.ascontiguousarray(x, dtype=np.float64)
    return np.asarray(impl.eval_system(system.exps, system.coeffs, system.comp, system.ncomp, x))


def rk4(system: PackedSystem, x0, h: float, nsteps: int, lo=None, hi=None, impl=None):
    """Integrate dx/ds = P(x) with ``nsteps`` fixed RK4 steps of size ``h``.

    Returns ``(x, exited, steps_done)``; ``exited`` is true when the state
    left the box ``[lo, hi]`` or stopped being finite.
    """
    impl = impl or backend
    n = len(x0)
    if system.ncomp != n:
        raise ValueError("system size does not match the state")
    lo = np.full(n, -np.inf) if lo is None else np.ascontiguousarray(lo, dtype=np.float64)
    hi = np.full(n, np.inf) if hi is None else np.ascontiguousarray(hi, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    x, status, done = impl.rk4(system.exps, system.coeffs, system.comp, x0, float(h), int(nsteps), lo, hi)
    return np.asarray(x), bool(status), int(done)
