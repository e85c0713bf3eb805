"""Privileged coordinates at a point, adapted coordinates along a marked
submanifold, the Carnot predicate, and the model Euler-like field."""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import Sequence

from . import linalg
from .chart import (
    FilteredChart,
    VectorField,
    _monomial_cached,
    multi_indices,
    vanishing_h_order,
)
from .poly import Poly, monomials_up_to

log = logging.getLogger(__name__)


def _shifted_monomial(n: int, beta: Sequence[int], v: Sequence[Fraction]) -> Poly:
    out = Poly.constant(n, 1)
    for i, k in enumerate(beta):
        if k:
            out = out * (Poly.var(n, i) - v[i]) ** k
    return out


def _unit(n: int, a: int) -> tuple[int, ...]:
    return tuple(int(i == a) for i in range(n))


def privileged_coordinates(chart: FilteredChart, v: Sequence | None = None) -> list[Poly]:
    """Polynomials x_a centred at ``v`` with X_a(x_b)(v) = delta_ab and x_a of H-order q_a.

    Built from the dual family to the frame monomials: among polynomials of
    total degree <= r in u - v, ``x_a`` is the minimal-support solution of
    (X^alpha x_a)(v) = [alpha = e_a] for every alpha of weighted order <= r.
    """
    n, q, r = chart.dim, chart.weights, chart.step
    v = chart.origin() if v is None else tuple(Fraction(c) for c in v)
    alphas = multi_indices(q, r)
    betas = monomials_up_to(n, (1,) * n, r)
    columns = []
    for beta in betas:
        cache: dict = {}
        g = _shifted_monomial(n, beta, v)
        columns.append([_monomial_cached(chart, alpha, g, cache).evaluate(v) for alpha in alphas])
    matrix = [[columns[j][i] for j in range(len(betas))] for i in range(len(alphas))]
    if linalg.rank(matrix) != len(alphas):
        raise RuntimeError("frame monomials are not independent on polynomial jets; the frame is degenerate")
    index = {alpha: i for i, alpha in enumerate(alphas)}
    rhs = []
    for a in range(n):
        e = [Fraction(0)] * len(alphas)
        e[index[_unit(n, a)]] = Fraction(1)
        rhs.append(e)
    solutions = linalg.solve(matrix, rhs)
    coords = []
    for sol in solutions:
        x = Poly.zero(n)
        for c, beta in zip(sol, betas):
            if c:
                x = x + _shifted_monomial(n, beta, v).scale(c)
        coords.append(x)
    problems = check_privileged(chart, v, coords)
    if problems:
        raise RuntimeError("privileged coordinates failed verification: " + "; ".join(problems))
    return coords


def check_privileged(chart: FilteredChart, v, coords: Sequence[Poly]) -> list[str]:
    """Both defining conditions, re-checked through the chart operations."""
    v = chart.origin() if v is None else tuple(Fraction(c) for c in v)
    problems = []
    q, r = chart.weights, chart.step
    for b, x in enumerate(coords):
        order = vanishing_h_order(chart, x, "point", r, point=v)
        if order != q[b]:
            problems.append(f"x{b + 1} vanishes to H-order {order}, expected {q[b]}")
        for a, X in enumerate(chart.frame):
            val = X(x).evaluate(v)
            if val != int(a == b):
                problems.append(f"X{a + 1}(x{b + 1})(v) = {val}")
    return problems


def _normal_problem(chart: FilteredChart):
    n, q, r = chart.dim, chart.weights, chart.step
    normal = chart.normal
    alphas = [a for a in multi_indices(q, r, normal) if any(a)]
    cands = [b for b in monomials_up_to(n, (1,) * n, r) if any(b[i] for i in normal)]
    return alphas, cands


def adapted_coordinates(chart: FilteredChart, *, max_rounds: int | None = None) -> dict[int, Poly]:
    """Functions z_c, one per normal index c, vanishing on M to H-order q_c with X_c(z_d) = delta on M.

    First solves the point problem at the origin of M, then corrects by the
    inverse of h_{alpha beta} = X^alpha(g_beta)|_M.  The inverse is the
    Neumann series of a matrix vanishing at the base point; when it does not
    terminate, or one correction is not enough, the correction is repeated.
    """
    if chart.normal_vars is None:
        raise ValueError("chart has no marked submanifold")
    n, normal = chart.dim, chart.normal
    if not normal:
        return {}
    origin = chart.origin()
    alphas, cands = _normal_problem(chart)
    columns = []
    for beta in cands:
        g = Poly.monomial(beta)
        cache: dict = {}
        columns.append([_monomial_cached(chart, alpha, g, cache).evaluate(origin) for alpha in alphas])
    matrix = [[col[i] for col in columns] for i in range(len(alphas))]
    if linalg.rank(matrix) != len(alphas):
        raise RuntimeError("normal frame monomials are dependent at the base point")
    eye = [[Fraction(int(i == j)) for i in range(len(alphas))] for j in range(len(alphas))]
    sols = linalg.solve(matrix, eye)
    g = []
    for sol in sols:
        f = Poly.zero(n)
        for c, beta in zip(sol, cands):
            if c:
                f = f + Poly.monomial(beta, c)
        g.append(f)

    rounds = max_rounds if max_rounds is not None else chart.step + 2
    for _ in range(rounds):
        h = _restricted_pairing(chart, alphas, g)
        if _is_identity(h):
            break
        hinv = _neumann_inverse(h, n, chart.step + len(alphas))
        # X^alpha f_beta ~ sum_gamma h_{alpha gamma} c_{beta gamma} = delta  =>  c = (h^{-1})^T
        g = [
            sum((hinv[gamma][beta] * g[gamma] for gamma in range(len(g)) if hinv[gamma][beta]), Poly.zero(n))
            for beta in range(len(g))
        ]
    z = {c: g[alphas.index(_unit(n, c))] for c in normal}
    problems = check_adapted(chart, z)
    if problems:
        raise RuntimeError("adapted coordinates failed verification: " + "; ".join(problems))
    return z


def _restricted_pairing(chart, alphas, g):
    normal = chart.normal
    rows = []
    for alpha in alphas:
        row = []
        for f in g:
            row.append(_monomial_cached(chart, alpha, f, {}).restrict(normal))
        rows.append(row)
    return rows


def _is_identity(h) -> bool:
    return all(
        (h[i][j] - int(i == j)).is_zero() if isinstance(h[i][j], Poly) else h[i][j] == int(i == j)
        for i in range(len(h))
        for j in range(len(h))
    )


def _matmul(A, B, n):
    size = len(A)
    out = [[Poly.zero(n) for _ in range(size)] for _ in range(size)]
    for i in range(size):
        for k in range(size):
            if A[i][k]:
                for j in range(size):
                    if B[k][j]:
                        out[i][j] = out[i][j] + A[i][k] * B[k][j]
    return out


def _neumann_inverse(h, n, max_terms):
    """(I - N)^{-1} = I + N + N^2 + ... for N = I - h, vanishing at the base point."""
    size = len(h)
    N = [[Poly.constant(n, int(i == j)) - h[i][j] for j in range(size)] for i in range(size)]
    if any(N[i][j].constant_term() for i in range(size) for j in range(size)):
        raise RuntimeError("pairing matrix is not the identity at the base point")
    total = [[Poly.constant(n, int(i == j)) for j in range(size)] for i in range(size)]
    power = [row[:] for row in total]
    for _ in range(max_terms):
        power = _matmul(power, N, n)
        if all(not p for row in power for p in row):
            break
        total = [[total[i][j] + power[i][j] for j in range(size)] for i in range(size)]
    else:
        log.info("Neumann series truncated after %d terms", max_terms)
    return total


def check_adapted(chart: FilteredChart, z: dict[int, Poly]) -> list[str]:
    normal, q = chart.normal, chart.weights
    problems = []
    for c in normal:
        order = vanishing_h_order(chart, z[c], "submanifold", q[c])
        if order < q[c]:
            problems.append(f"z{c + 1} vanishes on M to H-order {order} < {q[c]}")
        for d in normal:
            val = chart.frame[c](z[d]).restrict(normal) - int(c == d)
            if val:
                problems.append(f"X{c + 1}(z{d + 1}) - delta = {val.format(chart.var_names)} on M")
    return problems


def coordinates_are_adapted(chart: FilteredChart) -> bool:
    """True when the chart's own normal variables satisfy the adapted-coordinate conditions."""
    z = {c: Poly.var(chart.dim, c) for c in chart.normal}
    return not check_adapted(chart, z)


def is_carnot(chart: FilteredChart, v, coords: Sequence[Poly]) -> tuple[bool, dict | None]:
    """Whether the orbit image of each <x_a>_{q_a} is the coordinate function -xi_a.

    The orbit map sends a function to xi -> eps(exp(-xi) . a), so linear
    exponential coordinates pull back with a minus sign; flat coordinates
    satisfy this with no correction.
    """
    from .nilpotent import orbit_homomorphism

    v = chart.origin() if v is None else tuple(Fraction(c) for c in v)
    n, q = chart.dim, chart.weights
    for a, x in enumerate(coords):
        F = orbit_homomorphism(chart, v, (q[a], x))
        target = -Poly.var(n, a)
        if F != target:
            return False, {
                "index": a + 1,
                "image": F.to_json(),
                "deviation": (F - target).to_json(),
                "text": (F - target).format([f"xi{i + 1}" for i in range(n)]),
            }
    return True, None


def carnot_repair(chart: FilteredChart, v, coords: Sequence[Poly], index: int, correction: Poly) -> Fraction:
    """The unique rational c making coords[index] + c * correction Carnot, if one exists."""
    from .nilpotent import orbit_homomorphism

    v = chart.origin() if v is None else tuple(Fraction(c) for c in v)
    q, n = chart.weights, chart.dim
    base = orbit_homomorphism(chart, v, (q[index], coords[index])) + Poly.var(n, index)
    direction = orbit_homomorphism(chart, v, (q[index], correction))
    if not direction:
        raise ValueError("the correction has zero orbit image")
    exps, d = direction.leading()
    c = -base.coefficient(exps) / d
    if base + direction.scale(c):
        raise ValueError("no single multiple of the correction removes the deviation")
    return c


def model_euler_field(weights: Sequence[int], normal: Sequence[int]) -> VectorField:
    """sum_c q_c z_c d/dz_c over the normal variables."""
    n = len(weights)
    comps = [Poly.zero(n) for _ in range(n)]
    for c in normal:
        comps[c] = Poly.var(n, c).scale(weights[c])
    return VectorField(tuple(comps))
