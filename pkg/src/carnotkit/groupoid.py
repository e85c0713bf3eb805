"""The tangent groupoid of a filtered manifold in the doubled chart.

The doubled chart lives on pairs (u, u') written as (u, w) with
``w = u' - u``; the first factor is the target and the second the source.
Frame fields come in weight blocks: the diagonal fields ``X_a + X_a'``
(tangent to the diagonal) followed by the second-factor fields ``X_a'``.
:func:`doubled_chart` then replaces ``w`` by adapted coordinates ``z`` so
the diagonal is ``{z = 0}`` and the deformation chart applies verbatim.

Arrows at level ``lam != 0`` are pairs of points; at ``lam = 0`` they are
osculating group elements in exponential coordinates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .chart import FilteredChart, VectorField, validate_lie_filtration
from .coords import adapted_coordinates, coordinates_are_adapted
from .nilpotent import GradedNilpotentLieAlgebra, bch_multiply, orbit_homomorphism, osculating_algebra
from .poly import Poly

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DoubledChart:
    """Doubled chart in adapted coordinates plus the maps to and from (u, w)."""

    base: FilteredChart
    raw: FilteredChart
    chart: FilteredChart
    u_index: tuple[int, ...]  # position of u_a among the doubled variables
    w_index: tuple[int, ...]  # position of w_a (and of z_a) among the doubled variables
    z_of_w: tuple[Poly, ...]  # z_a as polynomials in (u, w), indexed by a
    w_of_z: tuple[Poly, ...]  # w_a as polynomials in (u, z), indexed by a

    @property
    def n(self) -> int:
        return self.base.dim

    def pack(self, u: Sequence, second: Sequence) -> list:
        out = [None] * (2 * self.n)
        for a in range(self.n):
            out[self.u_index[a]] = u[a]
            out[self.w_index[a]] = second[a]
        return out

    def unpack(self, x: Sequence) -> tuple[list, list]:
        return [x[i] for i in self.u_index], [x[i] for i in self.w_index]

    def to_adapted(self, p: Sequence, q: Sequence) -> tuple[list, list]:
        """Pair of points (target p, source q) to (u, z)."""
        w = [b - a for a, b in zip(p, q)]
        x = self.pack(list(p), w)
        return list(p), [z.evaluate(x) for z in self.z_of_w]

    def from_adapted(self, u: Sequence, z: Sequence) -> tuple[list, list]:
        x = self.pack(list(u), list(z))
        w = [f.evaluate(x) for f in self.w_of_z]
        return list(u), [a + b for a, b in zip(u, w)]


def raw_doubled_chart(chart: FilteredChart) -> tuple[FilteredChart, tuple[int, ...], tuple[int, ...]]:
    """Doubled chart in (u, w) coordinates with the diagonal marked."""
    if chart.normal_vars is not None:
        raise ValueError("double an unmarked chart")
    n, q = chart.dim, chart.weights
    order: list[tuple[str, int]] = []
    ranks = []
    for p in range(1, chart.step + 1):
        block = [a for a in range(n) if q[a] == p]
        order += [("u", a) for a in block] + [("w", a) for a in block]
        ranks.append(2 * chart.ranks[p - 1])
    pos = {key: i for i, key in enumerate(order)}
    u_index = tuple(pos[("u", a)] for a in range(n))
    w_index = tuple(pos[("w", a)] for a in range(n))
    m = 2 * n
    u_vars = [Poly.var(m, u_index[a]) for a in range(n)]
    shifted = [Poly.var(m, u_index[a]) + Poly.var(m, w_index[a]) for a in range(n)]

    def at(f: Poly, point):
        return f.substitute(point)

    frame = [None] * m
    for a in range(n):
        comps_d = [Poly.zero(m)] * m
        comps_s = [Poly.zero(m)] * m
        for i in range(n):
            Xi = chart.frame[a].components[i]
            here, there = at(Xi, u_vars), at(Xi, shifted)
            comps_d[u_index[i]] = here
            comps_d[w_index[i]] = there - here
            comps_s[w_index[i]] = there
        frame[u_index[a]] = VectorField(tuple(comps_d))
        frame[w_index[a]] = VectorField(tuple(comps_s))
    names = chart.var_names
    var_names = tuple(f"{names[a]}" if kind == "u" else f"w_{names[a]}" for kind, a in order)
    raw = FilteredChart(tuple(ranks), tuple(frame), frozenset(w_index), var_names)
    return raw, u_index, w_index


def _invert_triangular(forward: Sequence[Poly], w_index, m: int, rounds: int) -> list[Poly]:
    """Solve z = forward(u, w) for w as polynomials in (u, z) by fixed-point iteration."""
    # forward_a = w_a + N_a(u, w); iterate w <- z - N(u, w)
    zs = [Poly.var(m, w_index[a]) for a in range(len(w_index))]
    nonlinear = [f - Poly.var(m, w_index[a]) for a, f in enumerate(forward)]
    guess = list(zs)
    for _ in range(rounds):
        images = [Poly.var(m, i) for i in range(m)]
        for a, i in enumerate(w_index):
            images[i] = guess[a]
        new = [z - N.substitute(images) for z, N in zip(zs, nonlinear)]
        if new == guess:
            return new
        guess = new
    raise ArithmeticError("the adapted coordinate change has no polynomial inverse")


def doubled_chart(chart: FilteredChart) -> DoubledChart:
    """Doubled chart re-coordinatized so the diagonal is the coordinate subspace {z = 0}."""
    report = validate_lie_filtration(chart)
    if not report.passed:
        raise ValueError("chart is not a Lie filtration: " + report.witnesses[0]["message"])
    raw, u_index, w_index = raw_doubled_chart(chart)
    n, m = chart.dim, raw.dim
    z_map = adapted_coordinates(raw)
    z_of_w = tuple(z_map[w_index[a]] for a in range(n))
    w_of_z = tuple(_invert_triangular(z_of_w, w_index, m, 2 * raw.step + 4))
    # push the frame forward: component along a coordinate is the field applied to it
    images = [Poly.var(m, i) for i in range(m)]
    for a, i in enumerate(w_index):
        images[i] = w_of_z[a]
    coord_funcs = [Poly.var(m, i) for i in range(m)]
    for a, i in enumerate(w_index):
        coord_funcs[i] = z_of_w[a]
    frame = []
    for X in raw.frame:
        frame.append(VectorField(tuple(X(f).substitute(images) for f in coord_funcs)))
    names = tuple(f"z_{chart.var_names[a]}" for a in range(n))
    var_names = list(raw.var_names)
    for a, i in enumerate(w_index):
        var_names[i] = names[a]
    adapted = FilteredChart(raw.ranks, tuple(frame), frozenset(w_index), tuple(var_names))
    if not coordinates_are_adapted(adapted):
        raise RuntimeError("re-coordinatized doubled chart is not adapted")
    return DoubledChart(chart, raw, adapted, u_index, w_index, z_of_w, w_of_z)


# groupoid elements


@dataclass(frozen=True)
class TGElement:
    """Arrow of the tangent groupoid.

    For ``lam != 0``: target ``p`` and source ``q``.  For ``lam == 0``:
    base point ``p`` (``q`` equal to it) and group element ``xi``.
    """

    lam: object
    p: tuple
    q: tuple
    xi: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(self.p))
        object.__setattr__(self, "q", tuple(self.q))
        if self.lam == 0:
            if self.xi is None:
                raise ValueError("zero-fibre elements carry a group element")
            if self.p != self.q:
                raise ValueError("zero-fibre elements sit over a single base point")
            object.__setattr__(self, "xi", tuple(self.xi))
        elif self.xi is not None:
            raise ValueError("only zero-fibre elements carry a group element")

    @classmethod
    def arrow(cls, lam, p, q) -> "TGElement":
        if lam == 0:
            raise ValueError("pair arrows live at nonzero level")
        return cls(lam, p, q)

    @classmethod
    def group(cls, m, xi) -> "TGElement":
        return cls(0, m, m, xi)


def source(g: TGElement):
    return g.q, g.lam


def target(g: TGElement):
    return g.p, g.lam


def unit(m, lam) -> TGElement:
    return TGElement(lam, m, m, tuple(Fraction(0) for _ in m) if lam == 0 else None)


def inverse(g: TGElement) -> TGElement:
    if g.lam == 0:
        return TGElement(0, g.p, g.q, tuple(-x for x in g.xi))
    return TGElement(g.lam, g.q, g.p)


def compose(g: TGElement, h: TGElement, L: GradedNilpotentLieAlgebra | None = None) -> TGElement:
    """g o h; needs source(g) = target(h).  Zero-fibre products need the osculating algebra ``L``."""
    if g.lam != h.lam:
        raise ValueError(f"level mismatch: {g.lam} vs {h.lam}")
    if g.q != h.p:
        raise ValueError("arrows are not composable: source of g differs from target of h")
    if g.lam == 0:
        if L is None:
            raise ValueError("composition in the zero fibre needs the osculating algebra")
        return TGElement(0, g.p, g.p, tuple(bch_multiply(L, g.xi, h.xi)))
    return TGElement(g.lam, g.p, h.q)


# zero-fibre transport and convergence


class FiberTransport:
    """Group coordinates xi at base m  <->  zoomed normal coordinates zt of the doubled chart.

    ``g = exp(xi)`` is the coset of ``(g, e)``, whose normalized representative
    in the doubled osculating group has diagonal part 0 and second-factor part
    ``-xi``; its zoomed normal coordinates are the orbit images of the adapted
    coordinates ``z_c``.
    """

    def __init__(self, dc: DoubledChart, m: Sequence):
        self.dc = dc
        self.m = tuple(Fraction(x) for x in m)
        n = dc.n
        point = dc.pack(list(self.m), [Fraction(0)] * n)
        chart = dc.chart
        q = chart.weights
        F = [orbit_homomorphism(chart, point, (q[dc.w_index[a]], Poly.var(2 * n, dc.w_index[a]))) for a in range(n)]
        # restrict to representatives (0, -xi): substitute zeta_D = 0, zeta_S = -xi
        images = [Poly.zero(n) for _ in range(2 * n)]
        for a in range(n):
            images[dc.w_index[a]] = -Poly.var(n, a)
        self.forward = [f.substitute(images) for f in F]
        self.weights = tuple(q[dc.w_index[a]] for a in range(n))
        self._linear_inverse()

    def _linear_inverse(self):
        from . import linalg

        n = self.dc.n
        A = [[f.coefficient(tuple(int(i == j) for i in range(n))) for j in range(n)] for f in self.forward]
        self.A_inv = linalg.inverse(A)
        self.nonlinear = [
            f - Poly(n, {tuple(int(i == j) for i in range(n)): A[a][j] for j in range(n)})
            for a, f in enumerate(self.forward)
        ]

    def to_normal(self, xi: Sequence) -> list:
        return [f.evaluate(xi) for f in self.forward]

    def to_group(self, zt: Sequence) -> list:
        n = self.dc.n
        xi = [Fraction(0)] * n
        for _ in range(max(self.weights) + 2):
            rhs = [z - N.evaluate(xi) for z, N in zip(zt, self.nonlinear)]
            new = [sum((self.A_inv[a][b] * rhs[b] for b in range(n)), Fraction(0)) for a in range(n)]
            if new == xi:
                return new
            xi = new
        return xi


def embed_arrow(dc: DoubledChart, transport: FiberTransport, lam, xi) -> tuple[list, list]:
    """Level-lam pair (target, source) whose zoomed normal coordinates are transport(xi)."""
    zt = transport.to_normal(xi)
    z = [v * lam**w for v, w in zip(zt, transport.weights)]
    return dc.from_adapted(list(transport.m), z)


def rezoom(dc: DoubledChart, lam, p, q) -> tuple[list, list]:
    u, z = dc.to_adapted(p, q)
    weights = tuple(dc.chart.weights[i] for i in dc.w_index)
    return u, [v / lam**w for v, w in zip(z, weights)]


def convergence_test(
    chart: FilteredChart,
    m: Sequence,
    xi: Sequence,
    eta: Sequence,
    lambdas: Sequence | None = None,
    *,
    dc: DoubledChart | None = None,
    bound: float | None = None,
) -> dict:
    """Errors e(lam) between zoomed pair composition and the osculating group law at m."""
    dc = dc or doubled_chart(chart)
    m = tuple(Fraction(x) for x in m)
    xi = [Fraction(x) for x in xi]
    eta = [Fraction(x) for x in eta]
    lambdas = [Fraction(1, 2**k) for k in range(1, 11)] if lambdas is None else [Fraction(l) for l in lambdas]
    L = osculating_algebra(chart, m)
    expected = bch_multiply(L, xi, eta)
    base_transport = FiberTransport(dc, m)
    rows = []
    for lam in lambdas:
        p1, p2 = embed_arrow(dc, base_transport, lam, xi)
        transport_h = base_transport if tuple(p2) == m else FiberTransport(dc, p2)
        p2b, p3 = embed_arrow(dc, transport_h, lam, eta)
        assert list(p2b) == list(p2)
        g = TGElement.arrow(lam, p1, p2)
        h = TGElement.arrow(lam, p2, p3)
        gh = compose(g, h)
        if bound is not None and any(abs(float(v)) > bound for v in gh.p + gh.q):
            rows.append({"lambda": lam, "error": None, "exit": True})
            continue
        _, zt = rezoom(dc, lam, gh.p, gh.q)
        got = base_transport.to_group(zt)
        err = max(abs(a - b) for a, b in zip(got, expected))
        rows.append({"lambda": lam, "error": err, "result": got, "exit": False})
    errors = [(float(r["lambda"]), float(r["error"])) for r in rows if not r["exit"]]
    order = fitted_order(errors)
    tail = [e for _, e in errors]
    monotone = all(b <= a for a, b in zip(tail, tail[1:]))
    return {
        "expected": expected,
        "rows": rows,
        "fitted_order": order,
        "monotone": monotone,
        "exact": all(e == 0 for _, e in errors),
    }


def fitted_order(errors: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log e against log lam; +inf when every error is zero."""
    pts = [(math.log(l), math.log(e)) for l, e in errors if e > 0]
    if not pts:
        return math.inf
    if len(pts) == 1:
        return math.nan
    mx = sum(x for x, _ in pts) / len(pts)
    my = sum(y for _, y in pts) / len(pts)
    sxx = sum((x - mx) ** 2 for x, _ in pts)
    sxy = sum((x - mx) * (y - my) for x, y in pts)
    return sxy / sxx


def zero_fiber_matches(chart: FilteredChart, dc: DoubledChart, m: Sequence) -> bool:
    """The diagonal and second-factor subalgebras of the doubled osculating algebra both equal the original one."""
    m = tuple(Fraction(x) for x in m)
    L = osculating_algebra(chart, m)
    point = dc.pack(list(m), [Fraction(0)] * dc.n)
    Ld = osculating_algebra(dc.chart, point)
    diag = Ld.subalgebra(dc.u_index)
    second = Ld.subalgebra(dc.w_index)
    return diag.brackets == L.brackets == second.brackets and diag.weights == L.weights
