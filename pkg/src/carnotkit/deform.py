"""The deformation space to the normal space, in its global chart.

Points are ``(lam, y, zt)`` with ``y`` the tangential coordinates and ``zt``
the zoomed normal coordinates, ``z_c = lam**q_c * zt_c``.  Symbolic objects
on the deformation space are polynomials in ``n + 1`` variables with
``lam`` at index 0 followed by the chart variables, the normal ones standing
for ``zt``.

Every routine here assumes the chart's own normal variables are adapted
coordinates for the marked submanifold (see
:func:`carnotkit.coords.coordinates_are_adapted`).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .chart import FilteredChart, ValidationReport, VectorField, lie_bracket, vanishing_h_order
from .poly import Poly, monomials_up_to

log = logging.getLogger(__name__)


class DomainExit(RuntimeError):
    """A trajectory left the configured coordinate box."""


def _require_submanifold(chart: FilteredChart) -> None:
    if chart.normal_vars is None:
        raise ValueError("chart has no marked submanifold")


# points and zoom


@dataclass(frozen=True)
class DeformPoint:
    lam: object
    y: tuple
    zt: tuple

    def flat(self, chart: FilteredChart) -> list:
        """State vector (lam, u_1..u_n) with zoomed values in the normal slots."""
        out = [None] * chart.dim
        for i, a in enumerate(chart.tangential):
            out[a] = self.y[i]
        for i, c in enumerate(chart.normal):
            out[c] = self.zt[i]
        return [self.lam] + out

    @classmethod
    def from_flat(cls, chart: FilteredChart, state: Sequence) -> "DeformPoint":
        lam, rest = state[0], list(state[1:])
        return cls(lam, tuple(rest[a] for a in chart.tangential), tuple(rest[c] for c in chart.normal))

    def to_json(self) -> dict:
        return {"lambda": _num(self.lam), "y": [_num(v) for v in self.y], "zt": [_num(v) for v in self.zt]}


def _num(v):
    from .poly import fraction_str

    if isinstance(v, (Fraction, int)):
        return fraction_str(Fraction(v))
    return float(v)


def zoom(chart: FilteredChart, lam, point: Sequence) -> DeformPoint:
    """Manifold point (in chart coordinates) to the level-``lam`` deformation point."""
    _require_submanifold(chart)
    if lam == 0:
        raise ValueError("zoom needs a nonzero level")
    q = chart.weights
    return DeformPoint(
        lam,
        tuple(point[a] for a in chart.tangential),
        tuple(point[c] / lam ** q[c] for c in chart.normal),
    )


def unzoom(chart: FilteredChart, p: DeformPoint) -> list:
    _require_submanifold(chart)
    if p.lam == 0:
        raise ValueError("points of the zero fiber do not correspond to manifold points")
    q = chart.weights
    out = [None] * chart.dim
    for v, a in zip(p.y, chart.tangential):
        out[a] = v
    for v, c in zip(p.zt, chart.normal):
        out[c] = v * p.lam ** q[c]
    return out


def lift(chart: FilteredChart, f: Poly) -> Poly:
    """f with z_c replaced by lam**q_c zt_c, as a polynomial in (lam, u)."""
    n, q = chart.dim, chart.weights
    normal = set(chart.normal)
    lam = Poly.var(n + 1, 0)
    images = []
    for i in range(n):
        v = Poly.var(n + 1, i + 1)
        images.append(v * lam ** q[i] if i in normal else v)
    return f.substitute(images)


# Rees algebra


class ReesElement:
    """Laurent polynomial sum_q a_q t^{-q} with a_q vanishing on M to H-order q."""

    def __init__(self, chart: FilteredChart, parts: Mapping[int, Poly], *, check: bool = True):
        _require_submanifold(chart)
        self.chart = chart
        self.parts = {int(q): f for q, f in parts.items() if f}
        if check:
            for q, f in self.parts.items():
                if q > 0 and vanishing_h_order(chart, f, "submanifold", q) < q:
                    raise ValueError(
                        f"coefficient of t^{-q} ({f.format(chart.var_names)}) does not vanish to H-order {q} on M"
                    )

    @classmethod
    def t(cls, chart: FilteredChart) -> "ReesElement":
        return cls(chart, {-1: Poly.constant(chart.dim, 1)})

    @classmethod
    def function(cls, chart: FilteredChart, f: Poly) -> "ReesElement":
        return cls(chart, {0: f})

    def __eq__(self, other) -> bool:
        return isinstance(other, ReesElement) and self.chart is other.chart and self.parts == other.parts

    def __add__(self, other: "ReesElement") -> "ReesElement":
        self._same(other)
        parts = dict(self.parts)
        for q, f in other.parts.items():
            parts[q] = parts[q] + f if q in parts else f
        return ReesElement(self.chart, parts, check=False)

    def __mul__(self, other: "ReesElement") -> "ReesElement":
        return rees_multiply(self, other)

    def _same(self, other):
        if self.chart is not other.chart:
            raise ValueError("Rees elements over different charts")

    def __repr__(self) -> str:
        names = self.chart.var_names
        inner = " + ".join(f"({f.format(names)})*t^{-q}" for q, f in sorted(self.parts.items()))
        return f"ReesElement({inner or '0'})"


def rees_multiply(f: ReesElement, g: ReesElement) -> ReesElement:
    f._same(g)
    parts: dict[int, Poly] = {}
    for p, a in f.parts.items():
        for q, b in g.parts.items():
            parts[p + q] = parts[p + q] + a * b if p + q in parts else a * b
    return ReesElement(f.chart, parts)


def rees_symbol(f: ReesElement) -> Poly:
    """sum_q lam^{-q} a_q(lam^q zt) as a polynomial in (lam, y, zt); exact division."""
    chart = f.chart
    total = Poly.zero(chart.dim + 1)
    for q, a in f.parts.items():
        lifted = lift(chart, a)
        if q > 0:
            try:
                lifted = lifted.divide_var_power(0, q)
            except ArithmeticError:
                raise ArithmeticError(
                    f"lam^{q} does not divide the zoomed coefficient; coordinates are not adapted"
                ) from None
        elif q < 0:
            lifted = lifted * Poly.var(chart.dim + 1, 0, -q)
        total = total + lifted
    return total


def rees_evaluate(f: ReesElement, p: DeformPoint):
    return rees_symbol(f).evaluate(p.flat(f.chart))


# Euler-like fields


def _normal_degree(chart: FilteredChart, exps: Sequence[int]) -> int:
    q = chart.weights
    return sum(q[c] * exps[c] for c in chart.normal)


def euler_generators(chart: FilteredChart, q: int) -> list[Poly]:
    """Monomials z^beta y^gamma of normal weighted degree q, |gamma| <= r, plus a wider safeguard family."""
    n, r = chart.dim, chart.step
    normal, tang = chart.normal, chart.tangential
    seen, out = set(), []
    for exps in monomials_up_to(n, (1,) * n, q + r):
        if _normal_degree(chart, exps) != q:
            continue
        tdeg = sum(exps[a] for a in tang)
        ndeg = sum(exps[c] for c in normal)
        if tdeg <= r or ndeg + tdeg <= q + r:
            if exps not in seen:
                seen.add(exps)
                out.append(Poly.monomial(exps))
    return out


def euler_like_check(chart: FilteredChart, E: VectorField, cap: int | None = None) -> ValidationReport:
    """Test E(f) = q f + (H-order >= q + 1 on M) on generators of each I_q, 0 <= q <= cap."""
    _require_submanifold(chart)
    cap = chart.step if cap is None else cap
    report = ValidationReport()
    names = chart.var_names
    for q in range(cap + 1):
        for f in euler_generators(chart, q):
            residual = E(f) - f.scale(q)
            if not residual:
                continue
            order = vanishing_h_order(chart, residual, "submanifold", q + 1)
            if order < q + 1:
                report.add(
                    f"E({f.format(names)}) - {q}*({f.format(names)}) vanishes only to H-order {order}",
                    q=q, generator=f.format(names), order=order,
                )
    report.details["cap"] = cap
    return report


# vector fields on the deformation space


@dataclass(frozen=True, eq=False)
class TField:
    """T = lam^{-1} E + d/dlam together with C and the extension of E, in (lam, y, zt)."""

    chart: FilteredChart
    E: VectorField
    T: VectorField
    C: VectorField
    E_ext: VectorField
    _packed: dict = field(default_factory=dict, repr=False)

    def packed(self) -> kernels.PackedSystem:
        if "T" not in self._packed:
            self._packed["T"] = kernels.PackedSystem.pack(self.T.components)
        return self._packed["T"]

    def format(self) -> list[str]:
        names = ("lam",) + tuple(
            n + "~" if i in set(self.chart.normal) else n for i, n in enumerate(self.chart.var_names)
        )
        return [c.format(names) for c in self.T.components]


def t_field(chart: FilteredChart, E: VectorField) -> TField:
    _require_submanifold(chart)
    report = euler_like_check(chart, E)
    if not report.passed:
        raise ValueError("field is not Euler-like: " + report.witnesses[0]["message"])
    n, q = chart.dim, chart.weights
    normal = set(chart.normal)
    m = n + 1
    lam = Poly.var(m, 0)
    T = [Poly.constant(m, 1)]
    C = [lam]
    Ex = [Poly.zero(m)]
    for i in range(n):
        Ei = lift(chart, E.components[i])
        try:
            if i in normal:
                resid = lift(chart, E.components[i] - Poly.var(n, i).scale(q[i]))
                T.append(resid.divide_var_power(0, q[i] + 1))
                C.append(Poly.var(m, i + 1).scale(-q[i]))
                Ex.append(Ei.divide_var_power(0, q[i]))
            else:
                T.append(Ei.divide_var_power(0, 1))
                C.append(Poly.zero(m))
                Ex.append(Ei)
        except ArithmeticError:
            raise ArithmeticError(
                f"component {i + 1} is not divisible by the required power of lam; "
                "the chart coordinates are not adapted"
            ) from None
    return TField(chart, E, VectorField(tuple(T)), VectorField(tuple(C)), VectorField(tuple(Ex)))


def t_field_relations(tf: TField) -> dict[str, bool]:
    """Exact checks of lam T = C + E, [T, C] = T and [T, E] = 0."""
    lam = Poly.var(tf.chart.dim + 1, 0)
    return {
        "lambda_T_eq_C_plus_E": (tf.T * lam) == (tf.C + tf.E_ext),
        "bracket_T_C_eq_T": lie_bracket(tf.T, tf.C) == tf.T,
        "bracket_T_E_eq_0": lie_bracket(tf.T, tf.E_ext).is_zero(),
    }


# flows


@dataclass
class FlowResult:
    endpoint: DeformPoint
    manifold_point: list | None
    error_estimate: float
    steps: int


def _bounds(chart: FilteredChart, bounds):
    m = chart.dim + 1
    if bounds is None:
        return None, None
    if isinstance(bounds, (int, float)):
        b = float(bounds)
        return np.full(m, -b), np.full(m, b)
    lo, hi = bounds
    return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)


def _flow(tf: TField, state0, s: float, steps: int, bounds):
    lo, hi = _bounds(tf.chart, bounds)
    if steps < 1:
        raise ValueError("need at least one step")
    h = s / steps
    if h != 0 and abs(h) < 1e-300:
        raise FloatingPointError("step size underflow")
    x, exited, done = kernels.rk4(tf.packed(), state0, h, steps, lo, hi)
    if exited:
        raise DomainExit(f"trajectory left the chart box after {done} of {steps} steps")
    return x


def integrate_tube(
    chart: FilteredChart,
    E: VectorField | TField,
    start: DeformPoint,
    lam_target: float = 1.0,
    *,
    steps: int = 200,
    bounds=None,
    rescale: float | None = None,
    self_check: bool = True,
) -> FlowResult:
    """Flow of T from the zero-fibre point ``start`` up to level ``lam_target``.

    ``rescale = c`` integrates only to ``c * lam_target`` from the dilated
    start ``c**(-q) zt`` and zooms back, using phi_{lam}(X) = phi_{c lam}(c^{-q} X).
    The error estimate is the distance to a run with ten times as many steps.
    """
    tf = E if isinstance(E, TField) else t_field(chart, E)
    if start.lam != 0:
        raise ValueError("tubular flows start on the zero fibre")
    q = chart.weights
    zt0 = [float(v) for v in start.zt]
    target = float(lam_target)
    if rescale is not None:
        c = float(rescale)
        if c <= 0:
            raise ValueError("rescale factor must be positive")
        zt0 = [v * c ** -q[cidx] for v, cidx in zip(zt0, chart.normal)]
        target *= c
    state0 = DeformPoint(0.0, tuple(float(v) for v in start.y), tuple(zt0)).flat(chart)
    x = _flow(tf, state0, target, steps, bounds)
    err = 0.0
    if self_check:
        fine = _flow(tf, state0, target, 10 * steps, bounds)
        err = float(np.max(np.abs(fine - x))) if len(x) else 0.0
        x = fine
    # d(lam)/ds = 1 exactly; drop the rounding drift of the lam component
    x[0] = target
    end = DeformPoint.from_flat(chart, list(x))
    if rescale is not None:
        # reinterpret the endpoint at the requested level; the manifold point is unchanged
        lam_end = float(lam_target)
        manifold = unzoom(chart, end)
        end = zoom(chart, lam_end, manifold)
    manifold = unzoom(chart, end) if end.lam != 0 else None
    log.debug("tube endpoint %s (error estimate %.3g)", end, err)
    return FlowResult(end, manifold, err, steps)


def tubular_map(chart, tf: TField, y, zt, lam_target=1.0, *, steps=200, bounds=None) -> np.ndarray:
    res = integrate_tube(chart, tf, DeformPoint(0, tuple(y), tuple(zt)), lam_target,
                         steps=steps, bounds=bounds, self_check=False)
    return np.array(res.manifold_point, dtype=float)


def _phi(chart, tf, y, zt, s, steps, bounds):
    """Manifold point reached from (0, y, zt) by flowing to level s."""
    return tubular_map(chart, tf, y, zt, s, steps=steps, bounds=bounds)


def verify_tube(
    chart: FilteredChart,
    E: VectorField,
    *,
    samples: int = 20,
    tol: float = 1e-6,
    steps: int = 400,
    fd_step: float = 1e-4,
    seed: int = 0,
    bounds=None,
    box: float = 0.5,
) -> ValidationReport:
    """Normal differential at the zero section, scaling relation, and exact bracket relations."""
    tf = t_field(chart, E)
    report = ValidationReport()
    n, q = chart.dim, chart.weights
    normal, tang = chart.normal, chart.tangential
    rng = np.random.default_rng(seed)

    # (a) normal differential at the zero section, compared with the identity per weight block
    worst_a = 0.0
    for _ in range(max(1, samples // 4)):
        y = rng.uniform(-box, box, len(tang))
        zero = np.zeros(len(normal))
        for j, c in enumerate(normal):
            dz = zero.copy()
            dz[j] = fd_step
            plus = _phi(chart, tf, y, zero + dz, 1.0, steps, bounds)
            minus = _phi(chart, tf, y, zero - dz, 1.0, steps, bounds)
            col = (plus - minus) / (2 * fd_step)
            for d in normal:
                if q[d] == q[c]:
                    worst_a = max(worst_a, abs(col[d] - (1.0 if d == c else 0.0)))
    report.details["normal_differential_residual"] = worst_a
    if not worst_a <= tol:
        report.add("normal differential differs from the identity", check="a", residual=worst_a)

    # (b) phi_{e^t s}(X) = phi_s(rho_t X)
    worst_b = 0.0
    for _ in range(samples):
        y = rng.uniform(-box, box, len(tang))
        zt = rng.uniform(-box, box, len(normal))
        s = float(rng.uniform(0.3, 1.0))
        t = float(rng.uniform(-0.5, 0.0))
        lhs = _phi(chart, tf, y, zt, math.exp(t) * s, steps, bounds)
        dil = np.array([z * math.exp(t * q[c]) for z, c in zip(zt, normal)])
        rhs = _phi(chart, tf, y, dil, s, steps, bounds)
        worst_b = max(worst_b, float(np.max(np.abs(lhs - rhs))))
    report.details["scaling_residual"] = worst_b
    report.details["samples"] = samples
    if not worst_b <= tol:
        report.add("scaling relation fails", check="b", residual=worst_b)

    # (c) exact identities
    relations = t_field_relations(tf)
    report.details["relations"] = relations
    for name, ok in relations.items():
        if not ok:
            report.add(f"relation {name} fails", check="c")
    return report
