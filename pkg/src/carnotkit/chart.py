"""Filtered manifolds presented as polynomial charts with an H-frame.

A chart lives on a neighbourhood of the origin of Q^n.  The frame fields
``X_1, ..., X_n`` are ordered by weight, and ``ranks[q-1]`` counts the
fields spanning ``H^q``.  A marked submanifold is a coordinate subspace
``{u_i = 0 for i in normal_vars}``; frame field ``i`` is paired with
coordinate ``i``, so the normal frame fields carry the same indices as the
normal variables.

Indices are 0-based in Python and 1-based in JSON.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .linalg import poly_det
from .poly import Poly, weights_from_ranks


@dataclass(frozen=True)
class VectorField:
    """A vector field sum_i components[i] * d/du_i with polynomial components."""

    components: tuple[Poly, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if comps and any(c.nvars != comps[0].nvars for c in comps):
            raise ValueError("components must share one ambient dimension")
        if comps and comps[0].nvars != len(comps):
            raise ValueError(
                f"a field on {comps[0].nvars} variables needs {comps[0].nvars} components, got {len(comps)}"
            )

    @classmethod
    def zero(cls, n: int) -> "VectorField":
        return cls(tuple(Poly.zero(n) for _ in range(n)))

    @classmethod
    def coordinate(cls, n: int, i: int) -> "VectorField":
        return cls(tuple(Poly.constant(n, int(j == i)) for j in range(n)))

    @property
    def dim(self) -> int:
        return len(self.components)

    def __call__(self, f: Poly) -> Poly:
        if f.nvars != self.dim:
            raise ValueError(f"field on {self.dim} variables applied to a function of {f.nvars}")
        out = Poly.zero(self.dim)
        for i, c in enumerate(self.components):
            if c:
                d = f.partial(i)
                if d:
                    out = out + c * d
        return out

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(tuple(a - b for a, b in zip(self.components, other.components)))

    def __neg__(self) -> "VectorField":
        return VectorField(tuple(-a for a in self.components))

    def __mul__(self, g) -> "VectorField":
        return VectorField(tuple(g * a for a in self.components))

    __rmul__ = __mul__

    def _check(self, other):
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def evaluate(self, point: Sequence) -> list:
        return [c.evaluate(point) for c in self.components]

    def to_json(self) -> list:
        return [c.to_json() for c in self.components]

    @classmethod
    def from_json(cls, data, n: int) -> "VectorField":
        return cls(tuple(Poly.from_json(c, n) for c in data))

    def format(self, names=None) -> str:
        names = names or [f"u{i + 1}" for i in range(self.dim)]
        parts = [
            f"({c.format(names)})*d/d{names[i]}" for i, c in enumerate(self.components) if c
        ]
        return " + ".join(parts) or "0"


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y] with components X(Y_i) - Y(X_i)."""
    X._check(Y)
    return VectorField(tuple(X(Yi) - Y(Xi) for Xi, Yi in zip(X.components, Y.components)))


@dataclass
class ValidationReport:
    """Pass flag plus witnesses; passes exactly when there are no witnesses."""

    witnesses: list[dict] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.witnesses

    def add(self, message: str, **locants) -> None:
        self.witnesses.append({"message": message, **locants})

    def to_json(self) -> dict:
        return {"pass": self.passed, "witnesses": list(self.witnesses), **self.details}


@dataclass(frozen=True, eq=False)
class FilteredChart:
    """Polynomial chart of a filtered manifold with a local H-frame."""

    ranks: tuple[int, ...]
    frame: tuple[VectorField, ...]
    normal_vars: frozenset[int] | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        object.__setattr__(self, "frame", tuple(self.frame))
        n = len(self.frame)
        if n == 0:
            raise ValueError("a chart needs at least one frame field")
        if any(X.dim != n for X in self.frame):
            raise ValueError("every frame field must live on the chart's n variables")
        if not self.ranks or self.ranks[-1] != n:
            raise ValueError(f"last rank must equal the dimension {n}, got {list(self.ranks)}")
        if self.ranks[0] < 1:
            raise ValueError("rank(H^1) must be positive")
        weights_from_ranks(self.ranks)
        if self.normal_vars is not None:
            nv = frozenset(int(i) for i in self.normal_vars)
            if any(not 0 <= i < n for i in nv):
                raise ValueError(f"normal variable index out of range in {sorted(nv)}")
            object.__setattr__(self, "normal_vars", nv)
        if self.names is not None:
            names = tuple(self.names)
            if len(names) != n:
                raise ValueError("need one name per variable")
            object.__setattr__(self, "names", names)
        if self.frame_det().constant_term() == 0:
            raise ValueError("frame matrix is not invertible at the chart origin")
        if self.normal_vars is not None:
            bad = self.tangency_violations()
            if bad:
                a, i = bad[0]
                raise ValueError(
                    f"not a (G,H)-frame: tangential field X{a + 1} has normal component "
                    f"{i + 1} not vanishing on the marked submanifold"
                )

    @property
    def dim(self) -> int:
        return len(self.frame)

    @property
    def step(self) -> int:
        return len(self.ranks)

    @cached_property
    def weights(self) -> tuple[int, ...]:
        return weights_from_ranks(self.ranks)

    @property
    def tangential(self) -> tuple[int, ...]:
        nv = self.normal_vars or frozenset()
        return tuple(i for i in range(self.dim) if i not in nv)

    @property
    def normal(self) -> tuple[int, ...]:
        return tuple(sorted(self.normal_vars or ()))

    @property
    def var_names(self) -> tuple[str, ...]:
        return self.names or tuple(f"u{i + 1}" for i in range(self.dim))

    def with_submanifold(self, normal_vars: Iterable[int] | None) -> "FilteredChart":
        return FilteredChart(self.ranks, self.frame, None if normal_vars is None else frozenset(normal_vars), self.names)

    def frame_matrix(self) -> list[list[Poly]]:
        return [list(X.components) for X in self.frame]

    def frame_matrix_at(self, point: Sequence) -> list[list[Fraction]]:
        return [X.evaluate(point) for X in self.frame]

    def frame_det(self) -> Poly:
        if "_det" not in self.__dict__:
            object.__setattr__(self, "_det", poly_det(self.frame_matrix()))
        return self.__dict__["_det"]

    def tangency_violations(self) -> list[tuple[int, int]]:
        normal = self.normal
        out = []
        for a in self.tangential:
            for i in normal:
                if not self.frame[a].components[i].restrict(normal).is_zero():
                    out.append((a, i))
        return out

    def origin(self) -> tuple[Fraction, ...]:
        return (Fraction(0),) * self.dim

    def structure_functions(self) -> dict[tuple[int, int], list[Poly]]:
        """Polynomial f^c_ab with [X_a, X_b] = sum_c f^c_ab X_c.

        Raises ``ArithmeticError`` if some coefficient is not polynomial.
        """
        if "_structure" not in self.__dict__:
            table = {}
            for a, b in combinations(range(self.dim), 2):
                coeffs, ok = _cramer(self, lie_bracket(self.frame[a], self.frame[b]))
                if not ok:
                    raise ArithmeticError(f"[X{a + 1}, X{b + 1}] has non-polynomial frame coefficients")
                table[(a, b)] = coeffs
                table[(b, a)] = [-c for c in coeffs]
            object.__setattr__(self, "_structure", table)
        return self.__dict__["_structure"]

    # serialization

    def to_json(self) -> dict:
        data = {
            "dim": self.dim,
            "ranks": list(self.ranks),
            "frame": [X.to_json() for X in self.frame],
        }
        if self.normal_vars is not None:
            data["normal_vars"] = [i + 1 for i in self.normal]
        if self.names is not None:
            data["names"] = list(self.names)
        return data

    @classmethod
    def from_json(cls, data: Mapping) -> "FilteredChart":
        n = int(data["dim"])
        frame = tuple(VectorField.from_json(X, n) for X in data["frame"])
        if len(frame) != n:
            raise ValueError(f"expected {n} frame fields, got {len(frame)}")
        normal = data.get("normal_vars")
        if normal is not None:
            normal = frozenset(int(i) - 1 for i in normal)
        return cls(tuple(data["ranks"]), frame, normal, tuple(data["names"]) if data.get("names") else None)


def _cramer(chart: FilteredChart, vec: VectorField) -> tuple[list[Poly], bool]:
    n = chart.dim
    if vec.is_zero():
        return [Poly.zero(n) for _ in range(n)], True
    det = chart.frame_det()
    base = chart.frame_matrix()
    coeffs = []
    for c in range(n):
        mat = [row[:] for row in base]
        mat[c] = list(vec.components)
        num = poly_det(mat)
        try:
            coeffs.append(num.divide_exact(det))
        except ArithmeticError:
            return [], False
    return coeffs, True


def validate_lie_filtration(chart: FilteredChart) -> ValidationReport:
    """Check [X_a, X_b] lies in H^(q_a + q_b) for every pair of frame fields."""
    report = ValidationReport()
    q, r = chart.weights, chart.step
    for a, b in combinations(range(chart.dim), 2):
        bracket = lie_bracket(chart.frame[a], chart.frame[b])
        coeffs, ok = _cramer(chart, bracket)
        if not ok:
            report.add(
                f"[X{a + 1}, X{b + 1}] is not a polynomial combination of the frame",
                a=a + 1, b=b + 1, kind="non-polynomial",
            )
            continue
        bound = min(q[a] + q[b], r)
        for c, f in enumerate(coeffs):
            if f and q[c] > bound:
                report.add(
                    f"[X{a + 1}, X{b + 1}] has a component along X{c + 1} of weight {q[c]} > {bound}",
                    a=a + 1, b=b + 1, c=c + 1, kind="weight", coefficient=f.to_json(),
                )
    report.details["weights"] = list(q)
    report.details["step"] = r
    return report


def frame_monomial_apply(chart: FilteredChart, alpha: Sequence[int], f: Poly) -> Poly:
    """X^alpha f = X_1^alpha_1 ... X_n^alpha_n f, rightmost factor applied first."""
    if len(alpha) != chart.dim:
        raise ValueError("multi-index length must equal the chart dimension")
    g = f
    for a in reversed(range(chart.dim)):
        for _ in range(alpha[a]):
            g = chart.frame[a](g)
    return g


def multi_indices(weights: Sequence[int], max_order: int, subset: Iterable[int] | None = None) -> list[tuple[int, ...]]:
    """Multi-indices of weighted order <= max_order, optionally restricted to ``subset``."""
    n = len(weights)
    allowed = set(range(n)) if subset is None else set(subset)
    out: list[tuple[int, ...]] = []

    def rec(i, prefix, order):
        if i == n:
            out.append(tuple(prefix))
            return
        k = 0
        while True:
            if order + k * weights[i] > max_order:
                break
            rec(i + 1, prefix + [k], order + k * weights[i])
            if i not in allowed:
                break
            k += 1

    if max_order >= 0:
        rec(0, [], 0)
    out.sort(key=lambda a: (sum(w * k for w, k in zip(weights, a)), tuple(-k for k in a)))
    return out


def apply_all_monomials(chart: FilteredChart, f: Poly, max_order: int, subset=None) -> dict[tuple[int, ...], Poly]:
    """X^alpha f for every multi-index of weighted order <= max_order, sharing work."""
    cache: dict[tuple[int, ...], Poly] = {}
    for alpha in multi_indices(chart.weights, max_order, subset):
        cache[alpha] = _monomial_cached(chart, alpha, f, cache)
    return cache


def _monomial_cached(chart, alpha, f, cache):
    if alpha in cache:
        return cache[alpha]
    k = next((i for i, a in enumerate(alpha) if a), None)
    if k is None:
        return f
    rest = list(alpha)
    rest[k] -= 1
    rest = tuple(rest)
    inner = cache.get(rest)
    if inner is None:
        inner = _monomial_cached(chart, rest, f, cache)
        cache[rest] = inner
    return chart.frame[k](inner)


class FrameOperator:
    """Differential operator sum_alpha f_alpha X^alpha in normal-ordered frame form."""

    def __init__(self, chart: FilteredChart, terms: Mapping[Sequence[int], Poly] | None = None):
        self.chart = chart
        clean = {}
        for alpha, coeff in (terms or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != chart.dim:
                raise ValueError("multi-index length must equal the chart dimension")
            if not isinstance(coeff, Poly):
                coeff = Poly.constant(chart.dim, coeff)
            coeff = clean.get(alpha, Poly.zero(chart.dim)) + coeff
            if coeff:
                clean[alpha] = coeff
            else:
                clean.pop(alpha, None)
        self.terms = clean

    @classmethod
    def field(cls, chart: FilteredChart, a: int, coeff=1) -> "FrameOperator":
        alpha = [0] * chart.dim
        alpha[a] = 1
        return cls(chart, {tuple(alpha): coeff})

    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, f: Poly) -> Poly:
        out = Poly.zero(self.chart.dim)
        for alpha, coeff in self.terms.items():
            out = out + coeff * frame_monomial_apply(self.chart, alpha, f)
        return out

    def __add__(self, other: "FrameOperator") -> "FrameOperator":
        merged = dict(self.terms)
        for alpha, c in other.terms.items():
            merged[alpha] = merged.get(alpha, Poly.zero(self.chart.dim)) + c
        return FrameOperator(self.chart, merged)

    def compose(self, other: "FrameOperator") -> "FrameOperator":
        """self o other, re-expressed in frame form by commuting fields into order."""
        words: dict[tuple[int, ...], Poly] = {}
        for beta, g in other.terms.items():
            _accumulate(words, _word(beta), g)
        result: dict[tuple[int, ...], Poly] = {}
        for alpha, f in self.terms.items():
            op = dict(words)
            for k in reversed(_word(alpha)):
                op = _left_field(self.chart, k, op)
            for w, c in _normal_order(self.chart, op).items():
                _accumulate(result, w, f * c)
        n = self.chart.dim
        return FrameOperator(self.chart, {_alpha(w, n): c for w, c in result.items()})


def _word(alpha):
    return tuple(i for i, k in enumerate(alpha) for _ in range(k))


def _alpha(word, n):
    alpha = [0] * n
    for i in word:
        alpha[i] += 1
    return tuple(alpha)


def _accumulate(target, key, coeff):
    s = target.get(key)
    s = coeff if s is None else s + coeff
    if s:
        target[key] = s
    else:
        target.pop(key, None)


def _left_field(chart, k, op):
    """X_k o (sum_w g_w X^w) = sum_w (X_k g_w) X^w + g_w X_k X^w."""
    out: dict = {}
    for w, g in op.items():
        dg = chart.frame[k](g)
        if dg:
            _accumulate(out, w, dg)
        _accumulate(out, (k,) + w, g)
    return out


def _normal_order(chart, op):
    structure = chart.structure_functions()
    done: dict = {}
    pending = dict(op)
    while pending:
        w, g = pending.popitem()
        pos = next((i for i in range(len(w) - 1) if w[i] > w[i + 1]), None)
        if pos is None:
            _accumulate(done, w, g)
            continue
        head, i, j, tail = w[:pos], w[pos], w[pos + 1], w[pos + 2:]
        _accumulate(pending, head + (j, i) + tail, g)
        for c, fc in enumerate(structure[(i, j)]):
            if not fc:
                continue
            inner = {(c,) + tail: fc}
            for k in reversed(head):
                inner = _left_field(chart, k, inner)
            for w2, g2 in inner.items():
                _accumulate(pending, w2, g * g2)
    return done


def h_order_of_operator(chart: FilteredChart, D: FrameOperator) -> int:
    """Largest weighted order sum_a q_a alpha_a over the nonzero terms of D."""
    if D.is_zero():
        raise ValueError("the zero operator has no H-order")
    q = chart.weights
    return max(sum(w * k for w, k in zip(q, alpha)) for alpha in D.terms)


def vanishing_h_order(
    chart: FilteredChart,
    f: Poly,
    locus: str = "origin",
    cap: int | None = None,
    *,
    point: Sequence | None = None,
    normal_vars: Iterable[int] | None = None,
) -> int:
    """H-order of vanishing of ``f`` at a point or on a coordinate submanifold.

    ``locus`` is ``"origin"``, ``"point"`` (with ``point``) or
    ``"submanifold"`` (the chart's marked normal variables unless
    ``normal_vars`` is given).  Returns a value in ``0..cap``, or ``cap + 1``
    meaning "at least cap + 1".
    """
    cap = chart.step if cap is None else cap
    if cap < 1:
        raise ValueError("cap must be at least 1")
    if f.nvars != chart.dim:
        raise ValueError("function dimension does not match the chart")
    if locus == "origin":
        v = chart.origin()
        vanishes = lambda g: g.evaluate(v) == 0
    elif locus == "point":
        if point is None:
            raise ValueError("locus 'point' needs a point")
        v = tuple(point)
        vanishes = lambda g: g.evaluate(v) == 0
    elif locus == "submanifold":
        nv = chart.normal if normal_vars is None else tuple(sorted(normal_vars))
        if normal_vars is None and chart.normal_vars is None:
            raise ValueError("chart has no marked submanifold")
        vanishes = lambda g: g.restrict(nv).is_zero()
    else:
        raise ValueError(f"unknown locus {locus!r}")
    q = chart.weights
    cache: dict = {}
    for alpha in multi_indices(q, cap):
        g = _monomial_cached(chart, alpha, f, cache)
        cache[alpha] = g
        if not vanishes(g):
            return sum(w * k for w, k in zip(q, alpha))
    return cap + 1
