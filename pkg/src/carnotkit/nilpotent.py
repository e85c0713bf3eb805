"""Osculating graded nilpotent Lie algebras, their group law, and the orbit map.

Group elements are coefficient vectors in exponential coordinates of the
first kind, so the identity is the zero vector and inversion is negation.
The group law is the Dynkin form of the Baker-Campbell-Hausdorff series cut
at the nilpotency depth, where it terminates.

Vector entries may be Fractions or :class:`~carnotkit.poly.Poly` values;
the latter gives the group law symbolically.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import factorial
from typing import Mapping, Sequence

from . import linalg
from .chart import FilteredChart, lie_bracket, vanishing_h_order
from .poly import Poly, fraction_str, jet_truncate, monomials_up_to

MAX_STEP = 8


@dataclass(frozen=True, eq=False)
class GradedNilpotentLieAlgebra:
    """Graded Lie algebra given by basis weights and structure constants.

    ``brackets[(a, b)]`` for ``a < b`` maps ``c`` to the coefficient of
    ``e_c`` in ``[e_a, e_b]``.
    """

    weights: tuple[int, ...]
    brackets: Mapping[tuple[int, int], Mapping[int, Fraction]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))
        clean = {}
        for (a, b), coeffs in self.brackets.items():
            if a == b:
                if any(coeffs.values()):
                    raise ValueError("[e_a, e_a] must vanish")
                continue
            sign = 1
            if a > b:
                a, b, sign = b, a, -1
            entry = clean.setdefault((a, b), {})
            for c, v in coeffs.items():
                v = entry.get(c, Fraction(0)) + sign * Fraction(v)
                if v:
                    entry[c] = v
                else:
                    entry.pop(c, None)
        object.__setattr__(self, "brackets", {k: v for k, v in clean.items() if v})

    @property
    def dim(self) -> int:
        return len(self.weights)

    @property
    def step(self) -> int:
        return max(self.weights)

    def constant(self, a: int, b: int, c: int) -> Fraction:
        if a == b:
            return Fraction(0)
        if a < b:
            return self.brackets.get((a, b), {}).get(c, Fraction(0))
        return -self.brackets.get((b, a), {}).get(c, Fraction(0))

    def is_abelian(self) -> bool:
        return not self.brackets

    def bracket(self, x: Sequence, y: Sequence) -> list:
        out = [0] * self.dim
        for (a, b), coeffs in self.brackets.items():
            xa, xb, ya, yb = x[a], x[b], y[a], y[b]
            if _iszero(xa) and _iszero(xb):
                continue
            w = xa * yb - xb * ya
            if _iszero(w):
                continue
            for c, v in coeffs.items():
                out[c] = out[c] + v * w
        return out

    def basis(self, a: int) -> list[Fraction]:
        return [Fraction(int(i == a)) for i in range(self.dim)]

    def check(self) -> list[str]:
        """Grading and Jacobi violations (antisymmetry holds by construction)."""
        problems = []
        q = self.weights
        for (a, b), coeffs in self.brackets.items():
            for c, v in coeffs.items():
                if v and q[c] != q[a] + q[b]:
                    problems.append(f"[e{a + 1}, e{b + 1}] has e{c + 1} of weight {q[c]} != {q[a] + q[b]}")
        n = self.dim
        for a, b, c in combinations(range(n), 3):
            ea, eb, ec = self.basis(a), self.basis(b), self.basis(c)
            total = _vadd(
                _vadd(self.bracket(ea, self.bracket(eb, ec)), self.bracket(eb, self.bracket(ec, ea))),
                self.bracket(ec, self.bracket(ea, eb)),
            )
            if any(not _iszero(t) for t in total):
                problems.append(f"Jacobi fails on (e{a + 1}, e{b + 1}, e{c + 1})")
        return problems

    def dilate(self, xi: Sequence, lam) -> list:
        """Graded dilation e_a -> lam**q_a e_a."""
        return [x * lam**w for x, w in zip(xi, self.weights)]

    def subalgebra(self, indices: Sequence[int]) -> "GradedNilpotentLieAlgebra":
        """Structure constants restricted to a basis subset closed under brackets."""
        idx = list(indices)
        pos = {a: i for i, a in enumerate(idx)}
        brackets = {}
        for (a, b), coeffs in self.brackets.items():
            if a in pos and b in pos:
                if any(c not in pos for c in coeffs):
                    raise ValueError("index set is not closed under brackets")
                brackets[(pos[a], pos[b])] = {pos[c]: v for c, v in coeffs.items()}
        return GradedNilpotentLieAlgebra(tuple(self.weights[a] for a in idx), brackets)

    def to_json(self) -> dict:
        entries = []
        for (a, b) in sorted(self.brackets):
            coeffs = self.brackets[(a, b)]
            entries.append(
                {"a": a + 1, "b": b + 1, "coeffs": {str(c + 1): fraction_str(coeffs[c]) for c in sorted(coeffs)}}
            )
        return {"weights": list(self.weights), "brackets": entries}

    @classmethod
    def from_json(cls, data: Mapping) -> "GradedNilpotentLieAlgebra":
        brackets = {}
        for entry in data["brackets"]:
            brackets[(entry["a"] - 1, entry["b"] - 1)] = {
                int(c) - 1: Fraction(v) for c, v in entry["coeffs"].items()
            }
        return cls(tuple(data["weights"]), brackets)


def _iszero(x) -> bool:
    return x.is_zero() if isinstance(x, Poly) else x == 0


def _vadd(x, y):
    return [a + b for a, b in zip(x, y)]


@lru_cache(maxsize=None)
def dynkin_coefficients(depth: int) -> dict[str, Fraction]:
    """Coefficient of each right-nested bracket word in log(e^X e^Y), words up to ``depth``."""
    coeffs: dict[str, Fraction] = {}

    def blocks(remaining):
        # one (r_i, s_i) block with r_i + s_i >= 1
        for total in range(1, remaining + 1):
            for r in range(total + 1):
                yield r, total - r

    def rec(k, word, denom, remaining):
        if k:
            n = len(word)
            c = Fraction((-1) ** (k - 1), k * n * denom)
            coeffs[word] = coeffs.get(word, Fraction(0)) + c
        if remaining == 0:
            return
        for r, s in blocks(remaining):
            rec(k + 1, word + "X" * r + "Y" * s, denom * factorial(r) * factorial(s), remaining - r - s)

    rec(0, "", 1, depth)
    return {w: c for w, c in coeffs.items() if c and not _trivially_zero(w)}


def _trivially_zero(word: str) -> bool:
    return len(word) >= 2 and word[-1] == word[-2]


def bch_multiply(L: GradedNilpotentLieAlgebra, xi: Sequence, eta: Sequence) -> list:
    """Group product in exponential coordinates: log(exp(xi) exp(eta))."""
    if len(xi) != L.dim or len(eta) != L.dim:
        raise ValueError("group elements must have one coordinate per basis vector")
    depth = L.step
    if depth > MAX_STEP:
        raise ValueError(f"step {depth} exceeds the supported depth {MAX_STEP}")
    if L.is_abelian():
        return [a + b for a, b in zip(xi, eta)]
    letters = {"X": list(xi), "Y": list(eta)}
    memo: dict[str, list] = {}

    def nested(word: str) -> list:
        if word in memo:
            return memo[word]
        if len(word) == 1:
            val = letters[word]
        else:
            val = L.bracket(letters[word[0]], nested(word[1:]))
        memo[word] = val
        return val

    out = [0] * L.dim
    for word, c in dynkin_coefficients(depth).items():
        val = nested(word)
        for i, v in enumerate(val):
            if not _iszero(v):
                out[i] = out[i] + c * v
    return out


def group_inverse(xi: Sequence) -> list:
    return [-x for x in xi]


def osculating_algebra(chart: FilteredChart, v: Sequence | None = None) -> GradedNilpotentLieAlgebra:
    """Osculating algebra at ``v``: brackets of frame fields, kept in the summed weight."""
    n = chart.dim
    v = chart.origin() if v is None else tuple(Fraction(x) for x in v)
    F = chart.frame_matrix_at(v)
    try:
        Finv = linalg.inverse(F)
    except ZeroDivisionError:
        raise ValueError(f"frame is singular at {v}") from None
    q, r = chart.weights, chart.step
    brackets = {}
    for a, b in combinations(range(n), 2):
        B = lie_bracket(chart.frame[a], chart.frame[b]).evaluate(v)
        if not any(B):
            continue
        # B = sum_c f_c F[c]  =>  f = B F^{-1}
        f = [sum((B[i] * Finv[i][c] for i in range(n)), Fraction(0)) for c in range(n)]
        target = q[a] + q[b]
        for c, fc in enumerate(f):
            if fc and q[c] > min(target, r):
                raise ValueError(
                    f"[X{a + 1}, X{b + 1}] leaves H^{min(target, r)} at {v}; the chart is not a Lie filtration"
                )
        coeffs = {c: fc for c, fc in enumerate(f) if fc and q[c] == target}
        if coeffs:
            brackets[(a, b)] = coeffs
    L = GradedNilpotentLieAlgebra(q, brackets)
    problems = L.check()
    if problems:
        raise RuntimeError("osculating algebra failed its invariants: " + "; ".join(problems))
    return L


# graded algebra A_0(V, v)


class GradedElement:
    """Finite sum of graded classes <a_q>_q, stored by representative."""

    def __init__(self, parts: Mapping[int, Poly]):
        self.parts = {q: f for q, f in parts.items() if f and q >= 0}

    @classmethod
    def of(cls, grade: int, rep: Poly) -> "GradedElement":
        return cls({grade: rep})

    def __add__(self, other: "GradedElement") -> "GradedElement":
        parts = dict(self.parts)
        for q, f in other.parts.items():
            parts[q] = parts[q] + f if q in parts else f
        return GradedElement(parts)

    def __mul__(self, other: "GradedElement") -> "GradedElement":
        parts: dict[int, Poly] = {}
        for p, f in self.parts.items():
            for q, g in other.parts.items():
                parts[p + q] = parts[p + q] + f * g if p + q in parts else f * g
        return GradedElement(parts)

    def scale(self, c) -> "GradedElement":
        return GradedElement({q: f.scale(c) for q, f in self.parts.items()})

    def is_zero(self) -> bool:
        return not self.parts

    def __repr__(self) -> str:
        inner = " + ".join(f"<{f.format()}>_{q}" for q, f in sorted(self.parts.items()))
        return f"GradedElement({inner or '0'})"


def _as_graded(a) -> GradedElement:
    if isinstance(a, GradedElement):
        return a
    grade, rep = a
    return GradedElement.of(grade, rep)


def check_graded(chart: FilteredChart, v, a: GradedElement) -> None:
    for q, f in a.parts.items():
        if q and vanishing_h_order(chart, f, "point", max(q, 1), point=v) < q:
            raise ValueError(f"representative {f.format(chart.var_names)} does not vanish to H-order {q}")


def classes_equal(chart: FilteredChart, v, a, b) -> bool:
    """Equality in A_0(V, v): each graded difference vanishes to order grade + 1."""
    a, b = _as_graded(a), _as_graded(b)
    v = tuple(v)
    for q in set(a.parts) | set(b.parts):
        d = a.parts.get(q, Poly.zero(chart.dim)) - b.parts.get(q, Poly.zero(chart.dim))
        if d and vanishing_h_order(chart, d, "point", q + 1, point=v) < q + 1:
            return False
    return True


def derivation_action(chart: FilteredChart, v, xi: Sequence, a) -> GradedElement:
    """Action of sum_a xi_a <X_a> on a graded element, lowering grade by weight."""
    v = chart.origin() if v is None else tuple(Fraction(x) for x in v)
    a = _as_graded(a)
    check_graded(chart, v, a)
    q = chart.weights
    parts: dict[int, Poly] = {}
    for grade, f in a.parts.items():
        for b, coeff in enumerate(xi):
            if not coeff or grade - q[b] < 0:
                continue
            g = chart.frame[b](f).scale(coeff)
            key = grade - q[b]
            parts[key] = parts[key] + g if key in parts else g
    return GradedElement(parts)


def counit(v, a: GradedElement):
    f = a.parts.get(0)
    return Fraction(0) if f is None else f.evaluate(v)


def orbit_homomorphism(chart: FilteredChart, v, a) -> Poly:
    """Polynomial F_a(xi) = counit(exp(-xi) . a) = sum_k (-1)^k/k! counit(delta_xi^k a).

    The result is a polynomial in the exponential coordinates xi_1..xi_n;
    a grade-q class yields a polynomial of weighted degree exactly q.
    """
    v = chart.origin() if v is None else tuple(Fraction(x) for x in v)
    a = _as_graded(a)
    check_graded(chart, v, a)
    n, q = chart.dim, chart.weights
    acc: dict[tuple[int, ...], Fraction] = {}

    def rec(g: Poly, remaining: int, exps: list[int], k: int):
        if remaining == 0:
            val = g.evaluate(v)
            if val:
                key = tuple(exps)
                acc[key] = acc.get(key, Fraction(0)) + Fraction((-1) ** k, factorial(k)) * val
            return
        for b in range(n):
            if q[b] <= remaining:
                h = chart.frame[b](g)
                if h:
                    exps[b] += 1
                    rec(h, remaining - q[b], exps, k + 1)
                    exps[b] -= 1

    for grade, f in a.parts.items():
        rec(f, grade, [0] * n, 0)
    return Poly(n, acc)


def _class_basis(chart: FilteredChart, v, coords: Sequence[Poly]):
    """Monomial classes <x^beta>_{w(beta)} of grade <= r in privileged coordinates."""
    q, r = chart.weights, chart.step
    basis = []
    for beta in monomials_up_to(chart.dim, q, r):
        rep = Poly.constant(chart.dim, 1)
        for x, k in zip(coords, beta):
            if k:
                rep = rep * x**k
        basis.append((beta, sum(w * k for w, k in zip(q, beta)), rep))
    return basis


def verify_orbit_isomorphism(chart: FilteredChart, v=None, *, pairs: int = 50, seed: int = 0) -> dict:
    """Rank and multiplicativity checks of the orbit map on grades <= r."""
    from .coords import privileged_coordinates

    v = chart.origin() if v is None else tuple(Fraction(x) for x in v)
    q, r = chart.weights, chart.step
    coords = privileged_coordinates(chart, v)
    basis = _class_basis(chart, v, coords)
    targets = monomials_up_to(chart.dim, q, r)
    images = [orbit_homomorphism(chart, v, (grade, rep)) for _, grade, rep in basis]
    matrix = [[F.coefficient(g) for g in targets] for F in images]
    rk = linalg.rank(matrix)
    report = {
        "pass": True,
        "dimension": len(basis),
        "target_dimension": len(targets),
        "rank": rk,
        "witnesses": [],
    }
    if rk != len(basis) or len(basis) != len(targets):
        report["pass"] = False
        report["witnesses"].append({"message": f"orbit map has rank {rk} on {len(basis)} classes"})

    rng = random.Random(seed)

    def random_element():
        parts: dict[int, Poly] = {}
        for _ in range(rng.randint(1, 3)):
            _, grade, rep = rng.choice(basis)
            c = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
            # add a representative-level perturbation living in I_{grade+1}
            noise_beta = rng.choice(basis)
            noise = noise_beta[2] if noise_beta[1] > grade else Poly.zero(chart.dim)
            term = rep.scale(c) + noise.scale(Fraction(rng.randint(-3, 3)))
            parts[grade] = parts[grade] + term if grade in parts else term
        return GradedElement(parts)

    for i in range(pairs):
        a, b = random_element(), random_element()
        lhs = jet_truncate(orbit_homomorphism(chart, v, a * b), q, r)
        rhs = jet_truncate(orbit_homomorphism(chart, v, a) * orbit_homomorphism(chart, v, b), q, r)
        if lhs != rhs:
            report["pass"] = False
            report["witnesses"].append({"message": "orbit map is not multiplicative", "pair": i})
    report["pairs_checked"] = pairs
    return report


def osculating_quotient(chart: FilteredChart, m=None) -> tuple[GradedNilpotentLieAlgebra, tuple[int, ...]]:
    """Osculating algebra at a point of the marked submanifold and the indices spanning g_m."""
    if chart.normal_vars is None:
        raise ValueError("chart has no marked submanifold")
    m = chart.origin() if m is None else tuple(Fraction(x) for x in m)
    if any(m[i] for i in chart.normal):
        raise ValueError(f"point {m} does not lie on the marked submanifold")
    L = osculating_algebra(chart, m)
    tangential = chart.tangential
    L.subalgebra(tangential)
    return L, tangential


def normalize_coset(L: GradedNilpotentLieAlgebra, tangential: Sequence[int], zeta: Sequence) -> list:
    """Right-translate by the subgroup so the tangential coordinates vanish."""
    tangential = tuple(tangential)
    t = [Fraction(0)] * L.dim
    current = list(zeta)
    for _ in range(L.step + 1):
        if all(_iszero(current[i]) for i in tangential):
            return current
        for i in tangential:
            t[i] = t[i] - current[i]
        current = bch_multiply(L, zeta, t)
    if all(_iszero(current[i]) for i in tangential):
        return current
    raise RuntimeError("coset normalization did not terminate")
