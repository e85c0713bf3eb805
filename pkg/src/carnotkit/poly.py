"""Sparse multivariate polynomials with exact rational coefficients.

A :class:`Poly` is an immutable map from exponent tuples to nonzero
:class:`fractions.Fraction` coefficients.  Zero coefficients are never stored,
so two polynomials are equal exactly when their term maps are equal.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence

INF = math.inf


def as_fraction(value) -> Fraction:
    """Coerce an int, Fraction or "p/q" string to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        raise TypeError("floats are not exact coefficients; pass a Fraction or string")
    raise TypeError(f"cannot use {type(value).__name__} as a rational coefficient")


def fraction_str(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class Poly:
    """Polynomial in ``nvars`` variables over the rationals."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], object] | None = None):
        if nvars < 0:
            raise ValueError("nvars must be nonnegative")
        clean: dict[tuple[int, ...], Fraction] = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise ValueError(f"exponent {exps} does not have length {nvars}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = clean.get(exps, Fraction(0)) + as_fraction(coeff)
            if c:
                clean[exps] = c
            else:
                clean.pop(exps, None)
        self.nvars = nvars
        self._terms = clean
        self._hash = None

    @classmethod
    def _from_clean(cls, nvars: int, terms: dict) -> "Poly":
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj._terms = terms
        obj._hash = None
        return obj

    # constructors

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls._from_clean(nvars, {})

    @classmethod
    def constant(cls, nvars: int, value=1) -> "Poly":
        value = as_fraction(value)
        return cls._from_clean(nvars, {(0,) * nvars: value} if value else {})

    @classmethod
    def var(cls, nvars: int, index: int, power: int = 1) -> "Poly":
        if not 0 <= index < nvars:
            raise IndexError(f"variable {index} out of range for {nvars} variables")
        exps = [0] * nvars
        exps[index] = power
        return cls._from_clean(nvars, {tuple(exps): Fraction(1)})

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff=1) -> "Poly":
        return cls(len(exps), {tuple(exps): coeff})

    @classmethod
    def gens(cls, nvars: int) -> list["Poly"]:
        return [cls.var(nvars, i) for i in range(nvars)]

    # basic protocol

    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __iter__(self):
        return iter(sorted(self._terms))

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exps), Fraction(0))

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Poly.constant(self.nvars, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def _check(self, other: "Poly"):
        if other.nvars != self.nvars:
            raise ValueError(f"dimension mismatch: {self.nvars} vs {other.nvars}")

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        return Poly.constant(self.nvars, other)

    # ring operations

    def __add__(self, other) -> "Poly":
        if not isinstance(other, (Poly, int, Fraction)):
            return NotImplemented
        other = self._coerce(other)
        out = dict(self._terms)
        for exps, c in other._terms.items():
            s = out.get(exps, 0) + c
            if s:
                out[exps] = s
            else:
                out.pop(exps, None)
        return Poly._from_clean(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._from_clean(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "Poly":
        if not isinstance(other, (Poly, int, Fraction)):
            return NotImplemented
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return (-self) + other

    def scale(self, c) -> "Poly":
        c = as_fraction(c)
        if not c:
            return Poly.zero(self.nvars)
        return Poly._from_clean(self.nvars, {e: v * c for e, v in self._terms.items()})

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        if not isinstance(other, Poly):
            return NotImplemented
        self._check(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for ea, ca in self._terms.items():
            for eb, cb in other._terms.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = out.get(e, 0) + ca * cb
        return Poly._from_clean(self.nvars, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(Fraction(1) / as_fraction(other))
        if isinstance(other, Poly):
            return self.divide_exact(other)
        return NotImplemented

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = Poly.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # calculus and substitution

    def partial(self, i: int) -> "Poly":
        if not 0 <= i < self.nvars:
            raise IndexError(f"variable {i} out of range")
        out = {}
        for exps, c in self._terms.items():
            k = exps[i]
            if k:
                e = list(exps)
                e[i] = k - 1
                out[tuple(e)] = c * k
        return Poly._from_clean(self.nvars, out)

    def substitute(self, values: Sequence["Poly"]) -> "Poly":
        """Compose: replace variable ``i`` by ``values[i]``.

        All replacement polynomials must share one ambient dimension, which
        becomes the dimension of the result.
        """
        if len(values) != self.nvars:
            raise ValueError(f"need {self.nvars} substitutions, got {len(values)}")
        if not values:
            return self
        m = values[0].nvars
        for v in values:
            if not isinstance(v, Poly) or v.nvars != m:
                raise ValueError("substitutions must be Polys of equal dimension")
        powers: dict[tuple[int, int], Poly] = {}

        def power(i, k):
            key = (i, k)
            if key not in powers:
                powers[key] = values[i] ** k
            return powers[key]

        result: dict[tuple[int, ...], Fraction] = {}
        for exps, c in self._terms.items():
            term = Poly.constant(m, c)
            for i, k in enumerate(exps):
                if k:
                    term = term * power(i, k)
            for e, v in term._terms.items():
                result[e] = result.get(e, 0) + v
        return Poly._from_clean(m, {e: c for e, c in result.items() if c})

    def evaluate(self, point: Sequence):
        """Evaluate at a point; exact for rational input, float for float input."""
        if len(point) != self.nvars:
            raise ValueError(f"point has {len(point)} coordinates, expected {self.nvars}")
        total = 0
        for exps, c in self._terms.items():
            term = c
            for x, k in zip(point, exps):
                if k:
                    term = term * x**k
            total = total + term
        return total

    def restrict(self, zero_vars: Iterable[int]) -> "Poly":
        """Set the listed variables to zero (restriction to a coordinate subspace)."""
        zero_vars = tuple(zero_vars)
        return Poly._from_clean(
            self.nvars,
            {e: c for e, c in self._terms.items() if not any(e[i] for i in zero_vars)},
        )

    def embed(self, nvars: int, positions: Sequence[int]) -> "Poly":
        """Re-home into ``nvars`` variables, sending variable i to ``positions[i]``."""
        if len(positions) != self.nvars:
            raise ValueError("positions must list one slot per variable")
        out = {}
        for exps, c in self._terms.items():
            e = [0] * nvars
            for i, k in zip(positions, exps):
                e[i] += k
            out[tuple(e)] = out.get(tuple(e), 0) + c
        return Poly._from_clean(nvars, {e: c for e, c in out.items() if c})

    # degrees

    def total_degree(self) -> float:
        if not self._terms:
            return -INF
        return max(sum(e) for e in self._terms)

    def weighted_degree(self, weights: Sequence[int]) -> float:
        if not self._terms:
            return -INF
        return max(sum(w * k for w, k in zip(weights, e)) for e in self._terms)

    def var_degree(self, i: int) -> int:
        return max((e[i] for e in self._terms), default=0)

    def min_var_degree(self, i: int) -> float:
        return min((e[i] for e in self._terms), default=INF)

    # division

    def divide_var_power(self, i: int, k: int) -> "Poly":
        """Exact division by ``u_i**k``; raises ArithmeticError if inexact."""
        out = {}
        for exps, c in self._terms.items():
            if exps[i] < k:
                raise ArithmeticError(f"monomial {exps} not divisible by variable {i}^{k}")
            e = list(exps)
            e[i] -= k
            out[tuple(e)] = c
        return Poly._from_clean(self.nvars, out)

    def leading(self) -> tuple[tuple[int, ...], Fraction]:
        exps = max(self._terms)
        return exps, self._terms[exps]

    def divide_exact(self, divisor: "Poly") -> "Poly":
        """Exact quotient in the polynomial ring (lex-order long division)."""
        self._check(divisor)
        if divisor.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if divisor.is_constant():
            return self.scale(Fraction(1) / divisor.constant_term())
        lead_e, lead_c = divisor.leading()
        rem = self
        quotient: dict[tuple[int, ...], Fraction] = {}
        while rem:
            e, c = rem.leading()
            if any(a < b for a, b in zip(e, lead_e)):
                raise ArithmeticError("polynomial division is not exact")
            qe = tuple(a - b for a, b in zip(e, lead_e))
            qc = c / lead_c
            quotient[qe] = quotient.get(qe, 0) + qc
            rem = rem - Poly._from_clean(self.nvars, {qe: qc}) * divisor
        return Poly._from_clean(self.nvars, {e: c for e, c in quotient.items() if c})

    # display and serialization

    def to_json(self) -> list[dict]:
        return [{"coeff": fraction_str(self._terms[e]), "exps": list(e)} for e in sorted(self._terms)]

    @classmethod
    def from_json(cls, data, nvars: int | None = None) -> "Poly":
        if isinstance(data, (int, str)) and nvars is not None:
            return cls.constant(nvars, as_fraction(data))
        if not isinstance(data, list):
            raise ValueError("a polynomial must be a JSON array of terms")
        terms = {}
        for term in data:
            exps = tuple(term["exps"])
            if nvars is None:
                nvars = len(exps)
            c = as_fraction(term["coeff"])
            terms[exps] = terms.get(exps, 0) + c
        if nvars is None:
            raise ValueError("cannot infer the dimension of an empty polynomial")
        return cls(nvars, terms)

    def format(self, names: Sequence[str] | None = None) -> str:
        if not self._terms:
            return "0"
        names = names or [f"u{i + 1}" for i in range(self.nvars)]
        parts = []
        for exps in sorted(self._terms, key=lambda e: (sum(e), [-k for k in e])):
            c = self._terms[exps]
            mono = "*".join(
                n if k == 1 else f"{n}^{k}" for n, k in zip(names, exps) if k
            )
            if not mono:
                parts.append(fraction_str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{fraction_str(c)}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"Poly({self.format()})"


# named operations


def poly_arith(f: Poly, g, op: str, *, index: int | None = None) -> Poly:
    """Dispatch to one exact arithmetic operation.

    ``g`` is a Poly for add/mul, a scalar for scale, ignored for
    partial_derivative (pass ``index``), and a sequence of Polys for
    substitute.
    """
    if op == "add":
        return f + g
    if op == "mul":
        return f * g
    if op == "scale":
        return f.scale(g)
    if op == "partial_derivative":
        if index is None:
            raise ValueError("partial_derivative needs a variable index")
        return f.partial(index)
    if op == "substitute":
        return f.substitute(g)
    raise ValueError(f"unknown operation {op!r}")


def weighted_valuation(f: Poly, weights: Sequence[int], subset: Iterable[int] | None = None) -> float:
    """Least weighted degree over the monomials of ``f``; ``inf`` for zero.

    With ``subset`` only the exponents of those variables are counted.
    """
    if len(weights) != f.nvars:
        raise ValueError("weight vector length does not match dimension")
    if f.is_zero():
        return INF
    idx = range(f.nvars) if subset is None else tuple(subset)
    return min(sum(weights[i] * exps[i] for i in idx) for exps in f._terms)


def jet_truncate(f: Poly, weights: Sequence[int], cap: int) -> Poly:
    """Drop every monomial whose weighted degree exceeds ``cap``."""
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    return Poly._from_clean(
        f.nvars,
        {e: c for e, c in f._terms.items() if sum(w * k for w, k in zip(weights, e)) <= cap},
    )


def weights_from_ranks(ranks: Sequence[int]) -> tuple[int, ...]:
    """Weight sequence: q repeated rank(H^q) - rank(H^(q-1)) times."""
    weights: list[int] = []
    prev = 0
    for q, rank in enumerate(ranks, start=1):
        if rank < prev:
            raise ValueError(f"ranks must be nondecreasing, got {list(ranks)}")
        weights.extend([q] * (rank - prev))
        prev = rank
    return tuple(weights)


def monomials_up_to(nvars: int, weights: Sequence[int], max_degree: int, min_degree: int = 0):
    """All exponent tuples with weighted degree in [min_degree, max_degree], in a fixed order."""
    out = []
    bounds = [max_degree // w if w > 0 else 0 for w in weights]
    for exps in product(*(range(b + 1) for b in bounds)):
        d = sum(w * k for w, k in zip(weights, exps))
        if min_degree <= d <= max_degree:
            out.append(exps)
    out.sort(key=lambda e: (sum(w * k for w, k in zip(weights, e)), tuple(-k for k in e)))
    return out
