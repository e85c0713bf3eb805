"""Exact linear algebra over the rationals and over polynomial rings."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .poly import Poly


def rref(rows: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns (leftmost pivoting)."""
    m = [[Fraction(x) for x in row] for row in rows]
    pivots: list[int] = []
    if not m:
        return m, pivots
    ncols = len(m[0])
    r = 0
    for col in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][col]), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][col]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col]:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == len(m):
            break
    return m, pivots


def rank(rows: Sequence[Sequence]) -> int:
    return len(rref(rows)[1])


def solve(matrix: Sequence[Sequence], rhs_columns: Sequence[Sequence]) -> list[list[Fraction]]:
    """Solve ``matrix @ x = b`` for each right-hand side.

    Free variables are set to zero, so every solution is supported on the
    pivot columns.  Raises ``ValueError`` if a system is inconsistent.
    """
    nrows = len(matrix)
    ncols = len(matrix[0]) if nrows else 0
    k = len(rhs_columns)
    aug = [list(matrix[i]) + [rhs_columns[j][i] for j in range(k)] for i in range(nrows)]
    red, pivots = rref(aug)
    if any(p >= ncols for p in pivots):
        raise ValueError("inconsistent linear system")
    solutions = []
    for j in range(k):
        x = [Fraction(0)] * ncols
        for row, p in enumerate(pivots):
            x[p] = red[row][ncols + j]
        solutions.append(x)
    return solutions


def inverse(matrix: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(matrix)
    eye = [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
    red, pivots = rref([list(matrix[i]) + [eye[j][i] for j in range(n)] for i in range(n)])
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in red]


def mat_vec(matrix, vec):
    return [sum((a * b for a, b in zip(row, vec)), Fraction(0)) for row in matrix]


def poly_det(matrix: Sequence[Sequence[Poly]]) -> Poly:
    """Determinant of a square matrix of Polys by memoized Laplace expansion."""
    n = len(matrix)
    if n == 0:
        raise ValueError("empty matrix")
    nvars = matrix[0][0].nvars
    memo: dict[tuple[int, frozenset], Poly] = {}

    def minor(row: int, cols: frozenset) -> Poly:
        if row == n:
            return Poly.constant(nvars, 1)
        key = (row, cols)
        if key in memo:
            return memo[key]
        total = Poly.zero(nvars)
        sign = 1
        for col in sorted(cols):
            entry = matrix[row][col]
            if entry:
                sub = minor(row + 1, cols - {col})
                if sub:
                    total = total + entry * sub if sign > 0 else total - entry * sub
            sign = -sign
        memo[key] = total
        return total

    return minor(0, frozenset(range(n)))
