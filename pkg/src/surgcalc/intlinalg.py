"""Exact integer and rational matrix algebra.

Matrices are plain lists of rows. Integer matrices hold Python ints,
rational matrices hold :class:`fractions.Fraction`. Nothing here touches
floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import List, Sequence

IntMatrix = List[List[int]]
RatMatrix = List[List[Fraction]]


class SingularMatrix(ValueError):
    """Raised when a square matrix has zero determinant."""


def identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def shape(m: Sequence[Sequence]) -> tuple[int, int]:
    rows = len(m)
    cols = len(m[0]) if rows else 0
    for row in m:
        if len(row) != cols:
            raise ValueError("ragged matrix")
    return rows, cols


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list:
    n, k = shape(a)
    k2, m = shape(b)
    if k != k2:
        raise ValueError(f"shape mismatch {n}x{k} @ {k2}x{m}")
    bt = list(zip(*b)) if m else []
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def transpose(a: Sequence[Sequence]) -> list:
    return [list(col) for col in zip(*a)]


def to_rational(a: Sequence[Sequence]) -> RatMatrix:
    return [[Fraction(x) for x in row] for row in a]


@dataclass(frozen=True)
class SnfResult:
    """``U @ M @ V == D`` with U, V unimodular and D in Smith normal form."""

    U: IntMatrix
    D: IntMatrix
    V: IntMatrix
    U_inv: IntMatrix = None  # inverse of U, tracked alongside the row operations

    @property
    def diagonal(self) -> list[int]:
        return [self.D[i][i] for i in range(min(shape(self.D)))]


def smith_normal_form(m: Sequence[Sequence[int]]) -> SnfResult:
    """Smith normal form with transformation matrices.

    Pivots are the smallest nonzero absolute value in the remaining
    submatrix, ties broken by lowest (row, col). Diagonal entries come out
    non-negative with d_1 | d_2 | ...

    >>> smith_normal_form([[3, 0, 1], [0, 3, 2], [1, 1, 2]]).diagonal
    [1, 1, 9]
    """
    a = [[int(x) for x in row] for row in m]
    rows, cols = shape(a)
    u = identity(rows)
    u_inv = identity(rows)
    v = identity(cols)

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]
        for row in u_inv:
            row[i], row[j] = row[j], row[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, f):
        # row_dst += f * row_src
        if f:
            a[dst] = [x + f * y for x, y in zip(a[dst], a[src])]
            u[dst] = [x + f * y for x, y in zip(u[dst], u[src])]
            # (I + f e_dst e_src^T)^-1 = I - f e_dst e_src^T acts on columns of U^-1
            for row in u_inv:
                row[src] -= f * row[dst]

    def add_col(dst, src, f):
        if f:
            for row in a:
                row[dst] += f * row[src]
            for row in v:
                row[dst] += f * row[src]

    for t in range(min(rows, cols)):
        while True:
            best = None
            for i in range(t, rows):
                for j in range(t, cols):
                    x = abs(a[i][j])
                    if x and (best is None or x < best[0]):
                        best = (x, i, j)
            if best is None:
                return _finish(a, u, v, u_inv)
            _, i, j = best
            swap_rows(t, i)
            swap_cols(t, j)
            piv = a[t][t]
            for i in range(t + 1, rows):
                add_row(i, t, -(a[i][t] // piv))
            for j in range(t + 1, cols):
                add_col(j, t, -(a[t][j] // piv))
            if any(a[i][t] for i in range(t + 1, rows)) or any(
                a[t][j] for j in range(t + 1, cols)
            ):
                continue
            bad = next(
                (
                    i
                    for i in range(t + 1, rows)
                    for j in range(t + 1, cols)
                    if a[i][j] % piv
                ),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]
            for row in u_inv:
                row[t] = -row[t]
    return _finish(a, u, v, u_inv)


def _finish(a, u, v, u_inv) -> SnfResult:
    return SnfResult(U=u, D=a, V=v, U_inv=u_inv)


def invariant_factors(m: Sequence[Sequence[int]]) -> list[int]:
    """Nonzero elementary divisors of ``m`` (ones included)."""
    return [d for d in smith_normal_form(m).diagonal if d]


def determinant(a: Sequence[Sequence]) -> Fraction:
    """Exact determinant by Bareiss elimination on a denominator-cleared copy."""
    n, k = shape(a)
    if n != k:
        raise ValueError("determinant of a non-square matrix")
    if n == 0:
        return Fraction(1)
    rat = to_rational(a)
    scale = Fraction(1)
    work = []
    for row in rat:
        den = 1
        for x in row:
            den = den * x.denominator // gcd(den, x.denominator)
        scale /= den
        work.append([int(x * den) for x in row])
    sign = 1
    prev = 1
    for t in range(n - 1):
        if work[t][t] == 0:
            swap = next((i for i in range(t + 1, n) if work[i][t]), None)
            if swap is None:
                return Fraction(0)
            work[t], work[swap] = work[swap], work[t]
            sign = -sign
        piv = work[t][t]
        for i in range(t + 1, n):
            for j in range(t + 1, n):
                work[i][j] = (work[i][j] * piv - work[i][t] * work[t][j]) // prev
            work[i][t] = 0
        prev = piv
    return sign * scale * work[n - 1][n - 1]


def rational_inverse(a: Sequence[Sequence]) -> RatMatrix:
    """Exact inverse by fraction-free Gauss-Jordan.

    Each row of ``[A | I]`` is scaled to integers; eliminations are integer
    row combinations kept small by dividing out the row content, and the
    only divisions happen at the end.
    """
    n, k = shape(a)
    if n != k:
        raise ValueError("inverse of a non-square matrix")
    work = []
    for i, row in enumerate(to_rational(a)):
        den = 1
        for x in row:
            den = den * x.denominator // gcd(den, x.denominator)
        work.append([int(x * den) for x in row] + [den if j == i else 0 for j in range(n)])
    for t in range(n):
        piv = next((i for i in range(t, n) if work[i][t]), None)
        if piv is None:
            raise SingularMatrix("matrix is singular")
        work[t], work[piv] = work[piv], work[t]
        pivot_row = work[t]
        p = pivot_row[t]
        for i in range(n):
            f = work[i][t]
            if i == t or not f:
                continue
            g = gcd(p, f)
            pa, fa = p // g, f // g
            row = [pa * x - fa * y for x, y in zip(work[i], pivot_row)]
            c = gcd(*row)
            work[i] = [x // c for x in row] if c > 1 else row
    return [[Fraction(x, work[i][i]) for x in work[i][n:]] for i in range(n)]
