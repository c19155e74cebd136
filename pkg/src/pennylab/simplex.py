"""Exact rational linear programming and linear algebra.

Dense tableau simplex over `fractions.Fraction` with Bland's anti-cycling
rule.  Problem sizes here are tiny (at most 17x17), so exactness wins over
speed: the duality gap of every zero-sum solve is a true rational zero.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

from .errors import InternalInvariantError


def _pivot_to_optimum(T, basis, cost):
    """Run simplex pivots in place until no reduced cost is positive.

    `T` is the constraint tableau (rows end with the rhs), `basis[i]` the
    column of the variable basic in row i, `cost` the reduced-cost row whose
    last entry is minus the current objective.  Bland's rule: entering
    variable of smallest index, leaving row breaking ratio ties by smallest
    basic variable index.
    """
    m = len(T)
    ncols = len(cost) - 1
    while True:
        enter = next((j for j in range(ncols) if cost[j] > 0), None)
        if enter is None:
            return
        leave = None
        best = None
        for i in range(m):
            if T[i][enter] > 0:
                ratio = T[i][-1] / T[i][enter]
                if best is None or ratio < best or (
                        ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            raise InternalInvariantError("LP unbounded; the game LPs never are")
        piv = T[leave][enter]
        T[leave] = [v / piv for v in T[leave]]
        for i in range(m):
            if i != leave and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [a - f * b for a, b in zip(T[i], T[leave])]
        if cost[enter] != 0:
            f = cost[enter]
            cost[:] = [a - f * b for a, b in zip(cost, T[leave])]
        basis[leave] = enter


def simplex_max(c, A, b) -> tuple[Fraction, list[Fraction]]:
    """Maximize c.x subject to A x <= b, x >= 0; requires b >= 0.

    The nonnegative rhs makes the all-slack basis feasible, so no phase 1
    is needed.  Returns (optimal value, optimal x).
    """
    m, n = len(A), len(c)
    T = []
    for i in range(m):
        rhs = Fraction(b[i])
        if rhs < 0:
            raise InternalInvariantError("slack start needs b >= 0")
        row = [Fraction(v) for v in A[i]]
        row += [Fraction(int(i == k)) for k in range(m)]
        row.append(rhs)
        T.append(row)
    basis = [n + i for i in range(m)]
    cost = [Fraction(v) for v in c] + [Fraction(0)] * (m + 1)
    _pivot_to_optimum(T, basis, cost)
    x = [Fraction(0)] * n
    for i, bv in enumerate(basis):
        if bv < n:
            x[bv] = T[i][-1]
    return -cost[-1], x


def solve_feasible_eq(A, b):
    """A nonnegative basic solution of A x = b, x >= 0, or None.

    Phase-1 simplex: start from an all-artificial basis and drive the sum
    of artificials to zero.  The returned x is a vertex of the feasible set.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    T = []
    for i in range(m):
        row = [Fraction(v) for v in A[i]]
        rhs = Fraction(b[i])
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
        row += [Fraction(int(i == k)) for k in range(m)]
        row.append(rhs)
        T.append(row)
    basis = [n + i for i in range(m)]
    # price out the artificial basis: reduced cost of x_j is sum_i A'[i][j]
    cost = [sum(T[i][j] for i in range(m)) for j in range(n)]
    cost += [Fraction(0)] * m
    cost.append(sum(T[i][-1] for i in range(m)))
    _pivot_to_optimum(T, basis, cost)
    if -cost[-1] != 0:
        return None
    x = [Fraction(0)] * n
    for i, bv in enumerate(basis):
        if bv < n:
            x[bv] = T[i][-1]
    return x


def solve_linear(A, b):
    """Exact solution of a square system A x = b, or None if singular."""
    n = len(A)
    M = [[Fraction(A[i][j]) for j in range(n)] + [Fraction(b[i])]
         for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        head = M[col][col]
        M[col] = [v / head for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b2 for a, b2 in zip(M[r], M[col])]
    return [M[i][-1] for i in range(n)]


def common_denominator(values) -> int:
    """Least common denominator of a collection of Fractions."""
    return lcm(*(Fraction(v).denominator for v in values)) if values else 1
