"""Independent reference computations used as ground truth by the tests."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def _solve_square(M, rhs):
    """Gaussian elimination over Fractions; None when singular."""
    n = len(M)
    A = [list(row) + [r] for row, r in zip(M, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            return None
        A[col], A[piv] = A[piv], A[col]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col] / A[col][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return [A[i][n] / A[i][i] for i in range(n)]


def rational_lp_max(c, rows, ub):
    """Maximize ``c.x`` over ``{a.x <= b for (a, b) in rows, 0 <= x <= ub}`` exactly.

    Enumerates every vertex of the (bounded) polytope. Returns the optimum as
    a Fraction, or None when infeasible.
    """
    n = len(c)
    c = [Fraction(v) for v in c]
    cons = [([Fraction(a) for a in row], Fraction(b)) for row, b in rows]
    for j in range(n):
        e = [Fraction(0)] * n
        e[j] = Fraction(-1)
        cons.append((e, Fraction(0)))
        e = [Fraction(0)] * n
        e[j] = Fraction(1)
        cons.append((e, Fraction(ub[j])))
    best = None
    for active in itertools.combinations(range(len(cons)), n):
        x = _solve_square([cons[i][0] for i in active], [cons[i][1] for i in active])
        if x is None:
            continue
        if all(sum(a * v for a, v in zip(row, x)) <= b for row, b in cons):
            val = sum(a * v for a, v in zip(c, x))
            if best is None or val > best:
                best = val
    return best


def knapsack_enumeration(values, weights, capacity):
    best = 0
    for pick in itertools.product((0, 1), repeat=len(values)):
        if sum(w * p for w, p in zip(weights, pick)) <= capacity:
            best = max(best, sum(v * p for v, p in zip(values, pick)))
    return best


def sos2_supports(n):
    """All supports allowed by an SOS2 condition on ``n`` members."""
    out = [()]
    out += [(k,) for k in range(n)]
    out += [(k, k + 1) for k in range(n - 1)]
    return out


def log_secant_error(a, b, alpha=1.0):
    """Largest gap between ``alpha * ln`` and its chord on ``[a, b]`` (a > 0).

    The chord slope is ``m = (ln b - ln a)/(b - a)``; the gap is maximal where
    ``1/x = m``.
    """
    if b <= a:
        return 0.0
    m = (math.log(b) - math.log(a)) / (b - a)
    x = 1.0 / m
    return alpha * (math.log(x) - (math.log(a) + m * (x - a)))


def segment_of(grid, value):
    """Index ``n`` with ``grid[n] <= value <= grid[n + 1]`` (clamped)."""
    for n in range(len(grid) - 1):
        if value <= grid[n + 1]:
            return n
    return len(grid) - 2
