"""Dense two-phase tableau simplex over exact rationals.

Solves ``min c.x`` subject to ``A x <= b`` and ``x >= 0``.  Bland's rule
guarantees termination on degenerate problems.  Intended for LPs with a few
hundred rows; it is an independent check on the floating-point solver, not a
replacement for it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass
class ExactLPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    objective: Optional[Fraction]
    x: Optional[list[Fraction]]
    pivots: int


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], basis: list[int]):
        self.rows = rows  # each row: coefficients then rhs
        self.basis = basis
        self.pivots = 0

    def pivot(self, r: int, c: int) -> None:
        row = self.rows[r]
        inv = ONE / row[c]
        if inv != 1:
            self.rows[r] = row = [v * inv if v else v for v in row]
        nz = [j for j, v in enumerate(row) if v]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[c]
            if f:
                for j in nz:
                    other[j] -= f * row[j]
        self.basis[r] = c
        self.pivots += 1

    def optimise(self, cost: list[Fraction], allowed: int, max_pivots: int) -> str:
        """Minimise ``cost`` over columns ``< allowed`` from the current basis."""
        m = len(self.rows)
        while True:
            if self.pivots > max_pivots:
                raise RuntimeError(f"exact simplex exceeded {max_pivots} pivots")
            # reduced costs
            red = list(cost[:allowed])
            for i in range(m):
                cb = cost[self.basis[i]]
                if cb:
                    row = self.rows[i]
                    for j in range(allowed):
                        v = row[j]
                        if v:
                            red[j] -= cb * v
            entering = next((j for j in range(allowed) if red[j] < 0), None)
            if entering is None:
                return "optimal"
            best_ratio, leave = None, None
            for i in range(m):
                a = self.rows[i][entering]
                if a > 0:
                    ratio = self.rows[i][-1] / a
                    if best_ratio is None or ratio < best_ratio or (
                        ratio == best_ratio and self.basis[i] < self.basis[leave]
                    ):
                        best_ratio, leave = ratio, i
            if leave is None:
                return "unbounded"
            self.pivot(leave, entering)


def solve_exact_lp(
    c: Sequence, A: Sequence[Sequence], b: Sequence, max_pivots: int = 200_000
) -> ExactLPResult:
    """Exact optimum of ``min c.x`` s.t. ``A x <= b``, ``x >= 0``."""
    c = [Fraction(v) for v in c]
    n = len(c)
    m = len(A)
    # columns: x (n), slack (m), artificial (one per negative-rhs row)
    neg = [i for i in range(m) if Fraction(b[i]) < 0]
    n_art = len(neg)
    width = n + m + n_art
    rows: list[list[Fraction]] = []
    basis: list[int] = []
    art_col = {}
    for t, i in enumerate(neg):
        art_col[i] = n + m + t
    for i in range(m):
        row = [Fraction(v) for v in A[i]] + [ZERO] * (m + n_art) + [Fraction(b[i])]
        row[n + i] = ONE
        if i in art_col:
            row = [-v for v in row]  # now slack has coefficient -1 and rhs > 0
            row[art_col[i]] = ONE
            basis.append(art_col[i])
        else:
            basis.append(n + i)
        rows.append(row)
    tab = _Tableau(rows, basis)
    if n_art:
        phase1 = [ZERO] * (n + m) + [ONE] * n_art
        tab.optimise(phase1, width, max_pivots)
        infeas = sum((tab.rows[i][-1] for i in range(m) if tab.basis[i] >= n + m), ZERO)
        if infeas > 0:
            return ExactLPResult("infeasible", None, None, tab.pivots)
        # drive remaining artificials out of the basis
        for i in range(m):
            if tab.basis[i] >= n + m:
                col = next((j for j in range(n + m) if tab.rows[i][j] != 0), None)
                if col is not None:
                    tab.pivot(i, col)
    cost = c + [ZERO] * (m + n_art)
    status = tab.optimise(cost, n + m, max_pivots)
    if status != "optimal":
        return ExactLPResult(status, None, None, tab.pivots)
    x = [ZERO] * n
    for i, col in enumerate(tab.basis):
        if col < n:
            x[col] = tab.rows[i][-1]
    obj = sum((ci * xi for ci, xi in zip(c, x)), ZERO)
    return ExactLPResult("optimal", obj, x, tab.pivots)
