"""Dense two-phase simplex for the small LPs the equilibrium solvers build.

Problems here have a handful of variables (two per road), so a full
tableau with Bland's anti-cycling rule is plenty.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NumericalError

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9


@dataclass
class LinearProgram:
    """maximize ``c @ x`` s.t. ``A_eq x = b_eq``, ``A_ub x <= b_ub``, ``x >= lb``."""

    c: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_eq, self.b_eq = _block(self.A_eq, self.b_eq, n, "equality")
        self.A_ub, self.b_ub = _block(self.A_ub, self.b_ub, n, "inequality")
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        if self.lb.size != n:
            raise ValueError("lower bounds do not match the number of variables")
        for arr in (self.c, self.A_eq, self.b_eq, self.A_ub, self.b_ub, self.lb):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP coefficients must be finite")

    @property
    def n_vars(self):
        return self.c.size

    @property
    def n_constraints(self):
        return len(self.b_eq) + len(self.b_ub)


def _block(A, b, n, what):
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape != (b.size, n):
        raise ValueError(f"{what} block has shape {A.shape}, expected ({b.size}, {n})")
    return A, b


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    iterations: int = 0

    @property
    def optimal(self):
        return self.status == "optimal"


class _Tableau:
    def __init__(self, T, basis, cap):
        self.T = T
        self.basis = basis
        self.cap = cap
        self.iterations = 0

    def pivot(self, row, col):
        T = self.T
        T[row] /= T[row, col]
        col_vals = T[:, col].copy()
        col_vals[row] = 0.0
        T -= np.outer(col_vals, T[row])
        self.basis[row] = col

    def set_objective(self, cost):
        """Load the reduced-cost row for ``maximize cost @ x`` under the current basis."""
        T = self.T
        T[-1] = 0.0
        T[-1, :cost.size] = -cost
        for i, j in enumerate(self.basis):
            if cost[j] != 0:
                T[-1] += cost[j] * T[i]

    def run(self, allowed):
        """Bland's rule iterations; returns False when the LP is unbounded."""
        T = self.T
        m = T.shape[0] - 1
        while True:
            reduced = T[-1, allowed]
            cand = np.flatnonzero(reduced < -PIVOT_TOL * 10)
            if cand.size == 0:
                return True
            col = allowed[cand[0]]
            column = T[:m, col]
            rows = np.flatnonzero(column > PIVOT_TOL)
            if rows.size == 0:
                return False
            ratios = T[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            row = min(ties, key=lambda r: self.basis[r])
            self.pivot(row, col)
            self.iterations += 1
            if self.iterations > self.cap:
                raise NumericalError(
                    f"simplex exceeded {self.cap} iterations")


def solve_lp(lp: LinearProgram) -> LPResult:
    """Solve ``lp`` with the two-phase simplex method and Bland's pivoting rule.

    Raises NumericalError if pivoting exceeds ``50 * (vars + constraints)``
    iterations.
    """
    n = lp.n_vars
    # shift so every variable is bounded below by zero
    b_eq = lp.b_eq - lp.A_eq @ lp.lb
    b_ub = lp.b_ub - lp.A_ub @ lp.lb
    A_eq, A_ub = lp.A_eq.copy(), lp.A_ub.copy()

    # row scaling keeps the pivot tolerances meaningful
    for A, b in ((A_eq, b_eq), (A_ub, b_ub)):
        for i in range(len(b)):
            s = np.abs(A[i]).max(initial=0.0)
            if s > 0:
                A[i] /= s
                b[i] /= s

    m_eq, m_ub = len(b_eq), len(b_ub)
    m = m_eq + m_ub
    cap = 50 * (n + m)
    if m == 0:
        if np.any(lp.c > 0):
            return LPResult("unbounded")
        return LPResult("optimal", lp.lb.copy(), float(lp.c @ lp.lb))

    # columns: structural | slacks | artificials | rhs
    needs_art = [True] * m_eq + [bool(b < 0) for b in b_ub]
    n_art = sum(needs_art)
    ncols = n + m_ub + n_art
    T = np.zeros((m + 1, ncols + 1))
    basis = [0] * m
    art = n + m_ub
    for i in range(m_eq):
        sign = -1.0 if b_eq[i] < 0 else 1.0
        T[i, :n] = sign * A_eq[i]
        T[i, -1] = sign * b_eq[i]
    for k in range(m_ub):
        i = m_eq + k
        sign = -1.0 if b_ub[k] < 0 else 1.0
        T[i, :n] = sign * A_ub[k]
        T[i, n + k] = sign
        T[i, -1] = sign * b_ub[k]
    for i in range(m):
        if needs_art[i]:
            T[i, art] = 1.0
            basis[i] = art
            art += 1
        else:
            basis[i] = n + (i - m_eq)

    tab = _Tableau(T, basis, cap)
    if n_art:
        phase1 = np.zeros(ncols)
        phase1[n + m_ub:] = -1.0
        tab.set_objective(phase1)
        tab.run(np.arange(ncols))
        infeas = -tab.T[-1, -1]
        if infeas > FEAS_TOL * max(1.0, np.abs(tab.T[:m, -1]).max()):
            return LPResult("infeasible", iterations=tab.iterations)
        _drive_out_artificials(tab, n + m_ub)
        keep = list(range(n + m_ub)) + [ncols]
        tab.T = tab.T[:, keep]
        ncols = n + m_ub

    cost = np.zeros(ncols)
    cost[:n] = lp.c
    tab.set_objective(cost)
    if not tab.run(np.arange(ncols)):
        return LPResult("unbounded", iterations=tab.iterations)

    xs = np.zeros(ncols)
    for i, j in enumerate(tab.basis):
        xs[j] = tab.T[i, -1]
    x = xs[:n] + lp.lb
    return LPResult("optimal", x, float(lp.c @ x), tab.iterations)


def _drive_out_artificials(tab, n_real):
    """Pivot zero-valued artificials out of the basis, dropping redundant rows."""
    T = tab.T
    m = T.shape[0] - 1
    drop = []
    for i in range(m):
        if tab.basis[i] < n_real:
            continue
        row = T[i, :n_real]
        cols = np.flatnonzero(np.abs(row) > 1e-9)
        if cols.size == 0:
            drop.append(i)
        else:
            tab.pivot(i, cols[0])
    if drop:
        keep = [i for i in range(m) if i not in drop] + [m]
        tab.T = T[keep]
        tab.basis = [b for i, b in enumerate(tab.basis) if i not in drop]


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None) -> LPResult:
    """Convenience wrapper: build a :class:`LinearProgram` and solve it."""
    return solve_lp(LinearProgram(c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub, lb=lb))
