"""Small dense two-phase simplex for the region LPs.

The region problems are tiny (at most N+1 rows and ~2^N columns with
N <= 16), so a plain tableau simplex with Bland's rule is plenty and
avoids an external solver dependency.  Maximization over x >= 0 with
equality and >=-inequality rows; dual values are recovered from the
final basis for membership certificates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

_TOL = 1e-10


class LpError(RuntimeError):
    pass


@dataclass(frozen=True)
class LpResult:
    x: np.ndarray
    value: float
    #: dual multipliers of the equality rows
    dual_eq: np.ndarray
    #: dual multipliers of the >= rows (nonpositive at a maximum)
    dual_ge: np.ndarray


def solve_lp(
    c: np.ndarray,
    a_eq: Optional[np.ndarray] = None,
    b_eq: Optional[np.ndarray] = None,
    a_ge: Optional[np.ndarray] = None,
    b_ge: Optional[np.ndarray] = None,
) -> LpResult:
    """Maximize c @ x subject to a_eq @ x = b_eq, a_ge @ x >= b_ge, x >= 0."""
    c = np.asarray(c, dtype=float)
    nvar = c.shape[0]
    rows = []
    rhs = []
    kinds = []  # 'eq' or 'ge', in row order
    if a_eq is not None:
        a_eq = np.atleast_2d(np.asarray(a_eq, dtype=float))
        for i in range(a_eq.shape[0]):
            rows.append(a_eq[i])
            rhs.append(float(np.asarray(b_eq, dtype=float).ravel()[i]))
            kinds.append("eq")
    if a_ge is not None:
        a_ge = np.atleast_2d(np.asarray(a_ge, dtype=float))
        for i in range(a_ge.shape[0]):
            rows.append(a_ge[i])
            rhs.append(float(np.asarray(b_ge, dtype=float).ravel()[i]))
            kinds.append("ge")
    m = len(rows)
    if m == 0:
        raise LpError("no constraints")

    n_ge = sum(1 for k in kinds if k == "ge")
    # columns: [structural | surplus (one per ge row) | artificial (one per row)]
    ncols = nvar + n_ge + m
    a = np.zeros((m, ncols))
    b = np.zeros(m)
    surplus_col = {}
    si = nvar
    for i, (row, k) in enumerate(zip(rows, kinds)):
        a[i, :nvar] = row
        b[i] = rhs[i]
        if k == "ge":
            a[i, si] = -1.0
            surplus_col[i] = si
            si += 1
    # flip rows to make b nonnegative (surplus signs flip with them)
    for i in range(m):
        if b[i] < 0:
            a[i, : nvar + n_ge] *= -1.0
            b[i] = -b[i]
    art0 = nvar + n_ge
    for i in range(m):
        a[i, art0 + i] = 1.0

    basis = [art0 + i for i in range(m)]
    tableau = np.hstack([a, b[:, None]])

    def _pivot(t: np.ndarray, obj: np.ndarray, allowed: int) -> bool:
        """One Bland pivot; returns False at optimality."""
        enter = -1
        for j in range(allowed):
            if obj[j] > _TOL:
                enter = j
                break
        if enter < 0:
            return False
        col = t[:, enter]
        best = None
        leave = -1
        for i in range(m):
            if col[i] > _TOL:
                ratio = t[i, -1] / col[i]
                if (
                    best is None
                    or ratio < best - _TOL
                    or (abs(ratio - best) <= _TOL and basis[i] < basis[leave])
                ):
                    best = ratio
                    leave = i
        if leave < 0:
            raise LpError("unbounded linear program")
        piv = t[leave, enter]
        t[leave] /= piv
        for i in range(m):
            if i != leave and abs(t[i, enter]) > 0:
                t[i] -= t[i, enter] * t[leave]
        obj -= obj[enter] * t[leave, :-1]
        basis[leave] = enter
        return True

    # phase 1: maximize -(sum of artificials); basis starts all-artificial,
    # so the reduced cost of column j is the column sum of A
    red = np.sum(tableau[:, :-1], axis=0)
    red[art0:] = 0.0
    while _pivot(tableau, red, art0):
        pass
    infeas = sum(tableau[i, -1] for i in range(m) if basis[i] >= art0)
    if infeas > 1e-8:
        raise LpError("infeasible linear program")
    # pivot any residual artificials out of the basis (degenerate rows)
    for i in range(m):
        if basis[i] >= art0:
            for j in range(art0):
                if abs(tableau[i, j]) > _TOL:
                    piv = tableau[i, j]
                    tableau[i] /= piv
                    for ii in range(m):
                        if ii != i and abs(tableau[ii, j]) > 0:
                            tableau[ii] -= tableau[ii, j] * tableau[i]
                    basis[i] = j
                    break

    # phase 2
    cfull = np.zeros(ncols)
    cfull[:nvar] = c
    red = cfull.copy()
    for i in range(m):
        if cfull[basis[i]] != 0.0:
            red -= cfull[basis[i]] * tableau[i, :-1]
    red[art0:] = -np.inf  # artificials locked out
    while _pivot(tableau, red, art0):
        pass

    x = np.zeros(ncols)
    for i in range(m):
        x[basis[i]] = tableau[i, -1]
    value = float(c @ x[:nvar])

    # duals: y = c_B B^{-1}, recovered from the original columns
    bmat = np.empty((m, m))
    cb = np.empty(m)
    a_orig = np.hstack([a[:, :art0], np.eye(m)])
    for i, bi in enumerate(basis):
        bmat[:, i] = a_orig[:, bi]
        cb[i] = cfull[bi]
    y = np.linalg.solve(bmat.T, cb)
    # row flips for negative rhs changed the sign of y for those rows
    for i in range(m):
        if rhs[i] < 0:
            y[i] = -y[i]
    dual_eq = np.array([y[i] for i in range(m) if kinds[i] == "eq"])
    dual_ge = np.array([y[i] for i in range(m) if kinds[i] == "ge"])
    return LpResult(x=x[:nvar], value=value, dual_eq=dual_eq, dual_ge=dual_ge)
