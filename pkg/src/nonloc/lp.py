"""Primal simplex for packing LPs ``max c.w  s.t.  A w <= b, w >= 0`` with ``b >= 0``.

Every decomposition problem in this package has that shape (vertex columns,
table rows), so the slack basis is always feasible and no phase one is needed.

Rational mode runs a fraction-free (integer-preserving) tableau: every entry is
an integer and the true value is ``entry / D`` with ``D`` the determinant of
the current basis, so each pivot is exact integer arithmetic.  Pricing is
Dantzig's rule; any degenerate pivot switches to Bland's rule until the
objective next moves, which rules out cycling.

Float mode is a revised simplex with partial pricing over column blocks and
the same Bland fallback on degenerate pivots.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence

import numpy as np

from .errors import NonlocError

MAX_PIVOTS = 100_000


@dataclass
class LPSolution:
    status: str  # "optimal" | "unbounded"
    value: object
    x: list
    y: list
    basis: list[int]
    pivots: int
    mode: str


class LPError(NonlocError):
    pass


def solve_packing(columns: Sequence[Sequence], b: Sequence, c: Sequence | None = None, mode: str = "rational",
                  eps: float = 1e-9) -> LPSolution:
    """Maximize ``c.w`` over ``sum_j w_j columns[j] <= b``, ``w >= 0``.

    ``c`` defaults to all ones.  Returns primal weights ``x`` (one per column)
    and dual prices ``y`` (one per row) with ``y >= 0`` and
    ``y . columns[j] >= c_j`` at optimality.
    """
    n = len(columns)
    m = len(b)
    if c is None:
        c = [1] * n
    if any(len(col) != m for col in columns):
        raise LPError("column length does not match the right-hand side")
    if mode == "rational":
        return _exact(columns, b, c)
    if mode == "float":
        return _revised(columns, b, c, eps)
    raise LPError(f"unknown LP mode {mode!r}")


# --------------------------------------------------------------------------- exact


def _exact(columns, b, c) -> LPSolution:
    n, m = len(columns), len(b)
    b = [Fraction(v) for v in b]
    if any(v < 0 for v in b):
        raise LPError("right-hand side must be nonnegative")
    cols = [[Fraction(v) for v in col] for col in columns]
    cf = [Fraction(v) for v in c]
    # Scale each row (and the objective) to integers; slack i then carries weight 1/L_i.
    L = [lcm(b[i].denominator, *(cols[j][i].denominator for j in range(n))) for i in range(m)]
    lc = lcm(*(v.denominator for v in cf)) if cf else 1
    T = np.zeros((m + 1, n + m + 1), dtype=object)
    T[...] = 0
    for i in range(m):
        for j in range(n):
            if cols[j][i]:
                T[i, j] = int(cols[j][i] * L[i])
        T[i, n + i] = 1
        T[i, -1] = int(b[i] * L[i])
    for j in range(n):
        T[m, j] = -int(cf[j] * lc)
    D = 1
    basis = list(range(n, n + m))
    bland = False
    pivots = 0
    while True:
        obj = T[m, :-1]
        if bland:
            neg = [j for j in range(n + m) if obj[j] < 0]
            enter = neg[0] if neg else None
        else:
            j = min(range(n + m), key=lambda k: (obj[k], k))
            enter = j if obj[j] < 0 else None
        if enter is None:
            break
        best = None
        for i in range(m):
            a = T[i, enter]
            if a > 0:
                ratio = Fraction(T[i, -1], a)
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return LPSolution("unbounded", None, [], [], basis, pivots, "rational")
        r = best[1]
        bland = best[0][0] == 0
        piv = T[r, enter]
        new = (T * piv - np.multiply.outer(T[:, enter], T[r])) // D
        new[r] = T[r]
        T, D = new, piv
        basis[r] = enter
        pivots += 1
        if pivots > MAX_PIVOTS:
            raise LPError("pivot limit reached")
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = Fraction(T[i, -1], D)
    y = [Fraction(T[m, n + i], D * lc) * L[i] for i in range(m)]
    value = Fraction(T[m, -1], D * lc)
    return LPSolution("optimal", value, x, y, basis, pivots, "rational")


# --------------------------------------------------------------------------- float


def _revised(columns, b, c, eps: float) -> LPSolution:
    A = np.array([[float(v) for v in col] for col in columns], dtype=float).T.reshape(len(b), len(columns))
    m, n = A.shape
    bb = np.array([float(v) for v in b])
    if np.any(bb < -eps):
        raise LPError("right-hand side must be nonnegative")
    bb = np.clip(bb, 0.0, None)
    full = np.hstack([A, np.eye(m)])
    cost = np.concatenate([np.array([float(v) for v in c]), np.zeros(m)])
    basis = list(range(n, n + m))
    is_basic = np.zeros(n + m, dtype=bool)
    is_basic[basis] = True
    block = max(32, (n + m) // 8)
    start = 0
    bland = False
    pivots = 0
    while True:
        B = full[:, basis]
        xb = np.linalg.solve(B, bb)
        y = np.linalg.solve(B.T, cost[basis])
        enter = None
        if bland:
            d = cost - y @ full
            d[is_basic] = 0.0
            hits = np.nonzero(d > eps)[0]
            enter = int(hits[0]) if len(hits) else None
        else:
            for k in range(0, n + m, block):
                lo = (start + k) % (n + m)
                idx = np.arange(lo, min(lo + block, n + m))
                d = cost[idx] - y @ full[:, idx]
                d[is_basic[idx]] = 0.0
                if d.size and d.max() > eps:
                    enter = int(idx[int(np.argmax(d))])
                    start = lo
                    break
        if enter is None:
            break
        u = np.linalg.solve(B, full[:, enter])
        rows = np.nonzero(u > eps)[0]
        if not len(rows):
            return LPSolution("unbounded", None, [], [], basis, pivots, "float")
        ratios = np.maximum(xb[rows], 0.0) / u[rows]
        tmin = ratios.min()
        ties = rows[ratios <= tmin + 1e-12]
        r = int(min(ties, key=lambda i: basis[i]))
        bland = tmin <= eps
        is_basic[basis[r]] = False
        basis[r] = enter
        is_basic[enter] = True
        pivots += 1
        if pivots > MAX_PIVOTS:
            raise LPError("pivot limit reached")
    x = [0.0] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = float(max(xb[i], 0.0))
    return LPSolution("optimal", float(cost[basis] @ xb), x, [float(v) for v in y], basis, pivots, "float")
