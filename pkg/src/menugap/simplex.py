"""Dense-tableau primal simplex over exact rationals.

Solves ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0`` (the slack basis is
then feasible, so no phase one is needed).  Rows may be given as dense lists
or as ``{column: value}`` dicts; the tableau is stored sparsely because the
epigraph LPs used here are mostly zeros.  Arithmetic runs on ``gmpy2.mpq``
and results come back as :class:`fractions.Fraction`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import gmpy2

mpq = gmpy2.mpq

# consecutive degenerate pivots tolerated before switching to Bland's rule
DEGENERATE_STREAK = 50


class LPError(ValueError):
    pass


@dataclass
class LPResult:
    status: str  # "optimal" | "unbounded"
    objective: Optional[Fraction]
    x: list
    duals: list = field(default_factory=list)
    pivots: int = 0


def _to_q(v):
    if isinstance(v, Fraction):
        return mpq(v.numerator, v.denominator)
    if isinstance(v, float):
        return mpq(*v.as_integer_ratio())
    return mpq(v)


def _to_fraction(v) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))


def _sparse(row, n: int) -> dict:
    items = row.items() if isinstance(row, dict) else enumerate(row)
    out = {}
    for j, v in items:
        if not 0 <= j < n:
            raise LPError(f"column {j} out of range")
        q = _to_q(v)
        if q != 0:
            out[j] = q
    return out


def maximize(c: Sequence, A: Sequence, b: Sequence, max_pivots: int = 200_000) -> LPResult:
    n, m = len(c), len(A)
    if len(b) != m:
        raise LPError("A and b disagree on the number of rows")
    rhs = [_to_q(v) for v in b]
    if any(v < 0 for v in rhs):
        raise LPError("this solver needs b >= 0 (slack basis must be feasible)")
    rows = []
    for r, row in enumerate(A):
        sp = _sparse(row, n)
        sp[n + r] = mpq(1)
        rows.append(sp)
    basis = [n + r for r in range(m)]
    # reduced costs c_j - z_j; slacks start at 0
    red = {j: v for j, v in _sparse(c, n).items()}
    pivots, streak, bland = 0, 0, False

    while True:
        positive = [j for j, v in red.items() if v > 0]
        if not positive:
            break
        if bland:
            enter = min(positive)
        else:
            enter = max(positive, key=lambda j: (red[j], -j))
        leave, best = None, None
        for r in range(m):
            a = rows[r].get(enter)
            if a is not None and a > 0:
                ratio = rhs[r] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    best, leave = ratio, r
        if leave is None:
            return LPResult("unbounded", None, [], [], pivots)
        streak = streak + 1 if best == 0 else 0
        if streak >= DEGENERATE_STREAK:
            bland = True
        _pivot(rows, rhs, red, leave, enter)
        basis[leave] = enter
        pivots += 1
        if pivots > max_pivots:
            raise LPError("pivot limit exceeded")

    x = [mpq(0)] * (n + m)
    for r, var in enumerate(basis):
        x[var] = rhs[r]
    cq = _sparse(c, n)
    objective = sum((cq[j] * x[j] for j in cq), mpq(0))
    duals = [-red.get(n + r, mpq(0)) for r in range(m)]
    return LPResult(
        "optimal",
        _to_fraction(objective),
        [_to_fraction(v) for v in x[:n]],
        [_to_fraction(v) for v in duals],
        pivots,
    )


def _pivot(rows, rhs, red, r: int, j: int):
    prow = rows[r]
    piv = prow[j]
    if piv != 1:
        inv = 1 / piv
        for col in prow:
            prow[col] *= inv
        rhs[r] *= inv
    items = list(prow.items())
    br = rhs[r]
    for k, row in enumerate(rows):
        if k == r:
            continue
        f = row.get(j)
        if f is None:
            continue
        for col, v in items:
            nv = row.get(col, 0) - f * v
            if nv == 0:
                row.pop(col, None)
            else:
                row[col] = nv
        rhs[k] -= f * br
    f = red.get(j)
    if f is not None:
        for col, v in items:
            nv = red.get(col, 0) - f * v
            if nv == 0:
                red.pop(col, None)
            else:
                red[col] = nv


def check_certificate(c, A, b, x, y) -> bool:
    """Exact optimality check: primal and dual feasibility plus equal objectives."""
    n = len(c)
    cq = [Fraction(v) for v in c]
    x = [Fraction(v) for v in x]
    y = [Fraction(v) for v in y]
    if any(v < 0 for v in x) or any(v < 0 for v in y):
        return False
    aty = [Fraction(0)] * n
    for r, row in enumerate(A):
        items = row.items() if isinstance(row, dict) else enumerate(row)
        lhs = Fraction(0)
        for j, v in items:
            v = Fraction(v)
            lhs += v * x[j]
            aty[j] += v * y[r]
        if lhs > Fraction(b[r]):
            return False
    if any(aty[j] < cq[j] for j in range(n)):
        return False
    primal = sum(cq[j] * x[j] for j in range(n))
    dual = sum(Fraction(b[r]) * y[r] for r in range(len(b)))
    return primal == dual
