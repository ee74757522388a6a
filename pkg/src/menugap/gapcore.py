"""Exact evaluation of MenuGap(X, Q), SupGap(X) and AlignGap(X, C)."""

from __future__ import annotations

import numpy as np

from .numeric import dot, l1, scale, sub, to_number
from .sequences import (
    AllocationSequence,
    GapReport,
    PointSequence,
    ScalarSequence,
    SequenceError,
    build_report,
)


def _common_backend(*objs) -> str:
    return "rational" if any(o.backend == "rational" for o in objs) else "float"


def _check_pair(X: PointSequence, Q: AllocationSequence):
    if X.k != Q.k:
        raise SequenceError(f"dimension mismatch: X has k={X.k}, Q has k={Q.k}")
    if len(Q) != len(X) + 1:
        raise SequenceError(f"|Q| must be |X| + 1 (Q carries q_0); got |X|={len(X)}, |Q|={len(Q)}")
    X.require_nonzero()


def _columnwise_dot(diff: np.ndarray, x: np.ndarray) -> np.ndarray:
    # Left-to-right accumulation so each entry equals the scalar dot() bit for bit.
    acc = diff[:, 0] * x[0]
    for d in range(1, diff.shape[1]):
        acc = acc + diff[:, d] * x[d]
    return acc


def menu_gap_terms(X: PointSequence, Q: AllocationSequence) -> GapReport:
    """gap_i = min_{0 <= j < i} (q_i - q_j) . x_i, normalized by ||x_i||_1 and summed.

    Negative gaps are kept as-is. The witness is the smallest j attaining the min.
    """
    _check_pair(X, Q)
    backend = _common_backend(X, Q)
    X, Q = X.to_backend(backend), Q.to_backend(backend)
    xs, qs = X.body, Q.allocations
    terms, witness = [], []
    if backend == "rational":
        for i, x in enumerate(xs, start=1):
            qi = qs[i]
            best, arg = None, 0
            for j in range(i):
                v = dot(sub(qi, qs[j]), x)
                if best is None or v < best:
                    best, arg = v, j
            terms.append(best)
            witness.append(arg)
    else:
        qarr = np.asarray(qs, dtype=float)
        for i, x in enumerate(xs, start=1):
            vals = _columnwise_dot(qarr[i] - qarr[:i], np.asarray(x, dtype=float))
            arg = int(np.argmin(vals))
            terms.append(float(vals[arg]))
            witness.append(arg)
    norms = [l1(x) for x in xs]
    return build_report(terms, terms, norms, witness, "menu", backend)


def sup_gap(X: PointSequence) -> GapReport:
    """MenuGap(X, X) for X in [0,1]^k carrying the zero sentinel x_0."""
    if not X.has_origin:
        raise SequenceError("SupGap needs the leading zero point x_0 (has_origin=True)")
    for idx, p in enumerate(X.points):
        if any(c > 1 for c in p):
            raise SequenceError(f"x_{idx} lies outside [0,1]^k, so it is not a valid allocation")
    Q = AllocationSequence(X.k, X.points, X.backend)
    report = menu_gap_terms(X.without_origin(), Q)
    return GapReport(
        report.terms,
        report.clipped_terms,
        report.normalized_terms,
        report.cumulative,
        report.argmin_witness,
        report.total,
        "sup",
        report.backend,
    )


def align_gap_terms(X: PointSequence, C: ScalarSequence) -> GapReport:
    """sgap_i = min_{j<i} x_i . (c_i x_i - c_j x_j); the objective clips each term at 0."""
    X.require_nonzero()
    backend = _common_backend(X, C)
    X, C = X.to_backend(backend), C.to_backend(backend)
    C.validate_for(X)
    xs, cs = X.body, C.scalars
    terms, witness = [], []
    if backend == "rational":
        aligned = [tuple(0 * v for v in xs[0])] if xs else []
        for i, x in enumerate(xs, start=1):
            qi = scale(cs[i], x)
            best, arg = None, 0
            for j in range(i):
                v = dot(x, sub(qi, aligned[j]))
                if best is None or v < best:
                    best, arg = v, j
            terms.append(best)
            witness.append(arg)
            aligned.append(qi)
    else:
        n = len(xs)
        xarr = np.asarray(xs, dtype=float).reshape(n, X.k)
        carr = np.asarray(cs, dtype=float)
        aligned = np.vstack([np.zeros((1, X.k)), carr[1:, None] * xarr])
        for i in range(1, n + 1):
            x = xarr[i - 1]
            # x . (a_i - a_j) accumulated left to right like dot(x, sub(...)).
            vals = _columnwise_dot(aligned[i] - aligned[:i], x)
            arg = int(np.argmin(vals))
            terms.append(float(vals[arg]))
            witness.append(arg)
    zero = to_number(0, backend)
    clipped = [t if t > 0 else zero for t in terms]
    norms = [l1(x) for x in xs]
    return build_report(terms, clipped, norms, witness, "align", backend)


def align_to_menu(X: PointSequence, C: ScalarSequence) -> AllocationSequence:
    """Embed an aligned scalar sequence into an allocation sequence with at least its gap.

    Positive scalar gaps keep q_i = c_i x_i; otherwise q_i copies the emitted
    allocation with the largest value under x_i (smallest index on ties), which
    forces gap_i = 0.
    """
    report = align_gap_terms(X, C)
    backend = report.backend
    X, C = X.to_backend(backend), C.to_backend(backend)
    xs, cs = X.body, C.scalars
    zero = tuple(to_number(0, backend) for _ in range(X.k))
    qs = [zero]
    for i, x in enumerate(xs, start=1):
        if report.terms[i - 1] > 0:
            q = scale(cs[i], x)
            if backend == "float":
                q = tuple(min(1.0, v) for v in q)
            qs.append(q)
        else:
            best, arg = None, 0
            for j, q in enumerate(qs):
                v = dot(q, x)
                if best is None or v > best:
                    best, arg = v, j
            qs.append(qs[arg])
    return AllocationSequence(X.k, qs, backend)
