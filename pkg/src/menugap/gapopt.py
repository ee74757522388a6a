"""Optimization over gap functionals and mechanisms.

* ``menu_gap_lp``: MenuGap(X) = sup_Q MenuGap(X, Q) as an epigraph LP.
* ``lagrel_chain``: the Lagrangian upper-bound chain for AlignGap on unit vectors.
* ``align_gap_search`` / ``align_gap_bruteforce``: lower bounds on AlignGap(X).
* ``optimal_mechanism_lp``: Rev(D) for a finite-support distribution.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import linprog

from . import simplex
from .auctions import DiscreteDistribution, Mechanism
from .constructions import UNIT_NORM_TOL, sqrt2
from .gapcore import align_gap_terms, menu_gap_terms
from .numeric import dot, l1, l2_squared, linf, to_number
from .sequences import AllocationSequence, PointSequence, ScalarSequence, SequenceError

MENU_GAP_CAP = 60
MECHANISM_CAP = 100
BRUTEFORCE_MAX_POINTS = 6
BRUTEFORCE_MAX_GRID = 1 << 22
FLOAT_TOL = 1e-9


class SolverError(RuntimeError):
    pass


@dataclass
class LPSolution:
    objective: object
    q_star: Optional[AllocationSequence]
    status: str
    certificate: list = field(default_factory=list)


def _solve(c, rows, b, n_vars: int, backend: str, free=()):
    """Maximize c.x over rows.x <= b, x >= 0 (or free for indices in ``free``)."""
    if backend == "rational":
        res = simplex.maximize(c, rows, b)
        if res.status != "optimal":
            raise SolverError(f"LP {res.status}")
        return res.objective, res.x, res.duals
    A = np.zeros((len(rows), n_vars))
    for r, row in enumerate(rows):
        for j, v in row.items():
            A[r, j] = float(v)
    bounds = [(None, None) if j in free else (0, None) for j in range(n_vars)]
    res = linprog(-np.asarray(c, dtype=float), A_ub=A, b_ub=np.asarray(b, dtype=float), bounds=bounds, method="highs")
    if res.status != 0:
        raise SolverError(f"float LP failed ({res.message}); try the rational backend")
    return -res.fun, list(res.x), list(-res.ineqlin.marginals)


def menu_gap_lp(X: PointSequence, cap: int = MENU_GAP_CAP) -> LPSolution:
    """Exact MenuGap(X) via the LP

        max sum_i g_i / ||x_i||_1
        s.t. g_i <= (q_i - q_j) . x_i   for 0 <= j < i,   q_i in [0,1]^k,  g_i >= 0.

    Restricting g >= 0 loses nothing: any index with a negative gap can copy
    the best earlier allocation, which zeroes its gap and cannot lower later
    ones.  The returned Q is repaired the same way so that its MenuGap equals
    the LP objective.
    """
    X = X.without_origin()
    X.require_nonzero()
    N, k = len(X), X.k
    if N > cap:
        raise SolverError(f"N = {N} exceeds the LP cap of {cap}")
    backend = X.backend
    xs = X.body
    qv = lambda i, d: (i - 1) * k + d  # noqa: E731  (i is 1-based)
    gv = lambda i: N * k + i - 1  # noqa: E731
    n_vars = N * k + N
    c = [0] * (N * k) + [1 / l1(x) for x in xs]
    rows, b = [], []
    for i, x in enumerate(xs, start=1):
        for j in range(i):
            row = {gv(i): 1}
            for d in range(k):
                if x[d] != 0:
                    row[qv(i, d)] = -x[d]
                    if j > 0:
                        row[qv(j, d)] = x[d]
            rows.append(row)
            b.append(0)
    for i in range(1, N + 1):
        for d in range(k):
            rows.append({qv(i, d): 1})
            b.append(1)
    obj, sol, duals = _solve(c, rows, b, n_vars, backend)
    conv = (lambda v: v) if backend == "rational" else (lambda v: min(1.0, max(0.0, float(v))))
    zero = tuple(to_number(0, backend) for _ in range(k))
    qs = [zero] + [tuple(conv(sol[qv(i, d)]) for d in range(k)) for i in range(1, N + 1)]
    Q = _repair(X, qs)
    return LPSolution(obj if backend == "rational" else float(obj), Q, "optimal", duals)


def _repair(X: PointSequence, qs: list) -> AllocationSequence:
    """Replace every allocation with a negative gap by the best earlier allocation."""
    xs = X.body
    qs = list(qs)
    for i in range(1, len(qs)):
        x = xs[i - 1]
        vals = [dot(qs[j], x) for j in range(i)]
        best = max(vals)
        if dot(qs[i], x) < best:
            qs[i] = qs[vals.index(best)]
    return AllocationSequence(X.k, qs, X.backend)


# ---------------------------------------------------------------------------
# Lagrangian relaxation chain


@dataclass
class RelaxationReport:
    aligngap_prime: object  # search lower bound on the relaxed program, or None
    lagrel1: object
    lagrel2: object
    lagrel: object
    chain_valid: bool
    c_cap: object
    c_star: list


def lagrel_chain(X: PointSequence, prime_search: bool = False, seed: int = 0) -> RelaxationReport:
    """Evaluate the relaxation chain AlignGap'(X) <= LagRel_1 = LagRel_2 = LagRel.

    Points must have unit l2 norm, so ||x||_1 >= 1 and 1/||x||_inf <= sqrt(2).
    On the rational backend the cap is a rational upper bound on sqrt(2)
    (raised further if some float-derived point needs it), keeping the bound
    rigorous for the exact points.  The optimal multiplier-1 relaxation is
    separable: c_i = cap when x_i . (x_i - x_{i+1}) > 0, else 0, with
    x_{N+1} = 0.
    """
    X = X.without_origin()
    for idx, p in enumerate(X.body, start=1):
        if abs(float(l2_squared(p)) - 1.0) > UNIT_NORM_TOL:
            raise SequenceError(
                f"x_{idx} is not a unit vector; the relaxation constant sqrt(2) only applies to unit-norm sequences"
            )
    backend = X.backend
    xs = X.body
    N = len(xs)
    zero = to_number(0, backend)
    if backend == "rational":
        cap = max([sqrt2(backend)] + [1 / linf(x) for x in xs])
        m = min([Fraction(1)] + [l1(x) for x in xs])
    else:
        cap, m = math.sqrt(2), min([1.0] + [float(l1(x)) for x in xs])
    weight = 1 / m
    nxt = lambda i: xs[i + 1] if i + 1 < N else tuple(zero for _ in xs[i])  # noqa: E731
    coeff = [dot(xs[i], xs[i]) - dot(xs[i], nxt(i)) for i in range(N)]
    c_star = [cap if a > 0 else zero for a in coeff]
    lagrel = weight * sum((c * a for c, a in zip(c_star, coeff)), start=zero)
    lag2 = zero
    for i in range(N):
        prev = dot(xs[i], xs[i - 1]) * c_star[i - 1] if i > 0 else zero
        lag2 += c_star[i] * dot(xs[i], xs[i]) - prev
    lagrel2 = weight * lag2
    # sup over sgap_i of max(0, sgap_i) - sgap_i is 0, attained at sgap_i = 0
    sgap = [zero] * N
    lagrel1 = lagrel2 + weight * sum((max(zero, s) - s for s in sgap), start=zero)
    prime = None
    if prime_search and N:
        caps = [float(cap)] * N
        weights = [float(weight)] * N
        best_c, _ = _coordinate_ascent(xs, caps, weights, restarts=8, seed=seed)
        C = [zero] + [min(to_number(v, backend), cap) for v in best_c]
        prime = weight * _clipped_sgap_sum(xs, C, zero)
    if backend == "rational":
        equal = lagrel1 == lagrel2 == lagrel
        valid = equal and (prime is None or prime <= lagrel1)
    else:
        tol = FLOAT_TOL * max(1.0, abs(lagrel))
        equal = abs(lagrel1 - lagrel2) <= tol and abs(lagrel2 - lagrel) <= tol
        valid = equal and (prime is None or prime <= lagrel1 + tol)
    return RelaxationReport(prime, lagrel1, lagrel2, lagrel, valid, cap, c_star)


def _clipped_sgap_sum(xs, C, zero):
    total = zero
    aligned = [tuple(zero for _ in xs[0])]
    for i, x in enumerate(xs, start=1):
        qi = tuple(C[i] * v for v in x)
        s = min(dot(x, tuple(a - b for a, b in zip(qi, aj))) for aj in aligned)
        total += max(zero, s)
        aligned.append(qi)
    return total


# ---------------------------------------------------------------------------
# AlignGap lower bounds


def _objective(c: np.ndarray, G: np.ndarray, w: np.ndarray) -> float:
    """sum_i w_i max(0, c_i G_ii - max(0, max_{j<i} c_j G_ij))."""
    n = len(c)
    A = c[None, :] * G
    A = np.where(np.tri(n, n, -1, dtype=bool), A, -np.inf)
    R = np.maximum(0.0, A.max(axis=1)) if n else np.zeros(0)
    return float(np.sum(w * np.maximum(0.0, c * np.diag(G) - R)))


def _coordinate_step(c: np.ndarray, i: int, G: np.ndarray, w: np.ndarray, cap: float) -> float:
    """Best value for c_i with the others fixed.

    The objective is piecewise linear in c_i, so its maximum over [0, cap]
    sits at an endpoint or a kink; every kink is enumerated.
    """
    n = len(c)
    Ri = max(0.0, float(np.max(c[:i] * G[i, :i]))) if i else 0.0
    later = np.arange(i + 1, n)
    cands = [0.0, cap, c[i]]
    if G[i, i] > 0:
        cands.append(Ri / G[i, i])
    if len(later):
        A = c[None, :] * G[later]
        mask = np.arange(n)[None, :] < later[:, None]
        mask[:, i] = False
        A = np.where(mask, A, -np.inf)
        Rm = np.maximum(0.0, A.max(axis=1))
        gmi = G[later, i]
        own = c[later] * G[later, later]
        pos = gmi > 0
        cands.extend((Rm[pos] / gmi[pos]).tolist())
        cands.extend((own[pos] / gmi[pos]).tolist())
    T = np.clip(np.asarray(cands), 0.0, cap)
    vals = w[i] * np.maximum(0.0, T * G[i, i] - Ri)
    if len(later):
        eff = np.maximum(Rm[None, :], T[:, None] * gmi[None, :])
        vals = vals + np.sum(w[later][None, :] * np.maximum(0.0, own[None, :] - eff), axis=1)
    cur = vals[2]
    best = int(np.argmax(vals))
    if vals[best] > cur + 1e-15 * max(1.0, abs(cur)):
        return float(T[best])
    return float(c[i])


def _coordinate_ascent(xs, caps, weights, restarts: int = 16, seed: int = 0, sweeps: int = 3):
    X = np.asarray([[float(v) for v in x] for x in xs])
    G = X @ X.T
    caps = np.asarray(caps, dtype=float)
    w = np.asarray(weights, dtype=float)
    n = len(caps)
    rng = np.random.default_rng(seed)
    starts = [caps.copy(), np.minimum(1.0, caps)]
    starts += [rng.uniform(0.0, caps) for _ in range(restarts)]
    best_val, best_c = -1.0, None
    for c in starts:
        c = c.copy()
        val = _objective(c, G, w)
        for _ in range(sweeps):
            for i in range(n):
                c[i] = _coordinate_step(c, i, G, w, caps[i])
            new = _objective(c, G, w)
            if new <= val:
                val = max(val, new)
                break
            val = new
        key = tuple(c.tolist())
        if val > best_val or (val == best_val and key < tuple(best_c.tolist())):
            best_val, best_c = val, c
    return best_c, best_val


def align_gap_search(X: PointSequence, restarts: int = 16, seed: int = 0, sweeps: int = 3):
    """Coordinate-ascent lower bound on AlignGap(X): returns (value, ScalarSequence).

    The search runs in floating point; the chosen scalars are then clamped to
    their exact caps and re-scored on X's backend, so the value is an
    attained AlignGap(X, C).
    """
    X = X.without_origin()
    X.require_nonzero()
    xs = X.body
    if not xs:
        return to_number(0, X.backend), ScalarSequence([to_number(0, X.backend)], X.backend)
    caps = [float(1 / linf(x)) for x in xs]
    weights = [1.0 / float(l1(x)) for x in xs]
    best_c, _ = _coordinate_ascent(xs, caps, weights, restarts, seed, sweeps)
    C = _snap_scalars(X, best_c)
    if X.backend == "rational":
        C = _exact_polish(X, C)
    return align_gap_terms(X, C).total, C


def _snap_scalars(X: PointSequence, values) -> ScalarSequence:
    backend = X.backend
    out = [to_number(0, backend)]
    for v, x in zip(values, X.body):
        cap = 1 / linf(x)
        out.append(min(max(to_number(float(v), backend), to_number(0, backend)), cap))
    return ScalarSequence(out, backend).validate_for(X)


def _exact_polish(X: PointSequence, C: ScalarSequence, sweeps: int = 1) -> ScalarSequence:
    """Exact coordinate sweeps over the same kink candidates as the float search.

    Moves the float optimum onto exact breakpoints (caps, tie points), so
    rational results are not limited by the float rounding of the scalars.
    """
    xs = X.body
    n = len(xs)
    G = [[dot(xs[a], xs[b]) for b in range(n)] for a in range(n)]
    caps = [1 / linf(x) for x in xs]
    w = [1 / l1(x) for x in xs]
    c = list(C.scalars[1:])
    zero = to_number(0, "rational")

    def term(m, cm, others):
        return w[m] * max(zero, cm * G[m][m] - others)

    for _ in range(sweeps):
        changed = False
        for i in range(n):
            Ri = max([zero] + [c[j] * G[i][j] for j in range(i)])
            later = []
            for m in range(i + 1, n):
                rm = max([zero] + [c[j] * G[m][j] for j in range(m) if j != i])
                later.append((m, rm))
            cands = {zero, caps[i], c[i]}
            if G[i][i] > 0:
                cands.add(Ri / G[i][i])
            for m, rm in later:
                if G[m][i] > 0:
                    cands.add(rm / G[m][i])
                    cands.add(c[m] * G[m][m] / G[m][i])

            def value(t):
                return term(i, t, Ri) + sum((term(m, c[m], max(rm, t * G[m][i])) for m, rm in later), start=zero)

            cur = value(c[i])
            best_t, best_v = c[i], cur
            for t in sorted(cands):
                if not zero <= t <= caps[i]:
                    continue
                v = value(t)
                if v > best_v:
                    best_t, best_v = t, v
            if best_t != c[i]:
                c[i], changed = best_t, True
        if not changed:
            break
    return ScalarSequence([zero] + c, "rational").validate_for(X)


def bruteforce_grid_size(n: int, resolution: int) -> int:
    return (resolution + 1) ** n


def align_gap_bruteforce(X: PointSequence, resolution: int, return_scalars: bool = False):
    """Max of AlignGap(X, C) over the grid c_i in {t cap_i / resolution : t = 0..resolution}.

    A lower bound on AlignGap(X) converging to it as the resolution grows.
    The best grid point is re-scored exactly on X's backend.
    """
    X = X.without_origin()
    X.require_nonzero()
    xs = X.body
    n = len(xs)
    if n > BRUTEFORCE_MAX_POINTS:
        raise ValueError(f"brute force is limited to N <= {BRUTEFORCE_MAX_POINTS}")
    if not 1 <= resolution <= 256:
        raise ValueError("resolution must lie in [1, 256]")
    if bruteforce_grid_size(n, resolution) > BRUTEFORCE_MAX_GRID:
        raise ValueError(f"grid of {(resolution + 1)}^{n} points exceeds {BRUTEFORCE_MAX_GRID}")
    if n == 0:
        zero = to_number(0, X.backend)
        return (zero, ScalarSequence([zero], X.backend)) if return_scalars else zero
    Xa = np.asarray([[float(v) for v in x] for x in xs])
    G = Xa @ Xa.T
    caps = np.asarray([float(1 / linf(x)) for x in xs])
    w = np.asarray([1.0 / float(l1(x)) for x in xs])
    diag = np.diag(G)
    best_val, best_t = -1.0, None
    chunk = 1 << 15
    grid = itertools.product(range(resolution + 1), repeat=n)
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(grid, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        T = block.reshape(-1, n)
        C = T * (caps / resolution)[None, :]
        total = np.zeros(len(T))
        for i in range(n):
            R = np.zeros(len(T))
            if i:
                R = np.maximum(0.0, np.max(C[:, :i] * G[i, :i][None, :], axis=1))
            total += w[i] * np.maximum(0.0, C[:, i] * diag[i] - R)
        arg = int(np.argmax(total))
        if total[arg] > best_val:
            best_val, best_t = float(total[arg]), T[arg].copy()
    backend = X.backend
    scalars = [to_number(0, backend)]
    for t, x in zip(best_t, xs):
        cap = 1 / linf(x)
        scalars.append(Fraction(int(t), resolution) * cap if backend == "rational" else float(t) * float(cap) / resolution)
    C = ScalarSequence(scalars, backend).validate_for(X)
    value = align_gap_terms(X, C).total
    return (value, C) if return_scalars else value


# ---------------------------------------------------------------------------
# Optimal mechanism for a finite-support distribution


class OptimalMechanism(NamedTuple):
    mechanism: Mechanism
    value: object
    assignment: list  # support index -> menu index


def optimal_mechanism_lp(D: DiscreteDistribution, cap: int = MECHANISM_CAP) -> OptimalMechanism:
    """Revenue-optimal menu for D via the standard single-buyer LP.

    Variables are q(v) in [0,1]^k and a free price p(v) per support point;
    constraints are IC for every ordered pair of support points plus IR.
    """
    m, k = len(D), D.k
    if m > cap:
        raise SolverError(f"support size {m} exceeds the LP cap of {cap}")
    backend = D.backend
    vals, probs = D.values, D.probs
    qv = lambda s, d: s * k + d  # noqa: E731
    pp = lambda s: m * k + 2 * s  # noqa: E731
    pm = lambda s: m * k + 2 * s + 1  # noqa: E731
    n_vars = m * k + 2 * m
    c = [0] * (m * k)
    for s in range(m):
        c += [probs[s], -probs[s]]
    rows, b = [], []

    def add(row: dict):
        row = {j: v for j, v in row.items() if v != 0}
        rows.append(row)
        b.append(0)

    for s in range(m):
        v = vals[s]
        for t in range(m):
            if t == s:
                continue
            # v.q(t) - p(t) <= v.q(s) - p(s)
            row = {}
            for d in range(k):
                row[qv(t, d)] = row.get(qv(t, d), 0) + v[d]
                row[qv(s, d)] = row.get(qv(s, d), 0) - v[d]
            row[pp(s)], row[pm(s)], row[pp(t)], row[pm(t)] = 1, -1, -1, 1
            add(row)
        row = {qv(s, d): -v[d] for d in range(k)}
        row[pp(s)], row[pm(s)] = 1, -1
        add(row)
    for s in range(m):
        for d in range(k):
            rows.append({qv(s, d): 1})
            b.append(1)
    value, sol, _ = _solve(c, rows, b, n_vars, backend)
    entries = []
    for s in range(m):
        if backend == "rational":
            q = tuple(sol[qv(s, d)] for d in range(k))
            p = sol[pp(s)] - sol[pm(s)]
        else:
            q = tuple(min(1.0, max(0.0, float(sol[qv(s, d)]))) for d in range(k))
            p = float(sol[pp(s)] - sol[pm(s)])
        entries.append((q, p))
    M = Mechanism(entries, k, backend)
    assignment = [M.index_of(q, p) for q, p in entries]
    return OptimalMechanism(M, value if backend == "rational" else float(value), assignment)
