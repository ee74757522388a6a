"""Moving between sequences and auctions.

* ``hn_construct``: (X, Q) -> a distribution and menu whose revenue ratio
  approaches MenuGap(X, Q) as the base B grows.
* ``representative_sequence`` / ``aligned_sequence``: mechanism -> sequence by
  bucketing buyers on dyadic payment bands.
* ``theorem_main_pipeline`` / ``theorem_ext_pipeline``: end-to-end
  certificates for Rev/BRev (resp. ARev/BRev) <= 9 * gap.
* ``prop_hn_check``: falsification test of ARev <= AlignGap + 1/B on the
  constructed distribution.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .auctions import (
    DiscreteDistribution,
    ICReport,
    Mechanism,
    arev,
    brev,
    buyer_choice,
    c_expensive,
    is_c_expensive,
    is_parallel,
    parity_split,
    price_band,
    price_parity,
    revenue,
    verify_ic_ir,
)
from .gapcore import align_gap_terms, menu_gap_terms
from .gapopt import lagrel_chain, optimal_mechanism_lp
from .numeric import dot, l1, linf, to_number
from .sequences import AllocationSequence, PointSequence, ScalarSequence

FLOAT_LIMIT = 1e300
FLOAT_TOL = 1e-9


class TransformError(ValueError):
    pass


@dataclass(frozen=True)
class HNParams:
    base: object
    max_index: int

    def check(self, backend: str = "rational"):
        B = to_number(self.base, "rational")
        if not B > 1:
            raise TransformError("base B must exceed 1")
        if self.max_index < 0:
            raise TransformError("max_index must be nonnegative")
        # sum_i B^{-2^i} < 1 keeps the zero point's mass positive
        if sum(1 / B ** (2**i) for i in range(1, self.max_index + 1)) >= 1:
            raise TransformError(f"B = {self.base} leaves no mass for the zero point")
        if backend == "float" and (2**self.max_index) * math.log(float(self.base)) > math.log(FLOAT_LIMIT):
            raise TransformError(
                f"B^(2^{self.max_index}) exceeds {FLOAT_LIMIT:g}; use the rational backend or a shorter prefix"
            )


class HNConstruction(NamedTuple):
    distribution: DiscreteDistribution
    mechanism: Mechanism
    ic: ICReport
    assignment: list  # support index -> menu index; v_i first, then the zero point
    buys_own_entry: list  # per i: buyer_choice(v_i) lands on (q_i, p_i)


def hn_construct(X: PointSequence, Q: AllocationSequence, params: HNParams) -> HNConstruction:
    """v_i = B^(2^i) x_i/||x_i||_1 with probability B^-(2^i), rest of the mass on 0.

    Prices follow greedy indifference: p_i = v_i.q_i - max_{j<i} (v_i.q_j - p_j),
    so v_i weakly prefers entry i to every earlier one.  Global IC is then
    checked, not assumed; it can fail when some gap term is negative.
    """
    X = X.without_origin()
    X.require_nonzero()
    backend = "rational" if "rational" in (X.backend, Q.backend) else "float"
    X, Q = X.to_backend(backend), Q.to_backend(backend)
    N = len(X)
    if len(Q) != N + 1:
        raise TransformError("Q must carry q_0 plus one allocation per point")
    if N > params.max_index:
        raise TransformError(f"|X| = {N} exceeds max_index = {params.max_index}")
    params.check(backend)
    B = to_number(params.base, backend)
    zero = to_number(0, backend)
    qs = Q.allocations
    vs, probs, prices = [], [], [zero]
    for i, x in enumerate(X.body, start=1):
        mag = B ** (2**i)
        n1 = l1(x)
        v = tuple(mag * c / n1 for c in x)
        vs.append(v)
        probs.append(1 / mag)
        best = max(dot(v, qs[j]) - prices[j] for j in range(i))
        prices.append(dot(v, qs[i]) - best)
    origin = tuple(zero for _ in range(X.k))
    support = list(zip(vs, probs))
    rest = 1 - sum(probs, start=zero)
    if rest > 0:
        support.append((origin, rest))
    D = DiscreteDistribution(X.k, support, backend)
    M = Mechanism(list(zip(qs[1:], prices[1:])), X.k, backend)
    own = [M.index_of(qs[i], prices[i]) for i in range(1, N + 1)]
    assignment = own + ([M.index_of(origin, zero)] if rest > 0 else [])
    tol = 0.0 if backend == "rational" else FLOAT_TOL * max([1.0] + [float(l1(v)) for v in vs])
    ic = verify_ic_ir(D, M, assignment, tol)
    buys = [buyer_choice(M, v).index == own[i] for i, v in enumerate(vs)]
    return HNConstruction(D, M, ic, assignment, buys)


@dataclass(frozen=True)
class ExtractionConfig:
    c: object
    epsilon: object = 0
    parity: str = "auto"  # odd | even | auto

    def __post_init__(self):
        if not self.c > 0:
            raise TransformError("c must be positive")
        if self.epsilon < 0:
            raise TransformError("epsilon must be nonnegative")
        if self.parity not in ("odd", "even", "auto"):
            raise TransformError(f"parity must be odd, even or auto, not {self.parity!r}")


@dataclass
class Certificate:
    gap_total: object
    rev: object
    brev: object
    ratio: object
    claimed_bound: object
    passed: bool
    provenance: str
    arev: object = None
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        from .numeric import format_number

        def fmt(v):
            return None if v is None else format_number(v)

        return {
            "provenance": self.provenance,
            "pass": self.passed,
            "gap_total": fmt(self.gap_total),
            "rev": fmt(self.rev),
            "brev": fmt(self.brev),
            "arev": fmt(self.arev),
            "ratio": fmt(self.ratio),
            "claimed_bound": fmt(self.claimed_bound),
            "checks": {k: (fmt(v) if not isinstance(v, (bool, str, list)) else v) for k, v in self.checks.items()},
        }


@dataclass
class Extraction:
    X: PointSequence
    allocations: object  # AllocationSequence or ScalarSequence
    payments: list  # p^M(x_j)
    bucket_mass: list  # Pr[B_j]
    buckets: list  # bucket index j (1-based, empty buckets skipped)
    parity: str


def _resolve_parity(M: Mechanism, cfg: ExtractionConfig) -> str:
    if not is_c_expensive(M, cfg.c):
        raise TransformError(f"mechanism is not {cfg.c}-expensive")
    found = price_parity(M, cfg.c)
    if found is None:
        raise TransformError("mechanism mixes odd and even price bands")
    if cfg.parity != "auto" and cfg.parity != found and M.complexity:
        raise TransformError(f"mechanism is {found}ly priced, not {cfg.parity}")
    return found if cfg.parity == "auto" else cfg.parity


def _extract(D: DiscreteDistribution, M: Mechanism, cfg: ExtractionConfig, aligned: bool) -> Extraction:
    backend = "rational" if "rational" in (D.backend, M.backend) else "float"
    D, M = D.to_backend(backend), M.to_backend(backend)
    parity = _resolve_parity(M, cfg)
    offset = 1 if parity == "odd" else 0
    c = to_number(cfg.c, backend)
    buckets: dict = {}
    for v, p in D.support:
        ch = buyer_choice(M, v)
        pay = ch.entry.price
        if pay <= 0 or (aligned and not is_parallel(ch.entry.q, v)):
            continue
        i = price_band(pay, c)
        j = (i - offset) // 2 + 1
        buckets.setdefault(j, []).append((v, p, ch))
    zero = to_number(0, backend)
    points, allocs, pays, mass, idx = [], [], [], [], []
    for j in sorted(buckets):
        members = buckets[j]
        # exact l1 minimum; epsilon > 0 would also admit near-minimal members
        v, _, ch = min(members, key=lambda m: (l1(m[0]), m[0]))
        points.append(v)
        allocs.append(ch.entry.q)
        pays.append(ch.entry.price)
        mass.append(sum((p for _, p, _ in members), start=zero))
        idx.append(j)
    X = PointSequence(D.k, points, backend=backend)
    if aligned:
        scalars = [zero] + [l1(q) / l1(x) for q, x in zip(allocs, points)]
        seq = ScalarSequence(scalars, backend)
    else:
        seq = AllocationSequence(D.k, [tuple(zero for _ in range(D.k))] + allocs, backend)
    return Extraction(X, seq, pays, mass, idx, parity)


def representative_sequence(D: DiscreteDistribution, M: Mechanism, cfg: ExtractionConfig):
    """(X, Q) with x_j the l1-smallest buyer paying in band j and q_j its allocation."""
    ex = _extract(D, M, cfg, aligned=False)
    return ex.X, ex.allocations


def aligned_sequence(D: DiscreteDistribution, M: Mechanism, cfg: ExtractionConfig):
    """As ``representative_sequence`` restricted to buyers whose allocation is parallel to their values."""
    ex = _extract(D, M, cfg, aligned=True)
    return ex.X, ex.allocations


def _ge(a, b, backend) -> bool:
    if backend == "rational":
        return a >= b
    return a >= b - FLOAT_TOL * max(1.0, abs(float(b)))


def _claim_checks(ex: Extraction, report, brev_value, epsilon, backend) -> dict:
    half_payment = all(_ge(t, p / 2, backend) for t, p in zip(report.terms, ex.payments))
    ell1 = all(_ge((1 + epsilon) * brev_value, l1(x) * m, backend) for x, m in zip(ex.X.body, ex.bucket_mass))
    return {"gap_ge_half_payment": half_payment, "ell1_vs_brev": ell1}


def _pick_parity(D, M1, M2, score):
    # the existential split is realized by keeping the better half; ties keep even
    s_odd, s_even = score(D, M1), score(D, M2)
    return ("odd", M1, s_odd, s_even) if s_odd > s_even else ("even", M2, s_odd, s_even)


def theorem_main_pipeline(D: DiscreteDistribution, cap: int = 100, epsilon=0) -> Certificate:
    """Rev(D) -> c-expensive -> one parity -> representative (X, Q); certify
    MenuGap(X, Q) >= Rev(D) / (9 BRev(D))."""
    backend = D.backend
    opt = optimal_mechanism_lp(D, cap)
    rev_opt = opt.value
    _, brev_value = brev(D)
    zero = to_number(0, backend)
    if not rev_opt > 0:
        return Certificate(zero, rev_opt, brev_value, zero, zero, True, "main:vacuous")
    c = rev_opt / 100
    M1 = c_expensive(opt.mechanism, c)
    rev_m = revenue(D, opt.mechanism).rev
    rev_m1 = revenue(D, M1).rev
    odd, even = parity_split(M1, c)
    parity, M2, r_odd, r_even = _pick_parity(D, odd, even, lambda d, m: revenue(d, m).rev)
    rev_m2 = max(r_odd, r_even)
    cfg = ExtractionConfig(c, epsilon, parity)
    ex = _extract(D, M2, cfg, aligned=False)
    report = menu_gap_terms(ex.X, ex.allocations) if len(ex.X) else None
    gap_total = report.total if report else zero
    claimed = rev_opt / (9 * brev_value)
    checks = _claim_checks(ex, report, brev_value, epsilon, backend) if report else {}
    checks.update(
        {
            "rev_mechanism": rev_m,
            "rev_c_expensive": rev_m1,
            "price_drop_ok": _ge(rev_m1, rev_m - c, backend),
            "rev_odd": r_odd,
            "rev_even": r_even,
            "parity": parity,
            "buckets_ok": _ge(r_odd + r_even, rev_m1, backend),
            "intermediate_bound": rev_m2 / (4 * (1 + epsilon) * brev_value),
            "intermediate_ok": _ge(gap_total, rev_m2 / (4 * (1 + epsilon) * brev_value), backend),
            "n_points": len(ex.X),
        }
    )
    passed = _ge(gap_total, claimed, backend)
    return Certificate(gap_total, rev_opt, brev_value, rev_opt / brev_value, claimed, passed, "main", checks=checks)


def theorem_ext_pipeline(D: DiscreteDistribution, M: Mechanism, epsilon=0) -> Certificate:
    """Aligned analogue for a supplied M: certify AlignGap(X, C) >= ARev(D, M) / (9 BRev(D))."""
    backend = "rational" if "rational" in (D.backend, M.backend) else "float"
    D, M = D.to_backend(backend), M.to_backend(backend)
    zero = to_number(0, backend)
    a0 = arev(D, M)
    _, brev_value = brev(D)
    rev_m = revenue(D, M).rev
    if not a0 > 0:
        return Certificate(zero, rev_m, brev_value, zero, zero, True, "ext:vacuous", arev=a0)
    c = a0 / 100
    M1 = c_expensive(M, c)
    a1 = arev(D, M1)
    odd, even = parity_split(M1, c)
    parity, M2, a_odd, a_even = _pick_parity(D, odd, even, arev)
    a2 = max(a_odd, a_even)
    cfg = ExtractionConfig(c, epsilon, parity)
    ex = _extract(D, M2, cfg, aligned=True)
    report = align_gap_terms(ex.X, ex.allocations) if len(ex.X) else None
    gap_total = report.total if report else zero
    claimed = a0 / (9 * brev_value)
    checks = _claim_checks(ex, report, brev_value, epsilon, backend) if report else {}
    checks.update(
        {
            "arev_c_expensive": a1,
            "price_drop_ok": _ge(a1, a0 - c, backend),
            "arev_odd": a_odd,
            "arev_even": a_even,
            "parity": parity,
            "buckets_ok": _ge(a_odd + a_even, a1, backend),
            "intermediate_bound": a2 / (4 * (1 + epsilon) * brev_value),
            "intermediate_ok": _ge(gap_total, a2 / (4 * (1 + epsilon) * brev_value), backend),
            "n_points": len(ex.X),
        }
    )
    passed = _ge(gap_total, claimed, backend)
    return Certificate(gap_total, rev_m, brev_value, a0 / brev_value, claimed, passed, "ext", arev=a0, checks=checks)


@dataclass
class HNCheckReport:
    bound: object
    lagrel: object
    arevs: list
    margins: list  # bound - arev per candidate; negative means violated
    worst_margin: object
    violations: list  # candidate indices
    construction: HNConstruction

    @property
    def ok(self) -> bool:
        return not self.violations


def bundle_menus(D: DiscreteDistribution) -> list:
    """One grand-bundle posted-price menu per distinct positive support sum."""
    one = tuple(to_number(1, D.backend) for _ in range(D.k))
    sums = sorted({l1(v) for v in D.values if l1(v) > 0})
    return [Mechanism([(one, s)], D.k, D.backend) for s in sums]


def prop_hn_check(X: PointSequence, Q: AllocationSequence, B, candidates: Sequence[Mechanism] = ()) -> HNCheckReport:
    """Check arev(D, M') <= LagRel(X) + 1/B for the constructed M and each candidate.

    A finite family can only falsify the bound on the supremum, never prove it.
    """
    X = X.without_origin()
    hn = hn_construct(X, Q, HNParams(B, len(X)))
    D = hn.distribution
    rel = lagrel_chain(X.to_backend(D.backend))
    bound = rel.lagrel + 1 / to_number(B, D.backend)
    mechs = [hn.mechanism] + [m.to_backend(D.backend) for m in candidates]
    arevs = [arev(D, m) for m in mechs]
    margins = [bound - a for a in arevs]
    if D.backend == "rational":
        bad = [i for i, m in enumerate(margins) if m < 0]
    else:
        bad = [i for i, m in enumerate(margins) if m < -FLOAT_TOL * max(1.0, abs(bound))]
    return HNCheckReport(bound, rel.lagrel, arevs, margins, min(margins), bad, hn)
