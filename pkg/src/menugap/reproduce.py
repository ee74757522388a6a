"""The acceptance checklist as runnable checks, plus the per-layer bound tables."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from . import constructions as cons
from .auctions import brev, revenue
from .gapcore import menu_gap_terms, sup_gap
from .gapopt import align_gap_bruteforce, align_gap_search, menu_gap_lp
from .instances import (
    random_aligned_mechanism,
    random_distribution,
    random_mechanism,
    random_points,
    random_scaled_mechanism,
    stream,
)
from .numeric import l1
from .sequences import PointSequence
from .transforms import (
    HNParams,
    bundle_menus,
    hn_construct,
    prop_hn_check,
    theorem_ext_pipeline,
    theorem_main_pipeline,
)

REL_TOL = 1e-9
SEARCH_WINDOW = 60
HN_PREFIX = 6
HN_BASES = (10, 100)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float
    budget: float

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({self.elapsed:.1f}s / {self.budget:.0f}s)"


def _timed(number: int, name: str, budget: float, fn: Callable[[], tuple]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - t0
    if elapsed > budget:
        ok = False
        detail += f"; over the {budget:.0f}s budget"
    return CriterionResult(number, name, ok, detail, elapsed, budget)


# ---------------------------------------------------------------------------
# tables


def bounds_table(max_layer: int) -> list:
    """Per-layer rows: ell, n_ell, theta_ell, delta_ell, lagrel_term, gap_sum, gap_lower, divergence_cum."""
    X, specs = cons.build_x_sequence(max_layer, "float")
    report = cons.fast_gap_terms(max_layer)
    sums = cons.layer_gap_sums(report, specs)
    lag = cons.lagrel_terms(X)
    rows, div = [], 0.0
    a_hi = cons._default_alpha().hi
    for s, start in zip(specs, cons.layer_offsets(specs)):
        even4 = s.even and s.ell > 2
        if even4:
            div += 1.0 / (2 * a_hi * s.ell * math.log(s.ell))
        rows.append(
            {
                "ell": s.ell,
                "n_ell": s.n_ell,
                "theta_ell": s.theta_ell,
                "delta_ell": cons.delta(s.ell),
                "lagrel_term": math.fsum(lag[start : start + s.n_ell]),
                "gap_sum": sums[s.ell],
                "gap_lower": cons.layer_gap_lower_bound(s.ell) if even4 else "",
                "divergence_cum": div,
            }
        )
    return rows


def relaxation_bounds_table(max_layer: int) -> list:
    """Per-layer prefix rows: relaxation mass so far, the analytic tail beyond max_layer, and their sum."""
    X, specs = cons.build_x_sequence(max_layer, "float")
    lag = cons.lagrel_terms(X)
    tail = cons.lagrel_tail_bound(max_layer + 1)
    report = cons.fast_gap_terms(max_layer)
    rows, cum_gap = [], 0.0
    for s, start in zip(specs, cons.layer_offsets(specs)):
        end = start + s.n_ell
        cum = math.fsum(lag[: end - 1])
        cum_gap = math.fsum(report.normalized_terms[:end])
        rows.append(
            {
                "ell": s.ell,
                "n_points": end,
                "lagrel_cum": cum,
                "lagrel_tail": tail,
                "lagrel_bound": cum + tail,
                "menugap_cum": cum_gap,
                "within_6": cum + tail <= 6,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# criteria


def _layer_ends(specs) -> list:
    return [o + s.n_ell for s, o in zip(specs, cons.layer_offsets(specs))]


def criterion_1(max_layer: int = 40, seed: int = 0):
    X, specs = cons.build_x_sequence(max_layer, "float")
    lag = cons.lagrel_terms(X)
    tail = cons.lagrel_tail_bound(max_layer + 1)
    worst = max(itertools.accumulate(lag)) + tail if lag else tail
    worst_terminal = worst + math.sqrt(2)
    ok = worst <= 6
    Xr = X.to_backend("rational")
    bad, gap_max = [], 0.0
    n_max = min(SEARCH_WINDOW, len(Xr))
    for n in range(1, n_max + 1):
        prefix = Xr.prefix(n)
        value, _ = align_gap_search(prefix, seed=seed)
        bound = cons.lagrel_closed_form(prefix, terminal=True)
        gap_max = max(gap_max, float(value))
        if value > bound:
            bad.append((n, float(value), float(bound)))
    ok = ok and not bad
    detail = (
        f"max prefix relaxation + tail = {worst:.4f} ({worst_terminal:.4f} with the terminal term) vs 6; "
        f"exact search over prefixes N <= {n_max}, max AlignGap found {gap_max:.4f}, {len(bad)} above the relaxation"
    )
    return ok, detail


def shifted_window_excess(max_layer: int = 40, seed: int = 0) -> list:
    """Windows of the construction (not starting at x_1) whose searched AlignGap
    exceeds their own relaxation value.  The relaxation is not an upper bound
    for arbitrary unit sequences; this lists the concrete witnesses."""
    X, specs = cons.build_x_sequence(max_layer, "float")
    Xr = X.to_backend("rational")
    out = []
    for end in _layer_ends(specs):
        start = end - SEARCH_WINDOW
        if start <= 0:
            continue
        window = Xr.window(start, end)
        value, _ = align_gap_search(window, seed=seed)
        bound = cons.lagrel_closed_form(window, terminal=True)
        if value > bound:
            out.append((start, end, value, bound))
    return out


def criterion_2(max_layer: int = 40):
    report = cons.fast_gap_terms(max_layer)
    specs = cons.layer_specs(max_layer)
    sums = cons.layer_gap_sums(report, specs)
    per_index, per_layer, where = 0, 0, []
    for s, start in zip(specs, cons.layer_offsets(specs)):
        if not s.even or s.ell <= 2:
            continue
        for j in range(s.n_ell):
            bound = cons.gap_lower_formula(s.ell, j)
            if report.terms[start + j] < bound - REL_TOL * bound:
                per_index += 1
                where.append((s.ell, j))
        lb = cons.layer_gap_lower_bound(s.ell)
        if sums[s.ell] < lb - REL_TOL * lb:
            per_layer += 1
    last_only = all(j == cons.LayerSpec.for_layer(ell).n_ell - 1 for ell, j in where)
    detail = f"{per_index} per-index violations, {per_layer} layer-sum violations"
    if where:
        detail += f" (all at j = n_ell - 1: {last_only})"
    return per_index == 0 and per_layer == 0, detail


def criterion_3(max_layer: int = 40):
    report = cons.fast_gap_terms(max_layer)
    specs = cons.layer_specs(max_layer)
    ends = _layer_ends(specs)
    cum = [report.cumulative[e - 1] for e in ends]
    monotone = all(b >= a for a, b in zip(cum, cum[1:]))
    target = cons.divergence_partial(max_layer)
    ok = monotone and cum[-1] > target
    return ok, f"cumulative MenuGap(X,Q) at L={max_layer} is {cum[-1]:.4f} vs partial series {target:.4f}; monotone={monotone}"


def criterion_4(count: int = 100, seed: int = 0):
    rng = stream(seed, "k1-collapse")
    bad = 0
    for _ in range(count):
        n = int(rng.integers(1, 21))
        X = random_points(rng, n, 1)
        if menu_gap_lp(X).objective != 1:
            bad += 1
    return bad == 0, f"{count - bad}/{count} k=1 sequences have MenuGap exactly 1"


def _bruteforce_resolution(n: int, budget: int = 4096) -> int:
    r = 1
    while (r + 2) ** n <= budget and r < 256:
        r += 1
    return r


def criterion_5(count: int = 1000, seed: int = 0):
    rng = stream(seed, "sandwich")
    v_brute = v_search = v_sup = brute_runs = 0
    for t in range(count):
        n = int(rng.integers(1, 9))
        k = int(rng.integers(1, 4))
        X = random_points(rng, n, k, den=8, hi=1)
        lp = menu_gap_lp(X).objective
        search, _ = align_gap_search(X, restarts=4, seed=t)
        if search > lp:
            v_search += 1
        if sup_gap(X.with_origin()).total > lp:
            v_sup += 1
        if n <= 6:
            r = _bruteforce_resolution(n)
            brute = align_gap_bruteforce(X, r)
            slack = Fraction(2, r) * sum(l1(x) for x in X.body)
            brute_runs += 1
            if brute > search + slack:
                v_brute += 1
    ok = v_brute == v_search == v_sup == 0
    return ok, (
        f"violations: bruteforce>search+slack {v_brute}/{brute_runs}, "
        f"search>MenuGap {v_search}/{count}, SupGap>MenuGap {v_sup}/{count}"
    )


def criterion_6(count: int = 200, seed: int = 0):
    rng = stream(seed, "theorem-main")
    fails, claim_fails, vacuous = 0, 0, 0
    for _ in range(count):
        D = random_distribution(rng, int(rng.integers(1, 9)), int(rng.integers(1, 4)))
        cert = theorem_main_pipeline(D)
        if cert.provenance.endswith("vacuous"):
            vacuous += 1
        if not cert.passed:
            fails += 1
        checks = cert.checks
        keys = ("gap_ge_half_payment", "ell1_vs_brev", "price_drop_ok", "buckets_ok", "intermediate_ok")
        if any(checks.get(key) is False for key in keys):
            claim_fails += 1
    ok = fails == 0 and claim_fails == 0
    return ok, f"{count - fails}/{count} certificates pass ({vacuous} vacuous), {claim_fails} with a failed intermediate check"


def _hn_prefix():
    X, Q, _ = cons.build_construction(3, backend="rational")
    return X.prefix(HN_PREFIX), Q.prefix(HN_PREFIX)


def criterion_7():
    X, Q = _hn_prefix()
    gap = menu_gap_terms(X, Q).total
    parts, ok = [], True
    for B in HN_BASES:
        hn = hn_construct(X, Q, HNParams(B, len(X)))
        r = revenue(hn.distribution, hn.mechanism)
        ratio = r.rev / r.brev
        eps = 1 - ratio / gap
        good = hn.ic.ok and all(hn.buys_own_entry) and eps <= Fraction(2, B)
        ok = ok and good
        parts.append(
            f"B={B}: IC violations {len(hn.ic.violations)}, own entries {sum(hn.buys_own_entry)}/{len(X)}, "
            f"rev/brev {float(ratio):.6f} vs MenuGap {float(gap):.6f}, eps {float(eps):.2e}"
        )
    return ok, "; ".join(parts)


def criterion_8(seed: int = 0, random_menus: int = 20):
    X, Q = _hn_prefix()
    parts, ok = [], True
    for B in HN_BASES:
        hn = hn_construct(X, Q, HNParams(B, len(X)))
        D = hn.distribution
        rng = stream(seed, f"prop-hn-{B}")
        cands = [random_scaled_mechanism(rng, D, int(rng.integers(1, 6))) for _ in range(random_menus)]
        cands += bundle_menus(D)
        rep = prop_hn_check(X, Q, B, cands)
        ok = ok and rep.ok
        parts.append(f"B={B}: {len(rep.violations)}/{len(rep.arevs)} violations, worst margin {float(rep.worst_margin):.4f}")
    return ok, "; ".join(parts)


def criterion_9(count: int = 100, seed: int = 0):
    rng = stream(seed, "theorem-ext")
    fails, vacuous = 0, 0
    for _ in range(count):
        D = random_distribution(rng, int(rng.integers(1, 9)), int(rng.integers(1, 4)))
        M = random_aligned_mechanism(rng, D)
        cert = theorem_ext_pipeline(D, M)
        vacuous += cert.provenance.endswith("vacuous")
        fails += not cert.passed
    return fails == 0, f"{count - fails}/{count} aligned certificates pass ({vacuous} vacuous)"


def criterion_10(count: int = 1000, seed: int = 0):
    rng = stream(seed, "menu-complexity")
    bad = 0
    for _ in range(count):
        k = int(rng.integers(1, 4))
        D = random_distribution(rng, int(rng.integers(1, 9)), k)
        M = random_mechanism(rng, k, int(rng.integers(1, 7)))
        if revenue(D, M).rev > M.complexity * brev(D)[1]:
            bad += 1
    return bad == 0, f"{bad}/{count} pairs exceed (non-zero options) x BRev"


CRITERIA = [
    (1, "relaxation bound <= 6 and search below relaxation", 120, criterion_1),
    (2, "per-index and per-layer gap lower bounds", 60, criterion_2),
    (3, "cumulative gap dominates the divergent series", 60, criterion_3),
    (4, "k=1 sequences have MenuGap 1", 120, criterion_4),
    (5, "bruteforce/search/LP/SupGap sandwich", 300, criterion_5),
    (6, "Rev/BRev <= 9 MenuGap pipeline", 600, criterion_6),
    (7, "sequence-to-auction round trip", 60, criterion_7),
    (8, "ARev <= relaxation + 1/B falsification", 120, criterion_8),
    (9, "ARev/BRev <= 9 AlignGap pipeline", 300, criterion_9),
    (10, "Rev <= menu size x BRev", 60, criterion_10),
]

QUICK_ARGS = {4: {"count": 20}, 5: {"count": 100}, 6: {"count": 30}, 9: {"count": 20}, 10: {"count": 200}}


def run_criterion(number: int, quick: bool = False, seed: int = 0) -> CriterionResult:
    for num, name, budget, fn in CRITERIA:
        if num == number:
            kwargs = dict(QUICK_ARGS.get(num, {})) if quick else {}
            if "seed" in fn.__code__.co_varnames:
                kwargs["seed"] = seed
            return _timed(num, name, budget, lambda: fn(**kwargs))
    raise ValueError(f"no criterion {number}")


def run_all(quick: bool = False, seed: int = 0, only: Optional[list] = None) -> list:
    numbers = only or [c[0] for c in CRITERIA]
    return [run_criterion(n, quick, seed) for n in numbers]
