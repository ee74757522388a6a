import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from menugap import constructions as cons
from menugap.auctions import DiscreteDistribution, brev, verify_ic_ir
from menugap.gapcore import align_gap_terms, menu_gap_terms, sup_gap
from menugap.gapopt import (
    SolverError,
    align_gap_bruteforce,
    align_gap_search,
    lagrel_chain,
    menu_gap_lp,
    optimal_mechanism_lp,
)
from menugap.instances import random_distribution, random_points, stream
from menugap.numeric import l1, l2_squared, linf
from menugap.sequences import PointSequence, ScalarSequence


def test_k1_lp_is_one():
    X = PointSequence(1, [(F(3),), (F(1, 2),), (F(7),)])
    assert menu_gap_lp(X).objective == 1


def test_orthogonal_pair_lp():
    X = PointSequence(2, [(F(1), F(0)), (F(0), F(1))])
    sol = menu_gap_lp(X)
    assert sol.objective == 2
    assert menu_gap_terms(X, sol.q_star).total == 2
    assert sol.q_star.allocations[1] == (1, 0)
    assert sol.q_star.allocations[2][1] == 1


def test_float_lp_agrees():
    X = random_points(stream(3, "lp-float"), 7, 3)
    exact = menu_gap_lp(X).objective
    approx = menu_gap_lp(X.to_backend("float"))
    assert approx.objective == pytest.approx(float(exact), rel=1e-9)
    assert menu_gap_terms(X.to_backend("float"), approx.q_star).total == pytest.approx(approx.objective, rel=1e-9)


def test_lp_cap():
    with pytest.raises(SolverError):
        menu_gap_lp(random_points(stream(0, "cap"), 5, 2), cap=4)


def test_lp_dominates_construction_allocations():
    X, Q, _ = cons.build_construction(6)
    for n in (10, 35, 60):
        assert menu_gap_lp(X.prefix(n)).objective >= menu_gap_terms(X.prefix(n), Q.prefix(n)).total - 1e-9


@st.composite
def small_points(draw, n_max=6, hi=1):
    k = draw(st.integers(1, 3))
    n = draw(st.integers(1, n_max))
    pts = []
    for _ in range(n):
        p = tuple(draw(st.fractions(0, hi, max_denominator=6)) for _ in range(k))
        pts.append(p if any(p) else (F(hi),) + p[1:])
    return PointSequence(k, pts, backend="rational")


@settings(max_examples=60, deadline=None)
@given(small_points())
def test_lp_objective_matches_witness(X):
    sol = menu_gap_lp(X)
    assert menu_gap_terms(X, sol.q_star).total == sol.objective


@settings(max_examples=60, deadline=None)
@given(small_points())
def test_lp_at_least_sup_gap(X):
    assert menu_gap_lp(X).objective >= sup_gap(X.with_origin()).total


@settings(max_examples=40, deadline=None)
@given(small_points(n_max=5), st.lists(st.fractions(F(1, 4), 4, max_denominator=4), min_size=5, max_size=5))
def test_lp_invariant_under_rescaling(X, factors):
    Y = PointSequence(X.k, [tuple(f * c for c in p) for f, p in zip(factors, X.body)], backend="rational")
    assert menu_gap_lp(Y).objective == menu_gap_lp(X).objective


@settings(max_examples=40, deadline=None)
@given(small_points(n_max=5), st.tuples(st.fractions(0, 1, max_denominator=5), st.fractions(0, 1, max_denominator=5)))
def test_appending_never_decreases(X, extra):
    p = tuple(list(extra) + [F(1)] * X.k)[: X.k]
    p = p if any(p) else (F(1),) + p[1:]
    Y = PointSequence(X.k, list(X.body) + [p], backend="rational")
    assert menu_gap_lp(Y).objective >= menu_gap_lp(X).objective


def test_search_examples():
    X = PointSequence(1, [(F(1),), (F(2),), (F(4),)])
    value, C = align_gap_search(X)
    assert value == 1
    assert align_gap_bruteforce(X, 128) == 1
    x = (F(3), F(1), F(2))
    one = PointSequence(3, [x])
    value, _ = align_gap_search(one)
    assert value == (1 / linf(x)) * l2_squared(x) / l1(x)
    assert align_gap_bruteforce(one, 7) == value


def test_search_is_deterministic():
    X = random_points(stream(1, "det"), 6, 2)
    assert align_gap_search(X, seed=5) == align_gap_search(X, seed=5)


def test_bruteforce_guards():
    with pytest.raises(ValueError):
        align_gap_bruteforce(random_points(stream(0, "g"), 7, 2), 2)
    with pytest.raises(ValueError):
        align_gap_bruteforce(random_points(stream(0, "g"), 3, 2), 300)
    with pytest.raises(ValueError):
        align_gap_bruteforce(random_points(stream(0, "g"), 6, 2), 20)


def test_search_vs_bruteforce_on_small_instances():
    rng = stream(11, "brute")
    for t in range(30):
        X = random_points(rng, 3, int(rng.integers(1, 4)))
        r = 24
        brute = align_gap_bruteforce(X, r)
        value, C = align_gap_search(X, seed=t)
        assert value >= brute - F(2, r) * sum(l1(x) for x in X.body)
        assert value == align_gap_terms(X, C).total
        assert value <= 1 or X.k > 1
        if X.k == 1:
            assert brute <= 1


def test_relaxation_matches_closed_form():
    X, _ = cons.build_x_sequence(12)
    rep = lagrel_chain(X)
    assert rep.lagrel == pytest.approx(cons.lagrel_closed_form(X, terminal=True), rel=1e-12)
    assert rep.chain_valid
    assert rep.lagrel1 == rep.lagrel2
    Xr = X.prefix(40).to_backend("rational")
    exact = lagrel_chain(Xr)
    assert exact.lagrel1 == exact.lagrel2 == exact.lagrel
    assert float(exact.lagrel) == pytest.approx(cons.lagrel_closed_form(X.prefix(40), terminal=True), rel=1e-12)


def test_relaxation_rejects_non_unit():
    with pytest.raises(ValueError):
        lagrel_chain(PointSequence(2, [(1, 1)]))


def test_relaxed_program_exceeds_relaxation():
    # The relaxed program (no l1 normalization, c <= sqrt 2) beats the
    # Lagrangian value on a short prefix, so that link of the chain fails.
    X, _ = cons.build_x_sequence(6, "rational")
    rep = lagrel_chain(X, prime_search=True)
    assert rep.aligngap_prime > rep.lagrel
    assert not rep.chain_valid


def test_aligngap_exceeds_relaxation_on_seven_points():
    # Exact witness: c = (1, 0, 1, 0, 0, 0, cap) on the first seven points.
    X, _ = cons.build_x_sequence(3, "rational")
    P = X.prefix(7)
    cap = 1 / linf(P.body[6])
    C = ScalarSequence([0, 1, 0, 1, 0, 0, 0, cap], "rational")
    value = align_gap_terms(P, C).total
    assert float(value) == pytest.approx(2.5, abs=1e-12)
    assert value > cons.lagrel_closed_form(P, terminal=True)
    search, _ = align_gap_search(P)
    assert search >= value - F(1, 10**12)


def test_optimal_mechanism_examples():
    D = DiscreteDistribution(2, [((1, 1), 1)], "rational")
    assert optimal_mechanism_lp(D).value == 2
    D = DiscreteDistribution(1, [((1,), F(1, 2)), ((2,), F(1, 2))], "rational")
    res = optimal_mechanism_lp(D)
    assert res.value == 1
    D = DiscreteDistribution(2, [((4, 0), F(1, 2)), ((0, 16), F(1, 2))], "rational")
    assert optimal_mechanism_lp(D).value == 10


def test_optimal_mechanism_properties():
    rng = stream(2, "optmech")
    for _ in range(25):
        D = random_distribution(rng, int(rng.integers(1, 11)), int(rng.integers(1, 4)))
        res = optimal_mechanism_lp(D)
        assert verify_ic_ir(D, res.mechanism, res.assignment).ok
        assert res.value >= brev(D)[1]


def test_optimal_mechanism_cap():
    D = random_distribution(stream(0, "cap"), 6, 2)
    with pytest.raises(SolverError):
        optimal_mechanism_lp(D, cap=2)
