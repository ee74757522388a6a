from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from menugap.auctions import (
    AuctionError,
    DiscreteDistribution,
    Mechanism,
    arev,
    brev,
    buyer_choice,
    c_expensive,
    parity_split,
    revenue,
    verify_ic_ir,
)
from menugap.gapopt import optimal_mechanism_lp
from menugap.instances import random_distribution, random_mechanism, stream

TWO_POINT = DiscreteDistribution(2, [((4, 0), F(1, 2)), ((0, 16), F(1, 2))], "rational")
TWO_MENU = Mechanism([((1, 0), 4), ((0, 1), 16)], backend="rational")


def test_buyer_choice_examples():
    M = Mechanism([((1, 1), 1)])
    ch = buyer_choice(M, (1, 1))
    assert ch.entry.price == 1 and ch.utility == 1
    ch = buyer_choice(Mechanism([((1, 0), 1)]), (1, 0))
    assert ch.entry.price == 1 and ch.utility == 0 and ch.tie


def test_zero_option_always_present():
    M = Mechanism([((1, 0), 3)])
    assert M.menu[0].q == (0, 0) and M.menu[0].price == 0
    assert M.complexity == 1
    assert buyer_choice(M, (1, 0)).utility >= 0


def test_revenue_examples():
    D = DiscreteDistribution(2, [((3, 2), 1)], "rational")
    assert revenue(D, Mechanism([((1, 1), 5)])).rev == 5
    r = revenue(TWO_POINT, TWO_MENU)
    assert r.rev == 10 and r.arev == 10
    assert (r.brev_price, r.brev) == (16, 8)


def test_brev_examples():
    assert brev(DiscreteDistribution(2, [((1, 1), 1)], "rational")) == (2, 2)
    D = DiscreteDistribution(1, [((1,), F(1, 2)), ((4,), F(1, 2))], "rational")
    assert brev(D) == (4, 2)
    assert brev(TWO_POINT) == (16, 8)
    assert brev(DiscreteDistribution(2, [((0, 0), 1)], "rational")) == (0, 0)


def test_misaligned_purchase_not_counted():
    D = DiscreteDistribution(2, [((4, 4), 1)], "rational")
    M = Mechanism([((1, 0), 2)], backend="rational")
    assert revenue(D, M).rev == 2
    assert arev(D, M) == 0


def test_distribution_validation():
    with pytest.raises(AuctionError):
        DiscreteDistribution(1, [((1,), F(1, 2))], "rational")
    with pytest.raises(AuctionError):
        DiscreteDistribution(2, [((1,), 1)])
    with pytest.raises(AuctionError):
        DiscreteDistribution(1, [((-1,), 1)])
    D = DiscreteDistribution(1, [((1,), F(1, 2)), ((1,), F(1, 2))], "rational")
    assert len(D) == 1


def test_verify_reports_perturbation():
    opt = optimal_mechanism_lp(TWO_POINT)
    assert verify_ic_ir(TWO_POINT, opt.mechanism, opt.assignment).ok
    eps = F(1, 7)
    M = Mechanism([((1, 0), 4 + eps), ((0, 1), 16)], backend="rational")
    rep = verify_ic_ir(TWO_POINT, M, [M.index_of((1, 0), 4 + eps), M.index_of((0, 1), 16)])
    assert not rep.ok
    assert rep.worst == eps


def test_c_expensive_examples():
    M = Mechanism([((1, 0), F(1, 2)), ((0, 1), 4)], backend="rational")
    kept = c_expensive(M, 1)
    assert sorted(e.price for e in kept.menu) == [0, 4]
    assert c_expensive(M, 0) == M


def test_parity_split_examples():
    M = Mechanism([((1, 0), 4), ((0, 1), 16)], backend="rational")
    odd, even = parity_split(M, 4)
    assert odd.complexity == 0 and even.complexity == 2
    M = Mechanism([((1, 0), 4), ((0, 1), 8)], backend="rational")
    odd, even = parity_split(M, 4)
    assert [e.price for e in odd.menu] == [0, 8]
    assert [e.price for e in even.menu] == [0, 4]
    with pytest.raises(AuctionError):
        parity_split(Mechanism([((1, 0), 1)]), 4)


def test_choice_is_deterministic():
    rng = stream(5, "det")
    D = random_distribution(rng, 8, 3)
    M = random_mechanism(rng, 3, 6)
    a = [buyer_choice(M, v) for v in D.values]
    b = [buyer_choice(M, v) for v in D.values]
    assert a == b


@st.composite
def instance(draw):
    seed = draw(st.integers(0, 10**6))
    rng = stream(seed, "auction-property")
    k = int(rng.integers(1, 4))
    D = random_distribution(rng, int(rng.integers(1, 9)), k)
    M = random_mechanism(rng, k, int(rng.integers(1, 7)))
    return D, M


@settings(max_examples=80, deadline=None)
@given(instance())
def test_revenue_ordering(dm):
    D, M = dm
    r = revenue(D, M)
    assert r.arev <= r.rev <= M.complexity * r.brev
    assert all(ch.utility >= 0 for ch in r.choices)


@settings(max_examples=80, deadline=None)
@given(instance(), st.fractions(0, 6, max_denominator=4))
def test_price_floor_loses_at_most_c(dm, c):
    D, M = dm
    assert revenue(D, c_expensive(M, c)).rev >= revenue(D, M).rev - c


@settings(max_examples=80, deadline=None)
@given(instance(), st.fractions(F(1, 4), 4, max_denominator=4))
def test_parity_halves_cover_revenue(dm, c):
    D, M = dm
    M1 = c_expensive(M, c)
    odd, even = parity_split(M1, c)
    assert revenue(D, odd).rev + revenue(D, even).rev >= revenue(D, M1).rev


@settings(max_examples=30, deadline=None)
@given(instance())
def test_bundle_revenue_below_optimum(dm):
    D, _ = dm
    assert brev(D)[1] <= optimal_mechanism_lp(D).value
