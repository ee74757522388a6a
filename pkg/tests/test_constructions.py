import math

import pytest

from menugap import constructions as cons
from menugap.gapcore import menu_gap_terms
from menugap.numeric import l2_squared

# Euler-Maclaurin with 20000 explicit terms at 30 digits (mpmath): 2.10974280123689197...
ALPHA_ORACLE = 2.109742801236892


@pytest.fixture(scope="module")
def full():
    X, Q, specs = cons.build_construction(40)
    return X, Q, specs


def test_alpha_enclosure():
    a = cons.alpha_enclosure(1e-12)
    assert a.lo <= ALPHA_ORACLE <= a.hi
    assert a.width <= 1e-12
    coarse = cons.alpha_enclosure(1.0)
    assert 1.9 < coarse.lo and coarse.hi <= 3
    assert coarse.lo <= a.lo and a.hi <= coarse.hi


def test_layer_shapes():
    s2, s3 = cons.LayerSpec.for_layer(2), cons.LayerSpec.for_layer(3)
    assert (s2.n_ell, s3.n_ell) == (3, 7)
    assert s2.theta_ell == pytest.approx(math.pi / 4)
    assert s2.point(0) == (1.0, 0.0)
    assert s2.point(1) == pytest.approx((math.sqrt(2) / 2, math.sqrt(2) / 2))
    assert s2.point(2) == pytest.approx((0, 1), abs=1e-15)
    assert s3.point(0) == (0.0, 1.0)
    assert s3.point(6) == pytest.approx((1, 0), abs=1e-15)


def test_point_count_at_40_layers(full):
    X, Q, _ = full
    assert len(X) == 9084
    assert len(Q) == 9085


def test_points_are_unit(full):
    X, _, _ = full
    assert all(abs(l2_squared(p) - 1) <= 1e-12 for p in X.body)


def test_allocations_valid(full):
    _, Q, specs = full
    qs = Q.allocations
    assert all(0 <= c <= 1 for q in qs for c in q)
    for s, start in zip(specs, cons.layer_offsets(specs)):
        if s.even:
            assert qs[start + s.n_ell][1] == 1.0


def test_first_allocation():
    X, Q, _ = cons.build_construction(4)
    d2 = cons.delta(2)
    assert Q.allocations[1][1] == pytest.approx(1 - d2)


def test_fast_path_matches_full_evaluation(full):
    X, Q, _ = full
    slow = menu_gap_terms(X, Q)
    fast = cons.fast_gap_terms(40)
    assert fast.terms == slow.terms
    assert fast.total == slow.total


def test_fast_path_matches_rational():
    X, Q, _ = cons.build_construction(6, backend="rational")
    assert cons.fast_gap_terms(6, backend="rational").terms == menu_gap_terms(X, Q).terms


def test_frozen_gap_totals():
    # computed by the O(N^2) evaluator at 40 layers
    assert cons.fast_gap_terms(40).total == pytest.approx(1.4956219652022529, rel=1e-12)
    assert cons.divergence_partial(40) == pytest.approx(0.14106268720637555, rel=1e-12)


def test_odd_layers_score_zero():
    r = cons.fast_gap_terms(12)
    specs = cons.layer_specs(12)
    for s, start in zip(specs, cons.layer_offsets(specs)):
        if not s.even:
            assert all(t == 0 for t in r.terms[start : start + s.n_ell])


def test_gap_formula_values():
    for ell in (4, 10, 40):
        s = cons.LayerSpec.for_layer(ell)
        assert cons.gap_lower_formula(ell, 0) == pytest.approx(cons.delta(ell))
        # denominator at j = n - 1 is sin(n theta) = cos(theta), not 1
        last = cons.delta(ell) * math.sin(s.theta_ell) / math.cos(s.theta_ell)
        assert cons.gap_lower_formula(ell, s.n_ell - 1) == pytest.approx(last)
    with pytest.raises(ValueError):
        cons.gap_lower_formula(5, 0)


def test_layer_bound_closed_form():
    a = cons._default_alpha().hi
    assert cons.layer_gap_lower_bound(4) == pytest.approx(math.log(9) / (2 * a * 4 * math.log(4) ** 2))


def test_gap_bound_holds_before_last_index():
    r = cons.fast_gap_terms(40)
    specs = cons.layer_specs(40)
    for s, start in zip(specs, cons.layer_offsets(specs)):
        if s.even and s.ell > 2:
            for j in range(s.n_ell - 1):
                b = cons.gap_lower_formula(s.ell, j)
                assert r.terms[start + j] >= b * (1 - 1e-9)


def test_gap_bound_fails_at_last_index():
    # q_{n-2} and q_{n-1} coincide at (z, 1) because cot(pi/2) = 0, so the
    # gap of the last point of each even layer is exactly zero while the
    # per-index bound is positive there.
    r = cons.fast_gap_terms(12)
    specs = cons.layer_specs(12)
    for s, start in zip(specs, cons.layer_offsets(specs)):
        if s.even and s.ell > 2:
            assert r.terms[start + s.n_ell - 1] == 0
            assert cons.gap_lower_formula(s.ell, s.n_ell - 1) > 0


def test_layer_sums_meet_bound():
    r = cons.fast_gap_terms(40)
    specs = cons.layer_specs(40)
    sums = cons.layer_gap_sums(r, specs)
    for s in specs:
        if s.even and s.ell > 2:
            lb = cons.layer_gap_lower_bound(s.ell)
            formula_sum = sum(cons.gap_lower_formula(s.ell, j) for j in range(s.n_ell))
            assert formula_sum >= lb
            assert 0 < lb / sums[s.ell] <= 1


def test_divergence_growth_rate():
    a = cons._default_alpha().hi
    growth = cons.divergence_partial(2500) - cons.divergence_partial(50)
    # only even layers enter the sum, halving the ln ln growth constant
    assert growth == pytest.approx(math.log(2) / (4 * a), rel=0.2)
    assert growth != pytest.approx(math.log(2) / (2 * a), rel=0.2)


def test_cumulative_gap_beats_series():
    r = cons.fast_gap_terms(40)
    specs = cons.layer_specs(40)
    ends = [o + s.n_ell for s, o in zip(specs, cons.layer_offsets(specs))]
    norm = cons.layer_gap_sums(r, specs, normalized=True)
    even_sum = sum(v for ell, v in norm.items() if ell % 2 == 0 and ell > 2)
    assert even_sum >= cons.divergence_partial(40)
    cum = [r.cumulative[e - 1] for e in ends]
    assert cum == sorted(cum)


def test_relaxation_values():
    X, _ = cons.build_x_sequence(40)
    assert cons.lagrel_terms(X.prefix(3))[0] * 2 == pytest.approx(0.8284271247461902)
    assert cons.lagrel_closed_form(X) == pytest.approx(1.95321781128727, rel=1e-12)
    assert cons.lagrel_closed_form(X, terminal=True) == pytest.approx(1.95321781128727 + math.sqrt(2), rel=1e-12)
    assert cons.lagrel_tail_bound(2) == pytest.approx(2.466101397552499, rel=1e-9)
    assert cons.lagrel_tail_bound(41) == pytest.approx(0.4664299890523409, rel=1e-9)
    for ell in (2, 3, 10, 41, 200):
        assert cons.lagrel_tail_bound(ell) <= 6
    assert cons.lagrel_closed_form(X) + cons.lagrel_tail_bound(41) <= 6


def test_tail_bound_dominates_explicit_layers():
    explicit = sum(cons.layer_lagrel_term(ell) for ell in range(41, 400))
    assert explicit <= cons.lagrel_tail_bound(41)


def test_relaxation_rejects_non_unit():
    from menugap.sequences import PointSequence

    with pytest.raises(ValueError):
        cons.lagrel_closed_form(PointSequence(2, [(1, 1)]))
