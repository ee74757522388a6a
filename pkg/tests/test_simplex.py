from fractions import Fraction as F

import numpy as np
import pytest
from scipy.optimize import linprog

from menugap.simplex import LPError, check_certificate, maximize


def test_textbook_lp():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
    res = maximize([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
    assert res.status == "optimal"
    assert res.objective == 36
    assert res.x == [2, 6]
    assert check_certificate([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18], res.x, res.duals)


def test_sparse_rows_and_unbounded():
    res = maximize([1, 1], [{0: 1}], [3])
    assert res.status == "unbounded"


def test_negative_rhs_rejected():
    with pytest.raises(LPError):
        maximize([1], [[1]], [-1])


def test_degenerate_lp():
    A = [[1, 1], [1, -1], [-1, 1], [1, 0]]
    res = maximize([1, 1], A, [0, 0, 0, 0])
    assert res.objective == 0


def test_matches_highs_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(60):
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        A = [[F(int(v), 3) for v in rng.integers(-3, 7, n)] for _ in range(m)]
        b = [F(int(v), 2) for v in rng.integers(0, 9, m)]
        c = [F(int(v)) for v in rng.integers(-2, 6, n)]
        res = maximize(c, A, b)
        ref = linprog(-np.array(c, float), A_ub=np.array(A, float), b_ub=np.array(b, float), method="highs")
        if res.status == "unbounded":
            assert ref.status in (2, 3)
            continue
        assert ref.status == 0
        assert float(res.objective) == pytest.approx(-ref.fun, abs=1e-7)
        assert check_certificate(c, A, b, res.x, res.duals)
