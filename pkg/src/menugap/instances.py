"""Seeded random instances for property checks.

All randomness goes through ``stream(seed, name)`` so that each consumer
draws from its own reproducible generator.
"""

from __future__ import annotations

import zlib
from fractions import Fraction

import numpy as np

from .auctions import DiscreteDistribution, Mechanism
from .sequences import PointSequence


def stream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])


def _rat(rng, lo: int, hi: int, den: int) -> Fraction:
    return Fraction(int(rng.integers(lo * den, hi * den + 1)), den)


def random_points(rng, n: int, k: int, den: int = 8, hi: int = 4) -> PointSequence:
    """n nonzero rational points with coordinates in {0, 1/den, ..., hi}."""
    pts = []
    while len(pts) < n:
        p = tuple(_rat(rng, 0, hi, den) for _ in range(k))
        if any(p):
            pts.append(p)
    return PointSequence(k, pts, backend="rational")


def random_distribution(rng, m: int, k: int, den: int = 4, hi: int = 8) -> DiscreteDistribution:
    """Up to m support points (duplicates merge) with random rational weights."""
    values = [tuple(_rat(rng, 0, hi, den) for _ in range(k)) for _ in range(m)]
    weights = [int(w) for w in rng.integers(1, 10, m)]
    total = sum(weights)
    return DiscreteDistribution(k, [(v, Fraction(w, total)) for v, w in zip(values, weights)], "rational")


def random_mechanism(rng, k: int, size: int, price_hi=8, den: int = 4) -> Mechanism:
    menu = []
    for _ in range(size):
        q = tuple(Fraction(int(rng.integers(0, den + 1)), den) for _ in range(k))
        price = Fraction(int(rng.integers(0, int(price_hi * den) + 1)), den)
        menu.append((q, price))
    return Mechanism(menu, k, "rational")


def random_scaled_mechanism(rng, D: DiscreteDistribution, size: int, den: int = 8) -> Mechanism:
    """Random menu whose prices track the scale of D's support (for widely spread values)."""
    k = D.k
    sums = [sum(v) for v in D.values if any(v)] or [Fraction(1)]
    menu = []
    for _ in range(size):
        q = tuple(Fraction(int(rng.integers(0, den + 1)), den) for _ in range(k))
        ref = sums[int(rng.integers(0, len(sums)))]
        menu.append((q, ref * Fraction(int(rng.integers(0, den + 1)), den)))
    return Mechanism(menu, k, D.backend)


def random_aligned_mechanism(rng, D: DiscreteDistribution, den: int = 4) -> Mechanism:
    """For each support point v a menu entry (t v/||v||_inf, price) with random t and price.

    Buyers may still pick another point's entry, so some purchases end up
    misaligned; arev counts only the parallel ones.
    """
    menu = []
    for v in D.values:
        if not any(v):
            continue
        top = max(v)
        t = Fraction(int(rng.integers(1, den + 1)), den)
        q = tuple(t * c / top for c in v)
        surplus = sum(a * b for a, b in zip(q, v))
        menu.append((q, surplus * Fraction(int(rng.integers(1, den + 1)), den)))
    if not menu:
        menu = [(tuple(Fraction(0) for _ in range(D.k)), Fraction(0))]
    return Mechanism(menu, D.k, "rational")
