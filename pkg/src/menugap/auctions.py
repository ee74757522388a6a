"""Single additive buyer, finite-support distributions and finite menus.

The buyer picks the menu entry maximizing ``v . q - p``; ties go to the
higher price and then to the lower menu index.  Every mechanism carries the
all-zero option, so utilities are never negative.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .numeric import (
    Number,
    backend_of,
    check_backend,
    dot,
    dyadic_exponent,
    is_zero_vector,
    l1,
    to_number,
    to_vector,
)

FLOAT_TOL = 1e-9
PROB_TOL = 1e-12


class AuctionError(ValueError):
    pass


def _common(*objs) -> str:
    return "rational" if any(o.backend == "rational" for o in objs) else "float"


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite-support value distribution; duplicate support points are merged."""

    k: int
    support: tuple  # ((v, prob), ...)
    backend: str = "float"

    def __init__(self, k: int, support: Iterable, backend: Optional[str] = None):
        support = [(tuple(v), p) for v, p in support]
        if backend is None:
            backend = backend_of(*[v for v, _ in support], *[p for _, p in support])
        check_backend(backend)
        merged: dict = {}
        for idx, (v, p) in enumerate(support):
            vec = to_vector(v, backend)
            if len(vec) != k:
                raise AuctionError(f"support[{idx}].v has dimension {len(vec)}, expected k={k}")
            if any(c < 0 for c in vec):
                raise AuctionError(f"support[{idx}].v has a negative coordinate")
            prob = to_number(p, backend)
            if not prob > 0:
                raise AuctionError(f"support[{idx}].p must be positive")
            merged[vec] = merged.get(vec, 0) + prob
        total = sum(merged.values())
        if backend == "rational":
            if total != 1:
                raise AuctionError(f"probabilities sum to {total}, not 1")
        elif abs(total - 1.0) > PROB_TOL:
            raise AuctionError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "support", tuple(merged.items()))
        object.__setattr__(self, "backend", backend)

    def __len__(self) -> int:
        return len(self.support)

    @property
    def values(self) -> list:
        return [v for v, _ in self.support]

    @property
    def probs(self) -> list:
        return [p for _, p in self.support]

    def to_backend(self, backend: str) -> "DiscreteDistribution":
        if backend == self.backend:
            return self
        return DiscreteDistribution(self.k, self.support, backend)


@dataclass(frozen=True)
class MenuEntry:
    q: tuple
    price: Number


@dataclass(frozen=True)
class Mechanism:
    """A finite menu of (allocation, price) pairs, always including (0, 0)."""

    k: int
    menu: tuple
    backend: str = "float"

    def __init__(self, menu: Iterable, k: Optional[int] = None, backend: Optional[str] = None):
        raw = []
        for e in menu:
            if isinstance(e, MenuEntry):
                raw.append((e.q, e.price))
            else:
                q, p = e
                raw.append((tuple(q), p))
        if k is None:
            if not raw:
                raise AuctionError("cannot infer k from an empty menu")
            k = len(raw[0][0])
        if backend is None:
            backend = backend_of(*[q for q, _ in raw], *[p for _, p in raw])
        check_backend(backend)
        entries, seen = [], set()
        zero_q = tuple(to_number(0, backend) for _ in range(k))
        zero = MenuEntry(zero_q, to_number(0, backend))
        for idx, (q, p) in enumerate(raw):
            qv = to_vector(q, backend)
            if len(qv) != k:
                raise AuctionError(f"menu[{idx}].q has dimension {len(qv)}, expected k={k}")
            if any(c < 0 or c > 1 for c in qv):
                raise AuctionError(f"menu[{idx}].q leaves [0,1]^k")
            entry = MenuEntry(qv, to_number(p, backend))
            if entry not in seen:
                seen.add(entry)
                entries.append(entry)
        if zero not in seen:
            entries.insert(0, zero)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "menu", tuple(entries))
        object.__setattr__(self, "backend", backend)

    def __len__(self) -> int:
        return len(self.menu)

    @property
    def complexity(self) -> int:
        """Number of options besides the mandatory zero pair."""
        return sum(1 for e in self.menu if not (is_zero_vector(e.q) and e.price == 0))

    def index_of(self, q, price) -> int:
        return self.menu.index(MenuEntry(tuple(q), price))

    def to_backend(self, backend: str) -> "Mechanism":
        if backend == self.backend:
            return self
        return Mechanism(self.menu, self.k, backend)


@dataclass(frozen=True)
class Choice:
    index: int
    entry: MenuEntry
    utility: Number
    tie: bool


def buyer_choice(M: Mechanism, v: Sequence, tol: float = FLOAT_TOL) -> Choice:
    """Utility-maximizing entry for valuation ``v`` (seller-favorable tie-breaking)."""
    if len(v) != M.k:
        raise AuctionError(f"valuation has dimension {len(v)}, mechanism has k={M.k}")
    utils = [dot(v, e.q) - e.price for e in M.menu]
    best = max(utils)
    if M.backend == "rational" and backend_of(tuple(v)) == "rational":
        tied = [i for i, u in enumerate(utils) if u == best]
    else:
        slack = tol * max(1.0, abs(float(best)), float(l1(v)))
        tied = [i for i, u in enumerate(utils) if u >= best - slack]
    idx = min(tied, key=lambda i: (-M.menu[i].price, i))
    return Choice(idx, M.menu[idx], utils[idx], len(tied) > 1)


def is_parallel(q: Sequence, v: Sequence, tol: float = FLOAT_TOL) -> bool:
    """True when q = c v for some c >= 0 (the zero allocation counts as parallel)."""
    if is_zero_vector(q):
        return True
    if is_zero_vector(v):
        return False
    exact = backend_of(tuple(q), tuple(v)) == "rational" and all(isinstance(a, Fraction) for a in (*q, *v))
    if dot(q, v) <= 0:
        return False
    k = len(q)
    if exact:
        return all(q[a] * v[b] == q[b] * v[a] for a in range(k) for b in range(a + 1, k))
    nq = float(dot(q, q)) ** 0.5
    nv = float(dot(v, v)) ** 0.5
    bound = tol * nq * nv
    return all(abs(float(q[a] * v[b] - q[b] * v[a])) <= bound for a in range(k) for b in range(a + 1, k))


@dataclass(frozen=True)
class RevenueReport:
    choices: list  # Choice per support point, in support order
    payments: list
    aligned: list
    rev: Number
    arev: Number
    brev: Number
    brev_price: Number


def brev(D: DiscreteDistribution):
    """Best grand-bundle posted price: returns (price, revenue).

    Candidates are the distinct positive bundle values ||v||_1; on ties the
    lowest price wins.
    """
    zero = to_number(0, D.backend)
    sums = [(l1(v), p) for v, p in D.support]
    best_price, best_val = zero, zero
    for price in sorted({s for s, _ in sums if s > 0}):
        val = price * sum((p for s, p in sums if s >= price), start=zero)
        if val > best_val:
            best_price, best_val = price, val
    return best_price, best_val


def revenue(D: DiscreteDistribution, M: Mechanism, tol: float = FLOAT_TOL) -> RevenueReport:
    if D.k != M.k:
        raise AuctionError(f"dimension mismatch: D has k={D.k}, M has k={M.k}")
    backend = _common(D, M)
    D, M = D.to_backend(backend), M.to_backend(backend)
    zero = to_number(0, backend)
    choices, payments, aligned = [], [], []
    rev = arev_ = zero
    for v, p in D.support:
        ch = buyer_choice(M, v, tol)
        al = is_parallel(ch.entry.q, v, tol)
        choices.append(ch)
        payments.append(ch.entry.price)
        aligned.append(al)
        rev += p * ch.entry.price
        if al:
            arev_ += p * ch.entry.price
    price, bval = brev(D)
    return RevenueReport(choices, payments, aligned, rev, arev_, bval, price)


def arev(D: DiscreteDistribution, M: Mechanism, tol: float = FLOAT_TOL) -> Number:
    """Expected payment counting only buyers whose purchase is parallel to their values."""
    return revenue(D, M, tol).arev


@dataclass(frozen=True)
class ICReport:
    violations: list  # (support index, kind, margin)
    worst: Number
    assignment: list

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_ic_ir(D: DiscreteDistribution, M: Mechanism, assignment: Optional[Sequence[int]] = None, tol: float = 0.0) -> ICReport:
    """Check that each support point's designated entry is a best response and IR.

    ``assignment[s]`` is the menu index designated for support point ``s``;
    by default it is the buyer's own choice.  Violations are reported with
    their margin, never raised.  ``tol`` is an absolute slack for the float
    backend.
    """
    backend = _common(D, M)
    D, M = D.to_backend(backend), M.to_backend(backend)
    if assignment is None:
        assignment = [buyer_choice(M, v).index for v in D.values]
    zero = to_number(0, backend)
    violations, worst = [], zero
    for s, (v, _) in enumerate(D.support):
        e = M.menu[assignment[s]]
        u = dot(v, e.q) - e.price
        if -u > tol:
            violations.append((s, "IR", -u))
            worst = max(worst, -u)
        for t, other in enumerate(M.menu):
            gain = dot(v, other.q) - other.price - u
            if gain > tol:
                violations.append((s, f"IC->{t}", gain))
                worst = max(worst, gain)
    return ICReport(violations, worst, list(assignment))


def c_expensive(M: Mechanism, c) -> Mechanism:
    """Drop every entry priced below ``c``; the zero option is reinstated."""
    if c < 0:
        raise AuctionError("c must be nonnegative")
    kept = [e for e in M.menu if e.price >= c]
    return Mechanism(kept, M.k, M.backend)


def price_band(price, c) -> int:
    """The integer i with c 2^i <= price < c 2^(i+1)."""
    return dyadic_exponent(price / c)


def _is_zero_option(e: MenuEntry) -> bool:
    return is_zero_vector(e.q) and e.price == 0


def is_c_expensive(M: Mechanism, c) -> bool:
    return all(e.price >= c for e in M.menu if not _is_zero_option(e))


def price_parity(M: Mechanism, c) -> Optional[str]:
    """``"odd"``/``"even"`` if every priced entry sits in bands of one parity, else None.

    A menu with only the zero option reports ``"even"``.
    """
    parities = {price_band(e.price, c) % 2 for e in M.menu if not _is_zero_option(e)}
    if len(parities) > 1:
        return None
    return "odd" if parities == {1} else "even"


def parity_split(M: Mechanism, c):
    """Split a c-expensive menu by the parity of each price's dyadic band: (M_odd, M_even)."""
    if not c > 0:
        raise AuctionError("parity split needs c > 0")
    if not is_c_expensive(M, c):
        raise AuctionError("mechanism is not c-expensive")
    odd, even = [], []
    for e in M.menu:
        if _is_zero_option(e):
            continue
        (odd if price_band(e.price, c) % 2 else even).append(e)
    return Mechanism(odd, M.k, M.backend), Mechanism(even, M.k, M.backend)
