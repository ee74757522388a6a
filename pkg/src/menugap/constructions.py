"""The layered unit-circle sequence X, its companion allocation sequence Q, and their bounds.

Layer ``ell >= 2`` has ``n_ell = ell * ceil(ln(ell)^2) + 1`` unit vectors evenly
spaced in angle between (1,0) and (0,1); even layers run counterclockwise from
(1,0), odd layers clockwise from (0,1).  Q assigns each even-layer point an
allocation on a vertical line x = z_ell and lets odd-layer points copy the best
earlier allocation, so odd layers contribute zero gap.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import mpmath
import numpy as np

from .numeric import Interval, check_backend, dot, exact_sqrt_upper, l2_squared, sub
from .sequences import AllocationSequence, GapReport, PointSequence, SequenceError, build_report
from .numeric import l1

DEFAULT_MAX_LAYER = 40
UNIT_NORM_TOL = 1e-12
# Floating error allowance when summing ~1e7 positive terms with fsum.
_SUM_PAD = 1e-14


def _series_term(ell):
    """1 / (ell ln^2 ell); accepts scalars or numpy arrays."""
    return 1.0 / (ell * np.log(ell) ** 2)


@lru_cache(maxsize=None)
def ceil_log_sq(ell: int) -> int:
    """ceil(ln(ell)^2), evaluated at 40 digits so near-integers are not misrounded."""
    with mpmath.workdps(40):
        return int(mpmath.ceil(mpmath.log(ell) ** 2))


@dataclass(frozen=True)
class LayerSpec:
    ell: int
    n_ell: int
    theta_ell: float
    direction: str  # "ccw" for even layers, "cw" for odd

    @classmethod
    def for_layer(cls, ell: int) -> "LayerSpec":
        if ell < 2:
            raise ValueError("layers start at ell = 2")
        n = ell * ceil_log_sq(ell) + 1
        return cls(ell, n, math.pi / (2 * (n - 1)), "ccw" if ell % 2 == 0 else "cw")

    @property
    def even(self) -> bool:
        return self.ell % 2 == 0

    def point(self, j: int) -> tuple:
        a = j * self.theta_ell
        if self.even:
            return (math.cos(a), math.sin(a))
        return (math.sin(a), math.cos(a))


def layer_specs(max_layer: int) -> list:
    if max_layer < 2:
        raise ValueError("max_layer must be at least 2")
    return [LayerSpec.for_layer(ell) for ell in range(2, max_layer + 1)]


def layer_offsets(specs) -> list:
    """0-based body index of each layer's first point."""
    out, pos = [], 0
    for s in specs:
        out.append(pos)
        pos += s.n_ell
    return out


# ---------------------------------------------------------------------------
# alpha = sum_{ell >= 2} 1/(ell ln^2 ell)


def _alpha_bounds_at(L: int, partial: float) -> Interval:
    # f(x) = 1/(x ln^2 x) is decreasing and convex on [2, inf):
    #   trapezoid: sum_{l > L} f(l) >= int_{L+1}^inf f + f(L+1)/2
    #   midpoint:  sum_{l > L} f(l) <= int_{L+1/2}^inf f
    lo = partial + 1.0 / math.log(L + 1) + 0.5 * float(_series_term(L + 1.0))
    hi = partial + 1.0 / math.log(L + 0.5)
    pad = _SUM_PAD * max(1.0, hi)
    return Interval(lo - pad, hi + pad)


def alpha_enclosure(tolerance: float = 1e-9, max_terms: int = 1 << 22) -> Interval:
    """Certified enclosure of alpha with width <= tolerance (when reachable).

    Partial sums grow along a doubling schedule and successive enclosures are
    intersected, so shrinking the tolerance never lowers ``lo``.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    L = 4
    partial = math.fsum(float(_series_term(float(ell))) for ell in range(2, L + 1))
    enc = _alpha_bounds_at(L, partial)
    while enc.width > tolerance and L < max_terms:
        nxt = 2 * L
        chunk = _series_term(np.arange(L + 1, nxt + 1, dtype=float))
        partial = math.fsum([partial, math.fsum(chunk)])
        L = nxt
        enc = enc.intersect(_alpha_bounds_at(L, partial))
    if enc.width > tolerance:
        warnings.warn(f"alpha enclosure width {enc.width:.3e} exceeds requested {tolerance:.3e}", RuntimeWarning)
    return enc


@lru_cache(maxsize=8)
def _default_alpha() -> Interval:
    return alpha_enclosure(1e-12)


def _alpha_hi(alpha: Optional[Interval]) -> float:
    return (alpha or _default_alpha()).hi


def delta(ell: int, alpha: Optional[Interval] = None) -> float:
    """z_ell - z_{ell-1} = 1/(alpha ell ln^2 ell), using the upper endpoint of alpha."""
    return float(_series_term(float(ell))) / _alpha_hi(alpha)


def z_levels(max_layer: int, alpha: Optional[Interval] = None) -> dict:
    """First coordinates z_ell for ell = 2..max_layer (monotone by construction)."""
    a = _alpha_hi(alpha)
    out, running = {}, 0.0
    for ell in range(2, max_layer + 1):
        running += float(_series_term(float(ell)))
        out[ell] = running / a
    return out


# ---------------------------------------------------------------------------
# Sequences


def build_x_sequence(max_layer: int = DEFAULT_MAX_LAYER, backend: str = "float"):
    """Concatenate the layers 2..max_layer; returns (PointSequence, [LayerSpec])."""
    check_backend(backend)
    specs = layer_specs(max_layer)
    pts = [s.point(j) for s in specs for j in range(s.n_ell)]
    return PointSequence(2, pts, backend=backend), specs


def _second_coordinate(spec: LayerSpec, j: int, d: float) -> float:
    if j == spec.n_ell - 1:
        return 1.0
    a = (j + 1) * spec.theta_ell
    return 1.0 - d * (math.cos(a) / math.sin(a))


def build_q_sequence(max_layer: int = DEFAULT_MAX_LAYER, alpha: Optional[Interval] = None, backend: str = "float") -> AllocationSequence:
    """Allocations aligned index-for-index with build_x_sequence, prefixed by q_0 = 0.

    Odd-layer points take the earlier allocation maximizing q . x (latest index
    on ties), searched over the Pareto frontier of earlier allocations, which
    attains the same maximum as the full history.
    """
    check_backend(backend)
    alpha = alpha or _default_alpha()
    if not alpha.lo > 1.9:
        raise SequenceError("alpha enclosure too wide: cannot certify alpha > 1.9, so z_{ell,j} >= 0 is not guaranteed")
    X, specs = build_x_sequence(max_layer, backend)
    z = z_levels(max_layer, alpha)
    conv = Fraction if backend == "rational" else float
    zero = (conv(0), conv(0))
    qs = [zero]
    frontier = [(zero, 0)]  # (allocation, emitted index), nondominated
    xs = X.body
    pos = 0
    for s in specs:
        d = delta(s.ell, alpha)
        for j in range(s.n_ell):
            x = xs[pos]
            if s.even:
                second = _second_coordinate(s, j, d)
                if not 0.0 <= second <= 1.0 or not 0.0 < z[s.ell] <= 1.0:
                    raise SequenceError(f"allocation for layer {s.ell}, j={j} leaves [0,1]^2")
                q = (conv(z[s.ell]), conv(second))
                frontier = [(f, idx) for f, idx in frontier if not (f[0] <= q[0] and f[1] <= q[1])]
                frontier.append((q, len(qs)))
            else:
                best, q = None, None
                for f, idx in frontier:
                    v = dot(f, x)
                    if best is None or v >= best:  # later frontier entries win ties
                        best, q = v, f
            qs.append(q)
            pos += 1
    return AllocationSequence(2, qs, backend)


def build_construction(max_layer: int = DEFAULT_MAX_LAYER, alpha: Optional[Interval] = None, backend: str = "float"):
    """(X, Q, specs) for the layered construction."""
    X, specs = build_x_sequence(max_layer, backend)
    return X, build_q_sequence(max_layer, alpha, backend), specs


# ---------------------------------------------------------------------------
# Gap bounds


def _check_even_layer(ell: int):
    if ell % 2 or ell <= 2:
        raise ValueError(f"the per-layer gap bound covers even layers ell > 2; got {ell}")


def gap_lower_formula(ell: int, j: int, alpha: Optional[Interval] = None) -> float:
    """delta_ell sin(theta_ell) / sin((j+1) theta_ell)."""
    _check_even_layer(ell)
    s = LayerSpec.for_layer(ell)
    if not 0 <= j <= s.n_ell - 1:
        raise ValueError(f"j must lie in [0, {s.n_ell - 1}]")
    return delta(ell, alpha) * math.sin(s.theta_ell) / math.sin((j + 1) * s.theta_ell)


def layer_gap_lower_bound(ell: int, alpha: Optional[Interval] = None) -> float:
    """delta_ell ln(n_ell) / 2."""
    _check_even_layer(ell)
    return delta(ell, alpha) * math.log(LayerSpec.for_layer(ell).n_ell) / 2


def divergence_partial(max_layer: int, alpha: Optional[Interval] = None) -> float:
    """sum over even ell in [4, max_layer] of 1/(2 alpha ell ln ell), alpha at its upper endpoint."""
    if max_layer < 4:
        raise ValueError("max_layer must be at least 4")
    a = _alpha_hi(alpha)
    return math.fsum(1.0 / (2 * a * ell * math.log(ell)) for ell in range(4, max_layer + 1, 2))


def fast_gap_terms(max_layer: int = DEFAULT_MAX_LAYER, alpha: Optional[Interval] = None, backend: str = "float") -> GapReport:
    """Linear-time MenuGap(X, Q) report for the layered construction.

    Even-layer gaps are set by the previous point of the same layer or by the
    last point of the previous even layer (q_0 for the first layer); odd-layer
    points copy an earlier allocation and score zero.  Witnesses name the
    candidate that sets the min, which need not be the smallest index
    attaining it.
    """
    X, Q, specs = build_construction(max_layer, alpha, backend)
    xs, qs = X.body, Q.allocations
    terms, witness = [], []
    prev_even_last = 0  # emitted index (1-based) of the last point of the previous even layer
    pos = 0
    for s in specs:
        for j in range(s.n_ell):
            i = pos + 1
            x, qi = xs[pos], qs[i]
            if s.even:
                best, arg = None, None
                for c in sorted([prev_even_last] + ([i - 1] if j > 0 else [])):
                    v = dot(sub(qi, qs[c]), x)
                    if best is None or v < best:
                        best, arg = v, c
            else:
                # q_i copies the best earlier allocation, so the gap is exactly zero
                arg = _copy_source(qs, i)
                best = dot(sub(qi, qs[arg]), x)
            terms.append(best)
            witness.append(arg)
            pos += 1
        if s.even:
            prev_even_last = pos
    norms = [l1(x) for x in xs]
    return build_report(terms, terms, norms, witness, "menu", X.backend)


def _copy_source(qs, i: int) -> int:
    for j in range(i - 1, -1, -1):
        if qs[j] == qs[i]:
            return j
    raise AssertionError("odd-layer allocation is not a copy of an earlier one")


def layer_gap_sums(report: GapReport, specs, normalized: bool = False) -> dict:
    """Per-layer sums of raw (default) or normalized gap terms, keyed by ell."""
    vals = report.normalized_terms if normalized else report.terms
    out = {}
    for s, start in zip(specs, layer_offsets(specs)):
        out[s.ell] = sum(vals[start : start + s.n_ell])
    return out


# ---------------------------------------------------------------------------
# Lagrangian relaxation closed form


def _require_unit(X: PointSequence):
    for idx, p in enumerate(X.body, start=1):
        if abs(float(l2_squared(p)) - 1.0) > UNIT_NORM_TOL:
            raise SequenceError(f"x_{idx} does not have unit l2 norm; the sqrt(2) relaxation constant assumes it")


def sqrt2(backend: str):
    """sqrt(2) as a float, or a rational upper bound on it."""
    return exact_sqrt_upper(Fraction(2)) if backend == "rational" else math.sqrt(2)


def lagrel_terms(X: PointSequence) -> list:
    """sqrt(2) (1 - x_i . x_{i+1}) for i = 1..N-1."""
    _require_unit(X)
    r2 = sqrt2(X.backend)
    xs = X.body
    return [r2 * (1 - dot(xs[i], xs[i + 1])) for i in range(len(xs) - 1)]


def lagrel_closed_form(X: PointSequence, terminal: bool = False):
    """sqrt(2) sum_i (1 - x_i . x_{i+1}) over unit vectors.

    With ``terminal=True`` the convention x_{N+1} = 0 is applied, adding
    sqrt(2) for the last point; that is the value of the relaxation for a
    finite sequence.  Prefix monitoring leaves it off.
    """
    terms = lagrel_terms(X)
    total = sum(terms, start=Fraction(0) if X.backend == "rational" else 0.0)
    if terminal and len(X):
        total += sqrt2(X.backend)
    return total


_TAIL_EXPLICIT = 4096


def lagrel_tail_bound(from_layer: int) -> float:
    """Upper bound on the relaxation mass of layers >= from_layer.

    Each layer contributes at most sqrt(2) pi^2 / (8 ell ceil(ln^2 ell)); the
    first few thousand terms are summed explicitly and the rest is bounded by
    the midpoint-rule integral of 1/(x ln^2 x).
    """
    if from_layer < 2:
        raise ValueError("from_layer must be at least 2")
    P = from_layer + _TAIL_EXPLICIT
    explicit = math.fsum(1.0 / (ell * ceil_log_sq(ell)) for ell in range(from_layer, P))
    tail = 1.0 / math.log(P - 0.5)
    const = math.sqrt(2) * math.pi**2 / 8
    return const * (explicit + tail) * (1 + 1e-12)


def layer_lagrel_term(ell: int) -> float:
    """sqrt(2) (n_ell - 1)(1 - cos theta_ell): exact in-layer relaxation mass."""
    s = LayerSpec.for_layer(ell)
    return math.sqrt(2) * (s.n_ell - 1) * (1 - math.cos(s.theta_ell))
