"""Scalar backends and small vector helpers shared by every module.

Two backends are supported: ``"float"`` (IEEE doubles) and ``"rational"``
(:class:`fractions.Fraction`).  Vectors are plain tuples so both backends go
through the same code paths; only the numpy fast paths are float-specific.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal, Sequence, Union

Number = Union[float, Fraction]
Vector = tuple
Backend = Literal["float", "rational"]

BACKENDS = ("float", "rational")


def check_backend(backend: str) -> str:
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    return backend


def to_number(value, backend: str = "float") -> Number:
    """Convert ``value`` (int, float, Fraction or numeric string) to the backend type.

    Float to rational conversion is exact (the binary value of the double).
    """
    check_backend(backend)
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, str):
        value = Fraction(value.strip())
    if backend == "rational":
        if isinstance(value, Fraction):
            return value
        if isinstance(value, float):
            if not math.isfinite(value):
                raise ValueError(f"non-finite value {value!r}")
            return Fraction(value)
        return Fraction(value)
    out = float(value)
    if not math.isfinite(out):
        raise ValueError(f"non-finite value {value!r}")
    return out


def to_vector(values: Iterable, backend: str = "float") -> Vector:
    return tuple(to_number(v, backend) for v in values)


def backend_of(*values) -> str:
    """``"rational"`` if any (possibly nested) entry is a Fraction, else ``"float"``."""
    for v in values:
        if isinstance(v, Fraction):
            return "rational"
        if isinstance(v, (tuple, list)) and v and backend_of(*v) == "rational":
            return "rational"
    return "float"


def dot(a: Sequence[Number], b: Sequence[Number]) -> Number:
    return sum((x * y for x, y in zip(a, b)), start=_zero_like(a))


def sub(a: Sequence[Number], b: Sequence[Number]) -> Vector:
    return tuple(x - y for x, y in zip(a, b))


def scale(c: Number, a: Sequence[Number]) -> Vector:
    return tuple(c * x for x in a)


def l1(a: Sequence[Number]) -> Number:
    return sum((abs(x) for x in a), start=_zero_like(a))


def linf(a: Sequence[Number]) -> Number:
    return max((abs(x) for x in a), default=_zero_like(a))


def l2_squared(a: Sequence[Number]) -> Number:
    return dot(a, a)


def is_zero_vector(a: Sequence[Number]) -> bool:
    return all(x == 0 for x in a)


def _zero_like(a: Sequence[Number]) -> Number:
    for x in a:
        return Fraction(0) if isinstance(x, Fraction) else 0.0
    return 0.0


def zero(backend: str) -> Number:
    return Fraction(0) if backend == "rational" else 0.0


def one(backend: str) -> Number:
    return Fraction(1) if backend == "rational" else 1.0


def format_number(x: Number):
    """JSON/CSV friendly form: rationals become ``"num/den"`` strings, floats stay floats."""
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return x
    return float(x)


def format_csv(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def dyadic_exponent(ratio: Number) -> int:
    """The integer ``i`` with ``2**i <= ratio < 2**(i+1)``, computed without rounding error."""
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    if isinstance(ratio, float):
        mantissa, exp = math.frexp(ratio)  # ratio = mantissa * 2**exp, 0.5 <= mantissa < 1
        return exp - 1
    r = Fraction(ratio)
    if r >= 1:
        return (r.numerator // r.denominator).bit_length() - 1
    # r < 1: 2**i <= r  <=>  2**-i >= 1/r
    inv = 1 / r
    i = -((inv.numerator // inv.denominator).bit_length() - 1)
    if Fraction(2) ** i > r:
        i -= 1
    return i


def exact_sqrt_upper(x: Fraction, bits: int = 80) -> Fraction:
    """A rational upper bound on sqrt(x) within ~2**-bits relative error."""
    if x < 0:
        raise ValueError("negative")
    if x == 0:
        return Fraction(0)
    scale_ = 1 << (2 * bits)
    n = (x.numerator * scale_) // x.denominator + 1
    r = math.isqrt(n)
    if r * r < n:
        r += 1
    return Fraction(r, 1 << bits)


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]`` of reals, used as a certified enclosure."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))
