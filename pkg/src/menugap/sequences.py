"""Sequence value types: valuation directions, allocations, alignment scalars, gap reports."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .numeric import (
    Number,
    Vector,
    backend_of,
    check_backend,
    format_csv,
    is_zero_vector,
    linf,
    to_number,
    to_vector,
)

FLOAT_SCALAR_RTOL = 1e-12


class SequenceError(ValueError):
    """Raised for malformed sequences (dimension mismatch, negative or zero points...)."""


def _coerce_rows(rows, k: int, backend: str, what: str) -> tuple:
    out = []
    for idx, row in enumerate(rows):
        vec = to_vector(row, backend)
        if len(vec) != k:
            raise SequenceError(f"{what}[{idx}] has dimension {len(vec)}, expected k={k}")
        out.append(vec)
    return tuple(out)


@dataclass(frozen=True)
class PointSequence:
    """Ordered points x_1..x_N in the nonnegative orthant.

    When ``has_origin`` is set, ``points[0]`` is the zero sentinel x_0 and is
    not part of the gap sums (``body`` excludes it).
    """

    k: int
    points: tuple
    has_origin: bool = False
    backend: str = "float"

    def __init__(self, k: int, points: Iterable, has_origin: bool = False, backend: Optional[str] = None):
        points = list(points)
        if backend is None:
            backend = backend_of(*points)
        check_backend(backend)
        if k < 1:
            raise SequenceError("dimension k must be positive")
        rows = _coerce_rows(points, k, backend, "points")
        for idx, vec in enumerate(rows):
            if any(c < 0 for c in vec):
                raise SequenceError(f"points[{idx}] has a negative coordinate")
        if has_origin and (not rows or not is_zero_vector(rows[0])):
            raise SequenceError("has_origin requires points[0] to be the zero vector")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "points", rows)
        object.__setattr__(self, "has_origin", has_origin)
        object.__setattr__(self, "backend", backend)

    @property
    def body(self) -> tuple:
        return self.points[1:] if self.has_origin else self.points

    def __len__(self) -> int:
        return len(self.body)

    def to_backend(self, backend: str) -> "PointSequence":
        if backend == self.backend:
            return self
        return PointSequence(self.k, self.points, self.has_origin, backend)

    def with_origin(self) -> "PointSequence":
        if self.has_origin:
            return self
        zero = tuple(to_number(0, self.backend) for _ in range(self.k))
        return PointSequence(self.k, (zero,) + self.points, True, self.backend)

    def without_origin(self) -> "PointSequence":
        if not self.has_origin:
            return self
        return PointSequence(self.k, self.points[1:], False, self.backend)

    def prefix(self, n: int) -> "PointSequence":
        """First ``n`` body points (the origin, if present, is kept)."""
        head = 1 if self.has_origin else 0
        return PointSequence(self.k, self.points[: head + n], self.has_origin, self.backend)

    def window(self, start: int, stop: int) -> "PointSequence":
        return PointSequence(self.k, self.body[start:stop], False, self.backend)

    def scaled(self, s: Number) -> "PointSequence":
        return PointSequence(self.k, [tuple(s * c for c in p) for p in self.points], self.has_origin, self.backend)

    def require_nonzero(self):
        for idx, p in enumerate(self.body, start=1):
            if is_zero_vector(p):
                raise SequenceError(f"x_{idx} is the zero vector; its l1 normalization is undefined")


@dataclass(frozen=True)
class AllocationSequence:
    """Allocations q_0..q_N in [0,1]^k, with q_0 exactly zero."""

    k: int
    allocations: tuple
    backend: str = "float"

    def __init__(self, k: int, allocations: Iterable, backend: Optional[str] = None):
        allocations = list(allocations)
        if backend is None:
            backend = backend_of(*allocations)
        check_backend(backend)
        rows = _coerce_rows(allocations, k, backend, "allocations")
        if not rows:
            raise SequenceError("allocation sequence needs at least q_0")
        if not is_zero_vector(rows[0]):
            raise SequenceError("q_0 must be the zero vector")
        for idx, vec in enumerate(rows):
            if any(c < 0 or c > 1 for c in vec):
                raise SequenceError(f"allocations[{idx}] has a coordinate outside [0,1]")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "allocations", rows)
        object.__setattr__(self, "backend", backend)

    def __len__(self) -> int:
        return len(self.allocations)

    def to_backend(self, backend: str) -> "AllocationSequence":
        if backend == self.backend:
            return self
        return AllocationSequence(self.k, self.allocations, backend)

    def prefix(self, n: int) -> "AllocationSequence":
        return AllocationSequence(self.k, self.allocations[: n + 1], self.backend)


def scalar_cap(point: Vector) -> Number:
    """Largest admissible alignment scalar for ``point``: 1/||x||_inf."""
    return 1 / linf(point)


@dataclass(frozen=True)
class ScalarSequence:
    """Alignment scalars c_0..c_N with c_0 = 0, validated against a point sequence."""

    scalars: tuple
    backend: str = "float"

    def __init__(self, scalars: Iterable, backend: Optional[str] = None):
        scalars = list(scalars)
        if backend is None:
            backend = backend_of(*scalars)
        check_backend(backend)
        vals = tuple(to_number(c, backend) for c in scalars)
        if not vals or vals[0] != 0:
            raise SequenceError("c_0 must be 0")
        object.__setattr__(self, "scalars", vals)
        object.__setattr__(self, "backend", backend)

    def __len__(self) -> int:
        return len(self.scalars)

    def to_backend(self, backend: str) -> "ScalarSequence":
        if backend == self.backend:
            return self
        return ScalarSequence(self.scalars, backend)

    def validate_for(self, X: PointSequence) -> "ScalarSequence":
        body = X.body
        if len(self.scalars) != len(body) + 1:
            raise SequenceError(f"expected {len(body) + 1} scalars (c_0..c_N), got {len(self.scalars)}")
        for i, (c, x) in enumerate(zip(self.scalars[1:], body), start=1):
            if c < 0:
                raise SequenceError(f"c_{i} is negative")
            if is_zero_vector(x):
                raise SequenceError(f"x_{i} is the zero vector")
            cap = scalar_cap(x)
            if isinstance(c, Fraction) and isinstance(cap, Fraction):
                ok = c <= cap
            else:
                ok = float(c) <= float(cap) * (1 + FLOAT_SCALAR_RTOL)
            if not ok:
                raise SequenceError(f"c_{i} = {c} exceeds 1/||x_{i}||_inf = {cap}")
        return self

    @classmethod
    def for_points(cls, X: PointSequence, scalars: Iterable) -> "ScalarSequence":
        return cls(scalars, X.backend).validate_for(X)


@dataclass(frozen=True)
class GapReport:
    """Per-index gap terms for indices 1..N (lists are 0-based: entry 0 is index 1)."""

    terms: list
    clipped_terms: list
    normalized_terms: list
    cumulative: list
    argmin_witness: list
    total: Number
    kind: str = "menu"
    backend: str = "float"

    def __len__(self) -> int:
        return len(self.terms)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "raw", "clipped", "normalized", "cumulative", "witness"])
        for i in range(len(self.terms)):
            w.writerow(
                [
                    i + 1,
                    format_csv(self.terms[i]),
                    format_csv(self.clipped_terms[i]),
                    format_csv(self.normalized_terms[i]),
                    format_csv(self.cumulative[i]),
                    self.argmin_witness[i],
                ]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kind: str = "menu") -> "GapReport":
        rows = list(csv.DictReader(io.StringIO(text)))
        backend = "rational" if any("/" in r["raw"] for r in rows) else "float"

        def num(s):
            return to_number(s, backend) if backend == "rational" else float(s)

        terms = [num(r["raw"]) for r in rows]
        clipped = [num(r["clipped"]) for r in rows]
        normalized = [num(r["normalized"]) for r in rows]
        cumulative = [num(r["cumulative"]) for r in rows]
        witness = [int(r["witness"]) for r in rows]
        total = cumulative[-1] if cumulative else to_number(0, backend)
        return cls(terms, clipped, normalized, cumulative, witness, total, kind, backend)


def build_report(terms: Sequence, clipped: Sequence, norms: Sequence, witness: Sequence, kind: str, backend: str) -> GapReport:
    normalized = [c / n for c, n in zip(clipped, norms)]
    cumulative = []
    running = to_number(0, backend)
    for v in normalized:
        running = running + v
        cumulative.append(running)
    return GapReport(list(terms), list(clipped), normalized, cumulative, list(witness), running, kind, backend)
