"""JSON/CSV artifacts.

Numbers are written as JSON floats (repr round-trips exactly) or as "num/den"
strings for rationals.  Every write goes to a temp file in the target
directory and is renamed into place, so a failed run never leaves a partial
artifact.
"""

from __future__ import annotations

import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .auctions import DiscreteDistribution, Mechanism
from .numeric import format_number
from .sequences import AllocationSequence, PointSequence, ScalarSequence


class FormatError(ValueError):
    """Malformed input file; the message names the file and field."""


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_number(v):
    if isinstance(v, Fraction):
        return format_number(v)
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return v
    return float(v)


def decode_number(v, where: str):
    if isinstance(v, bool):
        raise FormatError(f"{where}: expected a number, got a boolean")
    if isinstance(v, (int, float)):
        return v
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise FormatError(f"{where}: cannot parse {v!r} as a number") from None
    raise FormatError(f"{where}: expected a number, got {type(v).__name__}")


def _vector(v, where: str) -> tuple:
    if not isinstance(v, list):
        raise FormatError(f"{where}: expected a list")
    return tuple(decode_number(c, f"{where}[{d}]") for d, c in enumerate(v))


def _field(obj, key: str, where: str):
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected a JSON object")
    if key not in obj:
        raise FormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _backend(values, requested: Optional[str]) -> str:
    if requested:
        return requested
    return "rational" if any(isinstance(v, Fraction) for v in values) else "float"


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from None


# sequences


def sequence_to_json(X: PointSequence) -> dict:
    return {"k": X.k, "points": [[encode_number(c) for c in p] for p in X.points]}


def sequence_from_json(obj, where: str = "sequence", backend: Optional[str] = None) -> PointSequence:
    k = _field(obj, "k", where)
    rows = _field(obj, "points", where)
    if not isinstance(rows, list):
        raise FormatError(f"{where}.points: expected a list")
    pts = [_vector(r, f"{where}.points[{i}]") for i, r in enumerate(rows)]
    has_origin = bool(pts) and all(c == 0 for c in pts[0])
    try:
        return PointSequence(k, pts, has_origin=has_origin, backend=_backend([c for p in pts for c in p], backend))
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


def allocations_to_json(Q: AllocationSequence) -> dict:
    return {"k": Q.k, "allocations": [[encode_number(c) for c in q] for q in Q.allocations]}


def allocations_from_json(obj, where: str = "allocations", backend: Optional[str] = None) -> AllocationSequence:
    k = _field(obj, "k", where)
    rows = _field(obj, "allocations", where)
    if not isinstance(rows, list):
        raise FormatError(f"{where}.allocations: expected a list")
    qs = [_vector(r, f"{where}.allocations[{i}]") for i, r in enumerate(rows)]
    try:
        return AllocationSequence(k, qs, _backend([c for q in qs for c in q], backend))
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


def scalars_to_json(C: ScalarSequence) -> dict:
    return {"scalars": [encode_number(c) for c in C.scalars]}


def scalars_from_json(obj, where: str = "scalars", backend: Optional[str] = None) -> ScalarSequence:
    rows = _field(obj, "scalars", where)
    cs = list(_vector(rows, f"{where}.scalars"))
    try:
        return ScalarSequence(cs, _backend(cs, backend))
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


# auctions


def distribution_to_json(D: DiscreteDistribution) -> dict:
    return {
        "k": D.k,
        "support": [{"v": [encode_number(c) for c in v], "p": encode_number(p)} for v, p in D.support],
    }


def distribution_from_json(obj, where: str = "distribution", backend: Optional[str] = None) -> DiscreteDistribution:
    k = _field(obj, "k", where)
    if not isinstance(k, int) or k < 1:
        raise FormatError(f"{where}.k: expected a positive integer")
    rows = _field(obj, "support", where)
    if not isinstance(rows, list) or not rows:
        raise FormatError(f"{where}.support: expected a non-empty list")
    support = []
    for i, r in enumerate(rows):
        here = f"{where}.support[{i}]"
        support.append((_vector(_field(r, "v", here), f"{here}.v"), decode_number(_field(r, "p", here), f"{here}.p")))
    flat = [c for v, _ in support for c in v] + [p for _, p in support]
    try:
        return DiscreteDistribution(k, support, _backend(flat, backend))
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


def mechanism_to_json(M: Mechanism) -> dict:
    return {"menu": [{"q": [encode_number(c) for c in e.q], "price": encode_number(e.price)} for e in M.menu]}


def mechanism_from_json(obj, where: str = "mechanism", backend: Optional[str] = None) -> Mechanism:
    rows = _field(obj, "menu", where)
    if not isinstance(rows, list) or not rows:
        raise FormatError(f"{where}.menu: expected a non-empty list")
    menu = []
    for i, r in enumerate(rows):
        here = f"{where}.menu[{i}]"
        menu.append((_vector(_field(r, "q", here), f"{here}.q"), decode_number(_field(r, "price", here), f"{here}.price")))
    flat = [c for q, _ in menu for c in q] + [p for _, p in menu]
    try:
        return Mechanism(menu, len(menu[0][0]), _backend(flat, backend))
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


def load(path, reader, backend: Optional[str] = None):
    return reader(read_json(path), str(path), backend)
