"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 failed certificate or check.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io as _io
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import constructions as cons
from . import io
from .auctions import arev, brev, revenue, verify_ic_ir
from .gapcore import align_gap_terms, menu_gap_terms
from .gapopt import align_gap_bruteforce, align_gap_search, lagrel_chain, menu_gap_lp, optimal_mechanism_lp
from .numeric import format_number
from .transforms import (
    ExtractionConfig,
    HNParams,
    aligned_sequence,
    bundle_menus,
    hn_construct,
    prop_hn_check,
    representative_sequence,
    theorem_ext_pipeline,
    theorem_main_pipeline,
)

EXIT_OK, EXIT_INPUT, EXIT_FAILED = 0, 1, 2


class CheckFailed(Exception):
    pass


@dataclass
class ExperimentManifest:
    subcommand: str
    config: dict
    inputs: dict = field(default_factory=dict)  # path -> sha256
    result: dict = field(default_factory=dict)
    wall_time: float = 0.0


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _num(v):
    return None if v is None else format_number(v)


def _emit(args, payload: dict):
    text = json.dumps(payload, indent=2) + "\n"
    if getattr(args, "out", None):
        io.atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _write_csv(path, rows: list):
    io.atomic_write_text(path, _rows_text(rows) if rows else "")


def _backend(args) -> Optional[str]:
    return getattr(args, "backend", None)


# ---------------------------------------------------------------------------
# subcommands; each returns a result summary dict for the manifest


def cmd_build_sequence(args):
    X, Q, specs = cons.build_construction(args.layers, backend=args.backend or "float")
    io.write_json(args.out or "x.json", io.sequence_to_json(X))
    if args.q_out:
        io.write_json(args.q_out, io.allocations_to_json(Q))
    print(f"{len(X)} points over layers 2..{args.layers}")
    return {"n_points": len(X)}


def cmd_bounds(args):
    from .reproduce import bounds_table

    rows = bounds_table(args.layers)
    if args.csv:
        _write_csv(args.csv, rows)
    else:
        sys.stdout.write(_rows_text(rows))
    return {"layers": args.layers}


def _rows_text(rows) -> str:
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (format_number(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def cmd_menugap(args):
    X = io.load(args.x, io.sequence_from_json, _backend(args))
    if args.q:
        Q = io.load(args.q, io.allocations_from_json, _backend(args))
        report = menu_gap_terms(X, Q)
        if args.csv:
            io.atomic_write_text(args.csv, report.to_csv())
        payload = {"objective": _num(report.total), "witness": report.argmin_witness}
    else:
        sol = menu_gap_lp(X, cap=args.cap)
        payload = {
            "objective": _num(sol.objective),
            "witness": io.allocations_to_json(sol.q_star),
            "status": sol.status,
        }
    _emit(args, payload)
    return {"objective": payload["objective"]}


def cmd_aligngap(args):
    X = io.load(args.x, io.sequence_from_json, _backend(args))
    if args.lagrel:
        rep = lagrel_chain(X, prime_search=args.prime)
        payload = {
            "objective": _num(rep.lagrel),
            "lagrel1": _num(rep.lagrel1),
            "lagrel2": _num(rep.lagrel2),
            "aligngap_prime": _num(rep.aligngap_prime),
            "chain_valid": rep.chain_valid,
            "witness": {"scalars": [_num(c) for c in rep.c_star]},
        }
    elif args.c:
        C = io.load(args.c, io.scalars_from_json, _backend(args))
        report = align_gap_terms(X, C)
        if args.csv:
            io.atomic_write_text(args.csv, report.to_csv())
        payload = {"objective": _num(report.total), "witness": report.argmin_witness}
    elif args.bruteforce:
        value, C = align_gap_bruteforce(X, args.bruteforce, return_scalars=True)
        payload = {"objective": _num(value), "witness": io.scalars_to_json(C), "bound": "lower"}
    else:
        value, C = align_gap_search(X, restarts=args.restarts, seed=args.seed)
        payload = {"objective": _num(value), "witness": io.scalars_to_json(C), "bound": "lower"}
    _emit(args, payload)
    return {"objective": payload["objective"]}


def cmd_optmech(args):
    D = io.load(args.d, io.distribution_from_json, _backend(args))
    res = optimal_mechanism_lp(D, cap=args.cap)
    io.write_json(args.out or "m.json", io.mechanism_to_json(res.mechanism))
    print(f"Rev = {format_number(res.value)}")
    return {"rev": _num(res.value)}


def _dm(args):
    D = io.load(args.d, io.distribution_from_json, _backend(args))
    M = io.load(args.m, io.mechanism_from_json, _backend(args))
    return D, M


def cmd_rev(args):
    D, M = _dm(args)
    r = revenue(D, M, args.tolerance)
    payload = {
        "rev": _num(r.rev),
        "arev": _num(r.arev),
        "brev": _num(r.brev),
        "brev_price": _num(r.brev_price),
        "choices": [{"index": c.index, "tie": c.tie} for c in r.choices],
    }
    _emit(args, payload)
    return {"rev": payload["rev"]}


def cmd_brev(args):
    D = io.load(args.d, io.distribution_from_json, _backend(args))
    price, value = brev(D)
    _emit(args, {"brev": _num(value), "price": _num(price)})
    return {"brev": _num(value)}


def cmd_arev(args):
    D, M = _dm(args)
    value = arev(D, M, args.tolerance)
    _emit(args, {"arev": _num(value)})
    return {"arev": _num(value)}


def cmd_verify(args):
    D, M = _dm(args)
    tol = 0.0 if D.backend == "rational" and M.backend == "rational" else args.tolerance
    rep = verify_ic_ir(D, M, tol=tol)
    _emit(args, {"ok": rep.ok, "worst": _num(rep.worst), "violations": [[s, k, _num(m)] for s, k, m in rep.violations]})
    if not rep.ok:
        raise CheckFailed(f"{len(rep.violations)} IC/IR violations")
    return {"ok": True}


def cmd_hn_construct(args):
    X = io.load(args.x, io.sequence_from_json, _backend(args))
    Q = io.load(args.q, io.allocations_from_json, _backend(args))
    hn = hn_construct(X, Q, HNParams(_parse_number(args.base), len(X.without_origin())))
    io.write_json(args.out_dist, io.distribution_to_json(hn.distribution))
    io.write_json(args.out_mech, io.mechanism_to_json(hn.mechanism))
    r = revenue(hn.distribution, hn.mechanism)
    summary = {
        "ic_ok": hn.ic.ok,
        "buys_own_entry": hn.buys_own_entry,
        "rev": _num(r.rev),
        "brev": _num(r.brev),
        "ratio": _num(r.rev / r.brev),
        "menu_gap": _num(menu_gap_terms(X.without_origin(), Q).total),
    }
    print(json.dumps(summary, indent=2))
    return summary


def cmd_extract(args):
    D, M = _dm(args)
    cfg = ExtractionConfig(_parse_number(args.c), 0, args.parity)
    if args.aligned:
        X, C = aligned_sequence(D, M, cfg)
        second = io.scalars_to_json(C)
        value = align_gap_terms(X, C).total if len(X) else 0
    else:
        X, Q = representative_sequence(D, M, cfg)
        second = io.allocations_to_json(Q)
        value = menu_gap_terms(X, Q).total if len(X) else 0
    io.write_json(args.out or "x.json", io.sequence_to_json(X))
    io.write_json(args.q_out or ("c.json" if args.aligned else "q.json"), second)
    print(f"{len(X)} points, gap {format_number(value)}")
    return {"n_points": len(X), "gap": _num(value)}


def cmd_certify(args):
    D = io.load(args.d, io.distribution_from_json, _backend(args))
    if args.ext:
        M = io.load(args.ext, io.mechanism_from_json, _backend(args))
        cert = theorem_ext_pipeline(D, M)
    else:
        cert = theorem_main_pipeline(D)
    _emit(args, cert.to_dict())
    if not cert.passed:
        raise CheckFailed("certificate failed")
    return {"pass": True}


def cmd_prop_hn(args):
    X = io.load(args.x, io.sequence_from_json, _backend(args))
    Q = io.load(args.q, io.allocations_from_json, _backend(args))
    cands = []
    if args.candidates:
        for p in sorted(Path(args.candidates).glob("*.json")):
            cands.append(io.load(p, io.mechanism_from_json, _backend(args)))
    B = _parse_number(args.base)
    hn = hn_construct(X, Q, HNParams(B, len(X.without_origin())))
    cands += bundle_menus(hn.distribution)
    rep = prop_hn_check(X, Q, B, cands)
    payload = {
        "ok": rep.ok,
        "bound": _num(rep.bound),
        "worst_margin": _num(rep.worst_margin),
        "arevs": [_num(a) for a in rep.arevs],
        "violations": rep.violations,
    }
    _emit(args, payload)
    if not rep.ok:
        raise CheckFailed(f"{len(rep.violations)} candidates exceed the bound")
    return {"ok": True}


def cmd_reproduce(args):
    from .reproduce import relaxation_bounds_table, run_all

    if args.paper_bounds:
        rows = relaxation_bounds_table(args.layers)
        _write_csv(args.csv or "relaxation_bounds.csv", rows)
        bad = [r["ell"] for r in rows if not r["within_6"]]
        print(f"{len(rows)} layer rows, {len(bad)} above 6")
        if bad:
            raise CheckFailed(f"relaxation bound exceeds 6 at layers {bad}")
        return {"rows": len(rows)}
    only = [int(s) for s in args.only.split(",")] if args.only else None
    results = run_all(quick=args.quick, seed=args.seed, only=only)
    for r in results:
        print(r.line)
    if args.csv:
        _write_csv(args.csv, [{"criterion": r.number, "pass": r.passed, "seconds": round(r.elapsed, 3), "detail": r.detail} for r in results])
    failed = [r.number for r in results if not r.passed]
    if failed:
        raise CheckFailed(f"failed criteria: {failed}")
    return {"failed": []}


def _parse_number(text: str):
    """Command-line number: "n/d" stays exact, integers stay integers."""
    if "/" in text:
        return io.decode_number(text, "argument")
    try:
        return int(text)
    except ValueError:
        return float(text)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--backend", choices=["float", "rational"], default=None)
    common.add_argument("--tolerance", type=float, default=1e-9)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None)
    common.add_argument("--csv", default=None)
    common.add_argument("--manifest", default=None, help="write an experiment manifest JSON here")

    p = argparse.ArgumentParser(prog="menugap", description="Menu gaps, aligned gaps and revenue certificates.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("build-sequence", parents=[common], help="write the layered construction")
    s.add_argument("--layers", type=int, default=cons.DEFAULT_MAX_LAYER)
    s.add_argument("--q-out", default=None)
    s.set_defaults(func=cmd_build_sequence)

    s = sub.add_parser("bounds", parents=[common], help="per-layer bound table")
    s.add_argument("--layers", type=int, default=cons.DEFAULT_MAX_LAYER)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("menugap", parents=[common], help="MenuGap(X, Q) or the LP sup over Q")
    s.add_argument("x")
    s.add_argument("--q", default=None, help="allocations file; omit to solve the LP")
    s.add_argument("--lp", action="store_true", help="solve the LP (default when --q is absent)")
    s.add_argument("--cap", type=int, default=60)
    s.set_defaults(func=cmd_menugap)

    s = sub.add_parser("aligngap", parents=[common], help="AlignGap bounds")
    s.add_argument("x")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--search", action="store_true")
    g.add_argument("--bruteforce", type=int, metavar="RESOLUTION", default=None)
    g.add_argument("--lagrel", action="store_true")
    g.add_argument("--c", default=None, help="evaluate a given scalars file")
    s.add_argument("--prime", action="store_true", help="with --lagrel, also search the relaxed program")
    s.add_argument("--restarts", type=int, default=16)
    s.set_defaults(func=cmd_aligngap)

    s = sub.add_parser("optmech", parents=[common], help="revenue-optimal menu via LP")
    s.add_argument("d")
    s.add_argument("--cap", type=int, default=100)
    s.set_defaults(func=cmd_optmech)

    for name, fn in (("rev", cmd_rev), ("arev", cmd_arev), ("verify", cmd_verify)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("d")
        s.add_argument("m")
        s.set_defaults(func=fn)
    s = sub.add_parser("brev", parents=[common])
    s.add_argument("d")
    s.set_defaults(func=cmd_brev)

    s = sub.add_parser("hn-construct", parents=[common], help="sequence -> distribution and menu")
    s.add_argument("x")
    s.add_argument("q")
    s.add_argument("--base", required=True)
    s.add_argument("--out-dist", default="d.json")
    s.add_argument("--out-mech", default="m.json")
    s.set_defaults(func=cmd_hn_construct)

    s = sub.add_parser("extract", parents=[common], help="mechanism -> representative sequence")
    s.add_argument("d")
    s.add_argument("m")
    s.add_argument("--c", required=True)
    s.add_argument("--aligned", action="store_true")
    s.add_argument("--parity", choices=["odd", "even", "auto"], default="auto")
    s.add_argument("--q-out", default=None)
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("certify", parents=[common], help="end-to-end revenue certificate")
    s.add_argument("d")
    s.add_argument("--ext", default=None, metavar="M_JSON")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("prop-hn", parents=[common], help="ARev falsification on the constructed distribution")
    s.add_argument("x")
    s.add_argument("q")
    s.add_argument("--base", required=True)
    s.add_argument("--candidates", default=None, metavar="DIR")
    s.set_defaults(func=cmd_prop_hn)

    s = sub.add_parser("reproduce", parents=[common], help="run the acceptance checklist")
    s.add_argument("--paper-bounds", action="store_true", help="only emit the per-layer relaxation bound CSV")
    s.add_argument("--layers", type=int, default=cons.DEFAULT_MAX_LAYER)
    s.add_argument("--quick", action="store_true")
    s.add_argument("--only", default=None, help="comma-separated criterion numbers")
    s.set_defaults(func=cmd_reproduce)
    return p


def _inputs(args) -> dict:
    out = {}
    for key in ("x", "q", "d", "m", "ext", "c"):
        path = getattr(args, key, None)
        if isinstance(path, str) and Path(path).is_file():
            out[path] = _sha256(path)
    return out


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    code, summary = EXIT_OK, {}
    try:
        summary = args.func(args) or {}
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        code = EXIT_FAILED
    except (ValueError, OSError, KeyError, TypeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    if args.manifest:
        config = {k: v for k, v in vars(args).items() if k != "func"}
        man = ExperimentManifest(args.command, config, _inputs(args), {"exit": code, **summary}, time.perf_counter() - t0)
        io.write_json(args.manifest, asdict(man))
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
