import csv
import json
import os
from fractions import Fraction as F

import pytest

from menugap import io
from menugap.auctions import DiscreteDistribution, Mechanism
from menugap.cli import run
from menugap.constructions import build_construction
from menugap.sequences import AllocationSequence, PointSequence, ScalarSequence


def roundtrip(tmp_path, obj, to_json, from_json, name="a.json"):
    path = tmp_path / name
    io.write_json(path, to_json(obj))
    return io.load(path, from_json)


def test_rational_round_trips(tmp_path):
    X = PointSequence(2, [(F(1, 3), F(2)), (F(0), F(5, 7))], backend="rational")
    assert roundtrip(tmp_path, X, io.sequence_to_json, io.sequence_from_json) == X
    Q = AllocationSequence(2, [(0, 0), (F(1, 3), 1), (1, F(2, 9))], "rational")
    assert roundtrip(tmp_path, Q, io.allocations_to_json, io.allocations_from_json) == Q
    C = ScalarSequence([0, F(1, 2), F(7, 5)], "rational")
    assert roundtrip(tmp_path, C, io.scalars_to_json, io.scalars_from_json) == C
    D = DiscreteDistribution(2, [((F(1, 3), 2), F(1, 3)), ((4, 0), F(2, 3))], "rational")
    assert roundtrip(tmp_path, D, io.distribution_to_json, io.distribution_from_json) == D
    M = Mechanism([((1, F(1, 2)), F(17, 4))], backend="rational")
    assert roundtrip(tmp_path, M, io.mechanism_to_json, io.mechanism_from_json) == M


def test_float_round_trip_is_bit_exact(tmp_path):
    X, Q, _ = build_construction(8)
    back = roundtrip(tmp_path, X, io.sequence_to_json, io.sequence_from_json)
    assert back.body == X.body
    backQ = roundtrip(tmp_path, Q, io.allocations_to_json, io.allocations_from_json)
    assert backQ.allocations == Q.allocations


def test_rationals_serialize_as_strings():
    assert io.encode_number(F(3, 4)) == "3/4"
    assert io.decode_number("3/4", "x") == F(3, 4)
    with pytest.raises(io.FormatError):
        io.decode_number("abc", "x")
    with pytest.raises(io.FormatError):
        io.decode_number(True, "x")


def test_format_errors_name_the_field(tmp_path):
    path = tmp_path / "d.json"
    path.write_text(json.dumps({"k": 2, "support": [{"v": [1, "oops"], "p": 1}]}))
    with pytest.raises(io.FormatError, match=r"support\[0\]\.v\[1\]"):
        io.load(path, io.distribution_from_json)
    path.write_text("{not json")
    with pytest.raises(io.FormatError, match="invalid JSON"):
        io.read_json(path)


def test_atomic_write_leaves_no_partial_file(tmp_path):
    path = tmp_path / "out.txt"
    io.atomic_write_text(path, "old")
    with pytest.raises(TypeError):
        io.atomic_write_text(path, 12345)
    assert path.read_text() == "old"
    assert os.listdir(tmp_path) == ["out.txt"]


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def test_cli_menugap_lp_k1(tmp_path, capsys):
    x = write(tmp_path, "x.json", {"k": 1, "points": [[3], [1], [7], ["1/2"]]})
    assert run(["menugap", x, "--lp"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["objective"] == "1/1"


def test_cli_revenue_commands(tmp_path, capsys):
    d = write(tmp_path, "d.json", {"k": 2, "support": [{"v": [4, 0], "p": "1/2"}, {"v": [0, 16], "p": "1/2"}]})
    m = write(tmp_path, "m.json", {"menu": [{"q": [1, 0], "price": 4}, {"q": [0, 1], "price": 16}]})
    assert run(["rev", d, m]) == 0
    assert json.loads(capsys.readouterr().out)["rev"] == "10/1"
    assert run(["brev", d]) == 0
    assert json.loads(capsys.readouterr().out) == {"brev": "8/1", "price": "16/1"}
    assert run(["verify", d, m]) == 0
    capsys.readouterr()
    cert = tmp_path / "cert.json"
    man = tmp_path / "man.json"
    assert run(["certify", d, "--out", str(cert), "--manifest", str(man)]) == 0
    assert json.loads(cert.read_text())["pass"] is True
    manifest = json.loads(man.read_text())
    assert manifest["subcommand"] == "certify" and d in manifest["inputs"]


def test_cli_input_errors_exit_one(tmp_path, capsys):
    bad = write(tmp_path, "bad.json", {"k": 2, "support": [{"v": [1, 1], "p": "1/2"}]})
    assert run(["certify", bad]) == 1
    assert "probabilities" in capsys.readouterr().err
    assert run(["certify", str(tmp_path / "missing.json")]) == 1
    x = write(tmp_path, "x.json", {"k": 2, "points": [[1, 0]]})
    q = write(tmp_path, "q.json", {"k": 1, "allocations": [[0], [1]]})
    assert run(["menugap", x, "--q", q]) == 1


def test_cli_failed_certificate_exit_two(tmp_path, capsys, monkeypatch):
    from menugap import cli
    from menugap.transforms import Certificate

    d = write(tmp_path, "d.json", {"k": 1, "support": [{"v": [2], "p": 1}]})
    monkeypatch.setattr(cli, "theorem_main_pipeline", lambda D: Certificate(0, 1, 1, 1, 1, False, "main"))
    assert run(["certify", d]) == 2
    assert "certificate failed" in capsys.readouterr().err


def test_cli_hn_construct_reports_ic(tmp_path, capsys):
    # a repeated point with a dropped allocation has a negative gap, so IC fails
    x = write(tmp_path, "x.json", {"k": 1, "points": [[1], [1]]})
    q = write(tmp_path, "q.json", {"k": 1, "allocations": [[0], [1], ["1/2"]]})
    args = ["hn-construct", x, q, "--base", "10", "--out-dist", str(tmp_path / "d.json"), "--out-mech", str(tmp_path / "m.json")]
    assert run(args) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["ic_ok"] is False
    D = io.load(tmp_path / "d.json", io.distribution_from_json)
    assert D.support[0] == ((100,), F(1, 100))


def test_cli_paper_bounds_csv(tmp_path, capsys):
    out = tmp_path / "bounds.csv"
    assert run(["reproduce", "--paper-bounds", "--layers", "40", "--csv", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 39
    assert all(r["within_6"] == "True" for r in rows)


def test_cli_reproduce_exit_code_tracks_results(capsys):
    code = run(["reproduce", "--only", "3,10"])
    out = capsys.readouterr().out
    assert out.count("[PASS]") + out.count("[FAIL]") == 2
    assert code == (2 if "[FAIL]" in out else 0)
