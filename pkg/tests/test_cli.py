import json
import re

import pytest

from coinrt.cli import main, parse_sweep
from coinrt.formats import InputError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_bundle(tmp_path, d, name="b.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d) if not isinstance(d, str) else d)
    return str(p)


def test_first_worked_example_chain(capsys):
    code, out, _ = run(capsys, "reidemeister", "--example", "example1")
    assert code == 0
    chains = [line.strip() for line in out.splitlines() if "→" in line]
    assert chains == ["R[φ′,ψ′] = {[1]} → R[φ,ψ] = {[1]=[β]} → R[φ̄,ψ̄] = {[1̄]=[β̄]}"] * 2
    assert "coin(φ,ψ) = Γ₁" in out
    assert out.rstrip().endswith("PASS")


def test_circle_reidemeister_classes(capsys):
    code, out, _ = run(capsys, "reidemeister", "--example", "circle-3-1")
    assert code == 0
    assert "R[φ,ψ]: 2 classes" in out


def test_second_worked_example_infinite(capsys):
    code, out, _ = run(capsys, "reidemeister", "--example", "example2")
    assert code == 0
    assert "R[φ,ψ]: infinite (every class a singleton)" in out
    assert "sequence checks skipped" in out


def test_trace_output(capsys):
    code, out, _ = run(capsys, "trace", "--example", "circle-3-1")
    assert code == 0
    lines = out.splitlines()
    assert lines[1:4] == ["RT = -[0] - [1]", "L = -2", "N = 2"]
    assert "  (1/2) in [1] ind -1" in lines


def test_trace_g2(capsys):
    code, out, _ = run(capsys, "trace", "--example", "g2-endo")
    assert code == 0
    assert "L = -4" in out and "N = 6" in out


def test_trace_needs_geometric_bundle(capsys):
    code, out, err = run(capsys, "trace", "--example", "example1")
    assert code == 2 and out == ""
    assert err.startswith("coinrt: error: trace needs a geometric bundle")


def test_degenerate_pair_diagnostic(capsys, tmp_path):
    p = write_bundle(tmp_path, {"source": "torus_2", "f": "identity", "g": "identity", "gamma1": {"scale": 2}})
    code, out, err = run(capsys, "trace", "--bundle", p)
    assert code == 2 and out == ""
    assert err.startswith("coinrt: error:")


def test_malformed_json(capsys, tmp_path):
    p = write_bundle(tmp_path, '{"source": "torus_1",\n "f": }')
    code, out, err = run(capsys, "verify-averaging", "--bundle", p)
    assert code == 2 and out == ""
    assert re.search(r"b\.json:2:7:", err)


def test_missing_bundle_file(capsys, tmp_path):
    code, out, err = run(capsys, "trace", "--bundle", str(tmp_path / "nope.json"))
    assert code == 2 and out == ""


def test_example_and_bundle_exclusive(capsys):
    code, _, err = run(capsys, "trace", "--example", "circle-3-1", "--bundle", "x.json")
    assert code == 2 and "exactly one" in err


def test_mode_mismatch(capsys):
    code, _, err = run(capsys, "verify-averaging", "--example", "circle-3-1", "--mode", "algebraic")
    assert code == 2 and "is geometric" in err


@pytest.mark.parametrize("name", ["circle-3-1", "circle-flip", "torus-rotation", "torus-hyperbolic", "g2-endo", "example1", "example2"])
def test_verify_averaging_passes(capsys, name):
    code, out, _ = run(capsys, "verify-averaging", "--example", name)
    assert code == 0
    assert "[FAIL]" not in out
    assert out.rstrip().endswith("PASS")


@pytest.mark.parametrize("name", ["circle-3-1", "g2-endo", "example1", "example2"])
def test_sabotage_fails(capsys, name):
    code, out, _ = run(capsys, "verify-averaging", "--example", name, "--sabotage")
    assert code == 1
    assert "[FAIL]" in out and out.rstrip().endswith("FAIL")


def test_sweep_with_negative_start(capsys):
    code, out, _ = run(capsys, "verify-averaging", "--example", "example1", "--sweep=-3..3")
    assert code == 0
    assert [line for line in out.splitlines() if line.startswith("k = ")] == [f"k = {k}" for k in range(-3, 4)]
    assert "  rhs = -3[1]" in out and "  rhs = 3[1]" in out


@pytest.mark.parametrize("text, values", [("-3..3", list(range(-3, 4))), ("0..0", [0]), ("1,4,-2", [1, 4, -2]), ("−2..−1", [-2, -1])])
def test_parse_sweep(text, values):
    assert parse_sweep(text) == values


@pytest.mark.parametrize("text", ["3..1", "a..b", "1;2"])
def test_parse_sweep_rejects(text):
    with pytest.raises(InputError):
        parse_sweep(text)


def test_bad_sweep_exit_code(capsys):
    code, out, _ = run(capsys, "verify-averaging", "--example", "example1", "--sweep=5..1")
    assert code == 2 and out == ""


def test_json_report(capsys):
    code, out, _ = run(capsys, "verify-averaging", "--example", "circle-3-1", "--json")
    assert code == 0
    d = json.loads(out)
    assert (d["schema"], d["command"], d["bundle"], d["status"]) == (1, "verify-averaging", "circle-3-1", "pass")
    assert all(c["status"] == "pass" for c in d["checks"])
    assert d["trace_averaging"]["rhs"] == [{"class": "[0]", "coefficient": -1}, {"class": "[1]", "coefficient": -1}]
    assert d["lefschetz_averaging"]["rhs"] == -2


def test_json_trace(capsys):
    code, out, _ = run(capsys, "trace", "--example", "torus-rotation", "--json")
    d = json.loads(out)
    assert code == 0 and d["lefschetz"] == 2 and d["nielsen"] == 2


def test_json_algebraic_runs(capsys):
    code, out, _ = run(capsys, "verify-averaging", "--example", "example1", "--json", "--sweep", "1,2")
    d = json.loads(out)
    assert [r["k"] for r in d["runs"]] == [1, 2]
    assert all(r["equal"] for r in d["runs"])


def test_json_sabotage_status(capsys):
    code, out, _ = run(capsys, "verify-averaging", "--example", "example1", "--json", "--sabotage")
    assert code == 1 and json.loads(out)["status"] == "fail"


def test_bundle_file_runs(capsys, tmp_path):
    d = {
        "name": "torus-shift",
        "source": "torus_2",
        "f": {"linear": [[2, 1], [1, 1]], "translation": ["1/3", "0"]},
        "g": "identity",
        "gamma1": {"scale": 3},
        "region": [{"lo": ["0", "0"], "hi": ["1/2", "1/2"]}],
    }
    code, out, _ = run(capsys, "verify-averaging", "--bundle", write_bundle(tmp_path, d))
    assert code == 0
    assert "local trace averaging" in out and "local index averaging" in out


def test_output_is_deterministic(capsys):
    first = run(capsys, "verify-averaging", "--example", "g2-endo", "--json")
    second = run(capsys, "verify-averaging", "--example", "g2-endo", "--json")
    assert first == second


def test_unknown_example_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["trace", "--example", "nope"])
    assert exc.value.code == 2


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    lines = out.splitlines()
    assert code == 0
    assert [line.split()[0] for line in lines[:-1]] == [f"A{i}" for i in range(1, 9)]
    assert lines[-1] == "PASS"
