import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import jsonschema
import pytest

from gdof import __version__, report
from gdof.cli import ConfigError, main, parse_grid


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_curve_rows(capsys):
    code, out, _ = run(capsys, "curve", "--users", "3", "--alpha-grid", "0,0.5,1,2")
    assert code == 0
    got = rows(out)
    assert [r["d_theory"] for r in got] == ["1", "1/2", "1/3", "1"]
    assert [r["regime"] for r in got] == ["Noisy", "Weak", "AlphaOne", "VeryStrong"]
    assert all(r["tool_version"] == __version__ and r["command"] == "curve" for r in got)


def test_curve_two_users_alpha_one(capsys):
    _, out, _ = run(capsys, "curve", "-K", "2", "--alpha", "1")
    (row,) = rows(out)
    assert row["d_theory"] == "1/2"


def test_curve_header_is_stable(capsys):
    _, out, _ = run(capsys, "curve", "--alpha", "2/3")
    assert out.splitlines()[0] == ",".join(report.CURVE_COLUMNS)


def test_parse_grid():
    assert parse_grid("0:3:3/32")[-1] == 3 and len(parse_grid("0:3:3/32")) == 33
    assert parse_grid("0.5, 2/3") == (Fraction(1, 2), Fraction(2, 3))
    with pytest.raises(ConfigError):
        parse_grid("0:1:0")
    with pytest.raises(ConfigError):
        parse_grid("a:b:c")


SIM = ("simulate", "-K", "3", "-Q", "64", "-M", "8", "--alpha", "2.5", "--trials", "2000", "--seed", "1")


def test_simulate_is_byte_identical(capsys):
    _, a, _ = run(capsys, *SIM)
    _, b, _ = run(capsys, *SIM)
    assert a == b and a


def test_simulate_zero_noise(capsys, caplog):
    caplog.set_level("INFO", logger="gdof")
    code, out, _ = run(capsys, *SIM, "--zero-noise")
    assert code == 0
    got = rows(out)
    summary = got[0]
    assert summary["record"] == "summary"
    assert summary["d_measured"] == summary["d_empirical"]
    assert all(float(r["value"]) == 0 for r in got[1:])
    assert {r["record"] for r in got} == {"summary", "level", "user", "digit"}
    # wall time goes to the log, never into the output
    assert "trials in" in caplog.text and "trials in" not in out


def test_simulate_noisy_point(capsys):
    code, out, _ = run(capsys, "simulate", "--alpha", "1/4")
    (row,) = rows(out)
    assert code == 0 and row["regime"] == "Noisy" and row["trials"] == "0"


@pytest.mark.parametrize("argv", [
    ("simulate", "--alpha", "1"),
    ("simulate", "-K", "3", "-Q", "9", "--alpha", "2"),
    ("simulate", "--alpha-grid", "2,3"),
    ("sweep", "-M", "0"),
    ("curve", "-K", "1", "--alpha", "0"),
    ("curve", "--alpha", "-1"),
    ("curve", "--seed", "-3", "--alpha", "0"),
    ("verify", "--alpha", "1/4"),
    ("sweep", "--trials", "many"),
])
def test_config_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and "configuration error" in err


def test_verify_pass(capsys):
    code, out, _ = run(capsys, "verify", "-K", "3", "-Q", "10", "-M", "1", "--alpha", "1.5")
    (row,) = rows(out)
    assert code == 0 and row["result"] == "pass" and row["failures"] == "0"
    assert row["tuples"] == str(2 ** 3) and row["test_alphabet"] == "1;2"


def test_verify_moderately_weak_pass(capsys):
    code, out, _ = run(capsys, "verify", "-K", "2", "-Q", "10", "-M", "2", "--alpha", "0.75")
    assert code == 0 and rows(out)[0]["result"] == "pass"


def test_verify_fault_injection(capsys):
    code, out, err = run(capsys, "verify", "-K", "3", "-Q", "10", "-M", "2", "--alpha", "1.5",
                         "--inject-fault")
    got = rows(out)
    assert code == 1 and got[0]["result"] == "fail"
    traces = [json.loads(r["trace"]) for r in got[1:]]
    assert traces and all(r["result"] == "counterexample" for r in got[1:])
    assert {"messages", "transmit_digits", "reduced_digits", "decoded"} <= set(traces[0])
    assert err.count("counterexample:") == len(traces)


def test_verify_cap_exceeded(capsys):
    code, out, err = run(capsys, "verify", "-K", "3", "-Q", "16", "-M", "3", "--alpha", "0.75")
    assert code == 2 and "cap" in err


SWEEP = ("sweep", "--trials", "300", "--levels", "4")


def test_sweep_default_grid(capsys):
    code, out, _ = run(capsys, *SWEEP)
    got = rows(out)
    assert code == 0 and len(got) == 33
    # d_theory is monotone inside each branch
    by_regime = {}
    for r in got:
        by_regime.setdefault(r["regime"], []).append(Fraction(r["d_theory"]))
    for regime, ds in by_regime.items():
        assert ds == sorted(ds) or ds == sorted(ds, reverse=True), regime


def test_sweep_alpha_one_row_is_empty(capsys):
    _, out, _ = run(capsys, *SWEEP, "--alpha-grid", "0.75,1,1.25")
    one = rows(out)[1]
    assert one["regime"] == "AlphaOne" and one["d_theory"] == "1/3"
    assert one["d_empirical"] == one["gap"] == one["error"] == ""


def test_json_matches_csv_and_schema(capsys):
    _, text, _ = run(capsys, *SWEEP, "--alpha-grid", "0,1,1.5,3")
    _, js, _ = run(capsys, *SWEEP, "--alpha-grid", "0,1,1.5,3", "--format", "json")
    data = json.loads(js)
    jsonschema.validate(data, report.load_schema())
    for c, j in zip(rows(text), data):
        for key, v in j.items():
            cell = c[key]
            if v is None:
                assert cell == ""
            elif isinstance(v, bool):
                assert cell == str(v).lower()
            elif isinstance(v, float):
                assert float(cell) == v
            else:
                assert cell == str(v)


@pytest.mark.parametrize("argv", [
    ("curve", "--alpha", "0.6"),
    ("simulate", "--alpha", "1.5", "--trials", "200", "-M", "4"),
    ("verify", "-K", "3", "-Q", "10", "-M", "2", "--alpha", "1.5", "--inject-fault"),
])
def test_every_command_validates_against_schema(capsys, argv):
    _, js, _ = run(capsys, *argv, "--format", "json")
    jsonschema.validate(json.loads(js), report.load_schema())


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\nusers = 2\nalpha-grid = 1\nformat=json\n")
    _, out, _ = run(capsys, "curve", "--config", str(cfg))
    (row,) = json.loads(out)
    assert row["K"] == 2 and row["d_theory"] == "1/2"
    # flags beat the file
    _, out, _ = run(capsys, "curve", "--config", str(cfg), "-K", "4", "--format", "csv")
    assert rows(out)[0]["d_theory"] == "1/4"


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert run(capsys, "curve", "--config", str(bad))[0] == 2
    assert run(capsys, "curve", "--config", str(tmp_path / "missing.cfg"))[0] == 2


def test_out_file_and_module_entry(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        subprocess.run([sys.executable, "-m", "gdof", *SWEEP, "--alpha-grid", "0:3:1/2",
                        "--out", str(path)], check=True, capture_output=True)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes().startswith(b"tool_version,command,alpha")
