import csv
import dataclasses
import io
import json
import time

import pytest

from cknlab import cli
from cknlab import params as P


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _csv(text):
    lines = [ln for ln in text.splitlines() if ln and "=" not in ln.split(",")[0]]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_params_csv(capsys):
    code, out, _ = run(capsys, "params", "--a", "-1", "--b", "-0.25")
    assert code == 0
    (row,) = _csv(out)
    assert list(row) == list(cli.PARAMS_KEYS)
    assert row["q"] == "2.666667" and row["K"] == "8.000000" and row["tau"] == "3.000000"
    assert row["region"] == "StrictInterior"
    assert float(row["mu3_closed"]) == pytest.approx(1.853553, abs=1e-6)
    assert float(row["bound_spectral"]) == pytest.approx(0.100826, abs=1e-6)


def test_params_json_and_regions(capsys):
    code, out, _ = run(capsys, "params", "--a", "-1", "--b", "-0.292893", "--format", "json")
    assert code == 0
    obj = json.loads(out)
    assert obj["region"] == "OnFS"
    code, out, _ = run(capsys, "params", "--a", "-1", "--b", "-0.5", "--format", "json")
    assert code == 0
    obj = json.loads(out)
    assert obj["region"] == "BelowFS" and obj["mu3_closed"] is None


@pytest.mark.parametrize("argv", [
    ["params", "--a", "0.5", "--b", "0.7"],
    ["params", "--a", "-1", "--b", "-2"],
    ["params", "--a", "-1"],
    ["nonsense"],
    ["params", "--a", "-1", "--b", "-0.25", "--precision", "40"],
    ["spectrum", "--a", "-1", "--b", "-0.5"],
    ["deficit", "--a", "-1", "--b", "-0.25", "--family", "fs-kernel"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err


def test_table_fig2(capsys):
    code, out, _ = run(capsys, "table-fig2")
    assert code == 0
    rows = _csv(out)
    assert len(rows) == 11
    assert list(rows[0]) == ["a", "b_fs", "b_fs_star", "b_star", "selection"]
    by_a = {r["a"]: r for r in rows}
    assert by_a["-1.000000"]["b_fs"] == "-0.292893"
    assert float(by_a["-1.000000"]["b_star"]) == pytest.approx(-0.181928, abs=2e-6)
    assert by_a["-0.500000"]["selection"] == "empty"
    assert by_a["-10.000000"]["selection"] == "[-9.002933, -9.002488)"


def test_table_json_round_trip(capsys):
    _, out_csv, _ = run(capsys, "table-fig2")
    _, out_json, _ = run(capsys, "table-fig2", "--format", "json")
    rows = json.loads(out_json)["rows"]
    for a, b in zip(_csv(out_csv), rows):
        assert float(a["b_fs"]) == pytest.approx(b["b_fs"], abs=5e-7)


def test_thresholds(capsys):
    code, out, _ = run(capsys, "thresholds", "--format", "json")
    obj = json.loads(out)
    assert code == 0
    assert obj["k_star"] == pytest.approx(6.698818, abs=1e-6)
    assert obj["a_star"] == pytest.approx(-0.641866, abs=1e-6)


def test_curves(capsys):
    code, out, _ = run(capsys, "curves", "--a-min", "-3", "--a-max", "-1", "--points", "5")
    assert code == 0
    rows = _csv(out)
    assert len(rows) == 5
    for r in rows:
        assert float(r["b_fs"]) < float(r["b_fs_star"])


def test_spectrum_command(capsys):
    code, out, _ = run(capsys, "spectrum", "--a", "-1", "--b", "-0.25", "--modes", "0,1", "--count", "2")
    assert code == 0
    rows = _csv(out)
    assert len(rows) == 4
    for r in rows:
        assert float(r["eigenvalue"]) == pytest.approx(float(r["closed_form"]), abs=2e-6)
    assert "kernel_dim=1" in out


def test_deficit_spectral(capsys):
    code, out, _ = run(capsys, "deficit", "--a", "-1", "--b", "-0.25", "--family", "spectral",
                       "--format", "json")
    assert code == 0
    obj = json.loads(out)
    assert len(obj["rows"]) == 3
    assert obj["limit"] == pytest.approx(0.100826, abs=1e-6)


def test_output_file_and_determinism(capsys, tmp_path):
    target = tmp_path / "t.csv"
    code, out, _ = run(capsys, "table-fig2", "--out", str(target))
    assert code == 0 and out == ""
    _, again, _ = run(capsys, "table-fig2")
    assert target.read_text() == again


def test_precision_and_rounding(capsys):
    _, out, _ = run(capsys, "params", "--a", "-1", "--b", "-0.25", "--precision", "2")
    (row,) = _csv(out)
    assert row["q"] == "2.67"
    assert cli.fmt_number(0.125, 2) == "0.12"
    assert cli.fmt_number(0.375, 2) == "0.38"
    assert cli.fmt_number(-0.0000001, 3) == "0.000"
    assert cli.fmt_number(float("nan"), 3) == "nan"


def test_verify_quick_passes(capsys):
    t0 = time.perf_counter()
    code, out, _ = run(capsys, "verify", "--quick")
    assert time.perf_counter() - t0 < 30.0
    assert code == 0, out
    assert "0 failed" in out


def test_verify_detects_mutated_constant(capsys, monkeypatch):
    """A 1% error in C_ab must make the quick suite fail."""
    real = P.derive

    def mutated(p):
        d = real(p)
        return dataclasses.replace(d, C_ab=1.01 * d.C_ab)

    monkeypatch.setattr(P, "derive", mutated)
    code, out, _ = run(capsys, "verify", "--quick")
    assert code == 1
    assert "[FAIL]" in out
