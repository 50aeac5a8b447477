import csv
import io
import json
import math

import pytest

from harperlab.cli import main


def run(argv):
    out = io.StringIO()
    code = main(argv, stdout=out)
    return code, out.getvalue()


def test_spectrum_period_two():
    code, text = run(["spectrum", "--model", "amo:1", "--frac", "1/2", "--tol", "1e-9"])
    assert code == 0
    lines = text.strip().splitlines()
    assert len(lines) == 1
    lo, hi = json.loads(lines[0])
    assert lo == pytest.approx(-2 * math.sqrt(2), abs=1e-9)
    assert hi == pytest.approx(2 * math.sqrt(2), abs=1e-9)


def test_gauge_verify_symbolic():
    code, text = run(["gauge-verify", "--alpha", "symbolic"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert rows and all(r["status"] == "PASS" for r in rows)
    assert {"RS", "QS", "QT^-2"} <= {r["relation"] for r in rows}


def test_unknown_flag_is_usage_error():
    assert run(["spectrum", "--frac", "1/2", "--bogus"])[0] == 2


def test_missing_subcommand_is_usage_error():
    assert run([])[0] == 2


@pytest.mark.parametrize("argv", [
    ["spectrum", "--frac", "3/2"],
    ["cf", "--alpha", "pi", "--depth", "3"],
    ["butterfly", "--qmax", "4", "--workers", "0"],
    ["spectrum", "--frac", "1/2", "--tol", "-1"],
])
def test_bad_values_are_usage_errors(argv):
    assert run(argv)[0] == 2


def test_cf_exhausted_is_computation_error():
    code, _ = run(["cf", "--alpha", "0.3", "--depth", "3"])
    assert code == 1
    code, text = run(["cf", "--alpha", "0.3", "--depth", "2"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["a_n"] for r in rows] == ["3", "3"]


def test_cf_golden():
    code, text = run(["cf", "--alpha", "golden", "--depth", "5"])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [int(r["q_n"]) for r in rows] == [1, 2, 3, 5, 8]


def test_invalid_custom_model_is_computation_error(tmp_path):
    bad = tmp_path / "fam.json"
    bad.write_text(json.dumps({"v": 0, "b": {"sin": {"1": 2}}, "v_deriv_max": 0, "b_deriv_max": 13}))
    assert run(["spectrum", "--model", f"custom:{bad}", "--frac", "1/3"])[0] == 1


def test_env_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("HARPERLAB_TOL", "1e-7")
    out = tmp_path / "o"
    run(["spectrum", "--frac", "1/3", "--out", str(out)])
    header = json.loads((out / "bands" / "spectrum_1_3.jsonl").read_text().splitlines()[0])
    assert header["config"]["tol"] == 1e-7
    run(["spectrum", "--frac", "1/3", "--tol", "1e-5", "--out", str(out)])
    header = json.loads((out / "bands" / "spectrum_1_3.jsonl").read_text().splitlines()[0])
    assert header["config"]["tol"] == 1e-5
    monkeypatch.delenv("HARPERLAB_TOL")
    run(["spectrum", "--frac", "1/3", "--out", str(out)])
    header = json.loads((out / "bands" / "spectrum_1_3.jsonl").read_text().splitlines()[0])
    assert header["config"]["tol"] == 1e-9


def test_bad_env_value_is_usage_error(monkeypatch):
    monkeypatch.setenv("HARPERLAB_SEED", "abc")
    assert run(["lyapunov", "--alpha", "golden", "--energy", "0"])[0] == 2


def test_butterfly_deterministic_across_workers():
    a = run(["butterfly", "--qmax", "9", "--no-cache", "--workers", "1"])
    b = run(["butterfly", "--qmax", "9", "--no-cache", "--workers", "2"])
    assert a[0] == b[0] == 0
    assert a[1] == b[1]


def test_butterfly_warm_cache_equals_cold(tmp_path):
    argv = ["butterfly", "--qmax", "7", "--cache-dir", str(tmp_path / "c")]
    cold = run(argv)
    warm = run(argv)
    assert cold == warm
    assert run(argv[:3] + ["--no-cache"])[1] == cold[1]


def test_out_layout_and_reproducible_svg(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        code, _ = run(["butterfly", "--qmax", "5", "--out", str(out), "--svg", "--reproducible", "--no-cache"])
        assert code == 0
    svg1 = (out1 / "plots" / "butterfly.svg").read_text()
    svg2 = (out2 / "plots" / "butterfly.svg").read_text()
    assert svg1.replace(str(out1), "") == svg2.replace(str(out2), "")
    assert 'viewBox="0 0 1000 1000"' in svg1 and "generated" not in svg1
    assert (out1 / "bands" / "butterfly.jsonl").exists()


def test_svg_timestamp_without_reproducible(tmp_path):
    run(["butterfly", "--qmax", "3", "--out", str(tmp_path), "--svg", "--no-cache"])
    assert "generated" in (tmp_path / "plots" / "butterfly.svg").read_text()


def test_lyapunov_csv_and_seed():
    argv = ["lyapunov", "--alpha", "golden", "--energy", "0,5", "--energy", "10", "--steps", "500",
            "--thetas", "10", "--seed", "3"]
    code, text = run(argv)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [float(r["E"]) for r in rows] == [0.0, 5.0, 10.0]
    assert float(rows[2]["L"]) > 1
    assert run(argv) == (code, text)


def test_lyapunov_preconditions():
    assert run(["lyapunov", "--alpha", "golden", "--energy", "0", "--steps", "10"])[0] == 2


def test_ids_subcommand():
    code, text = run(["ids", "--frac", "1/3", "--grid", "21", "--thetas", "8", "--kpoints", "8"])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert code == 0 and len(rows) == 21
    vals = [float(r["N"]) for r in rows]
    assert vals[0] == 0.0 and vals[-1] == 1.0 and vals == sorted(vals)


def test_chiral_check():
    code, text = run(["chiral-check", "--frac", "2/5", "--tol", "1e-6"])
    assert code == 0
    row = next(csv.DictReader(io.StringIO(text)))
    assert row["doubled"] == "4/5" and row["ok"] == "True"


def test_scaling_dimension_continuity(tmp_path):
    code, text = run(["scaling", "--nmax", "8", "--out", str(tmp_path), "--svg", "--reproducible"])
    assert code == 0 and len(text.strip().splitlines()) == 9
    rep = json.loads((tmp_path / "reports" / "scaling.json").read_text())
    assert rep["trend"] == "trend"
    code, text = run(["dimension", "--nmax", "9", "--tgrid", "0.5:0.6:0.05", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "tables" / "dimension.csv").read_text().startswith("# {")
    code, text = run(["continuity", "--model", "shifted-chiral", "--jmin", "4", "--jmax", "8"])
    assert code == 0 and len(text.strip().splitlines()) == 6
