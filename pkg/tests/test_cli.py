import csv
import io
import json
import math

import numpy as np
import pytest

from bernstein_sdof import cli
from bernstein_sdof.closed_form import exact_free_response
from bernstein_sdof.errors import ConfigError
from bernstein_sdof.weakform import SdofSystem


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    header = json.loads(lines[0][2:])
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    return header, rows


def test_simulate_free_vibration(tmp_path):
    out, js = tmp_path / "run.csv", tmp_path / "run.json"
    rc = cli.main(["simulate", "--p", "5", "--h", "0.2", "--steps", "10", "--x0", "1", "--v0", "0",
                   "--csv", str(out), "--json", str(js), "--n-per-step", "4"])
    assert rc == 0
    header, rows = read_csv(out)
    assert header["config"]["p"] == 5
    assert len(rows) == 10 * 4 + 1
    assert {"x_err", "v_err", "ME", "ME_c"} <= set(rows[0])
    last = rows[-1]
    xe, _ = exact_free_response(SdofSystem(), 1.0, 0.0, 2.0)
    assert float(last["t"]) == pytest.approx(2.0)
    assert float(last["x"]) == pytest.approx(float(xe), abs=1e-6)
    summary = json.loads(js.read_text())
    assert summary["final"]["step"] == 10
    assert summary["errors"]["x_err_final"] < 1e-6


def test_simulate_zero_data_is_zero(tmp_path):
    out = tmp_path / "z.csv"
    rc = cli.main(["simulate", "--c", "0.2", "--p", "4", "--h-over-T", "0.1", "--steps", "5",
                   "--x0", "0", "--v0", "0", "--csv", str(out)])
    assert rc == 0
    _, rows = read_csv(out)
    for r in rows:
        for key in ("x", "v", "ME", "ME_c", "x_err", "v_err"):
            assert float(r[key]) == 0.0


def test_simulate_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p": 3, "h": 0.1, "steps": 3, "excitation": {"type": "constant", "value": 2.0}}))
    out = tmp_path / "o.csv"
    assert cli.main(["simulate", "--config", str(cfg), "--steps", "4", "--csv", str(out)]) == 0
    header, rows = read_csv(out)
    assert header["config"]["steps"] == 4
    assert header["config"]["excitation"]["value"] == 2.0
    assert int(rows[-1]["step"]) == 4


def test_simulate_harmonic_has_no_error_columns(tmp_path):
    out = tmp_path / "h.csv"
    exc = json.dumps({"type": "harmonic", "amplitude": 1.0, "frequency": 2.0})
    assert cli.main(["simulate", "--h", "0.1", "--steps", "2", "--excitation", exc, "--csv", str(out)]) == 0
    _, rows = read_csv(out)
    assert "x_err" not in rows[0]


@pytest.mark.parametrize("argv", [
    ["simulate", "--p", "2", "--h", "0.1"],
    ["simulate", "--h", "-1"],
    ["simulate"],  # neither h nor h_over_T
    ["simulate", "--h", "0.1", "--c", "-0.5"],
    ["simulate", "--h", "0.1", "--excitation", '{"type": "square"}'],
    ["simulate", "--h", "0.1", "--excitation", '{"type": "piecewise_constant"}'],
    ["simulate", "--h", "0.1", "--excitation", "{bad"],
    ["study-angles", "--p", "3"],  # no seed
    ["study-legendre", "--p", "2"],
])
def test_config_errors_exit_1(argv, capsys):
    assert cli.main(argv) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_json_decode_error_reports_position(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "p": 3,\n  "h": oops\n}')
    assert cli.main(["simulate", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "line 3" in err and "column" in err


def test_unknown_config_field():
    with pytest.raises(ConfigError, match="bogus"):
        cli.RunConfig.from_dict({"h": 0.1, "bogus": 1})


def test_numerical_failure_exit_2(capsys):
    exc = json.dumps({"type": "tabulated", "times": [0, 0.15, 1.0], "values": [0, float("nan"), 0]})
    assert cli.main(["simulate", "--h", "0.1", "--steps", "5", "--excitation", exc]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_run_config_round_trip():
    cfg = cli.RunConfig.from_dict({"c": 0.1, "h_over_T": 0.05, "p": 6, "steps": 3,
                                   "excitation": {"type": "piecewise_exponential", "values": [1, 2, 3]}})
    again = cli.RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert again.step_length == pytest.approx(0.05 * cfg.system.period)


def test_large_p_warns(caplog):
    with caplog.at_level("WARNING", logger="bernstein_sdof"):
        cli.RunConfig.from_dict({"p": 30, "h": 0.1})
    assert "p=30" in caplog.text


def test_study_angles_reproducible(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["study-angles", "--p", "3-4", "--c", "0,0.1", "--h-over-T", "1,0.5", "--samples", "200", "--seed", "11"]
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["seed"] == 11
    assert len(doc["cells"]) == 8
    cell = doc["cells"]["p=3,c=0.1,h_over_T=0.5"]
    assert set(cell["s_h"]) == {"worst", "mean", "best"}


def test_study_legendre_output(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.main(["study-legendre", "--p", "3-6", "--out", str(out)]) == 0
    _, rows = read_csv(out)
    assert {int(r["p"]) for r in rows} == {3, 4, 5, 6}
    assert all(math.isfinite(float(r["s"])) for r in rows)


def test_verify_p3(capsys):
    assert cli.main(["verify-p3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_project_error(tmp_path):
    out = tmp_path / "e.csv"
    assert cli.main(["project-error", "--p", "3-8", "--h", "1,0.5", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert len(rows) == 12
    assert header["slope_h"] == pytest.approx(1.5, abs=1e-6)
    errs = [float(r["error"]) for r in rows if float(r["h"]) == 1.0]
    assert np.all(np.diff(errs) < 0)


def test_project_error_single_point_slope_is_null(tmp_path):
    out = tmp_path / "e.csv"
    assert cli.main(["project-error", "--p", "5", "--h", "1", "--out", str(out)]) == 0
    header, _ = read_csv(out)
    assert header["slope_p"] is None and header["slope_h"] is None
