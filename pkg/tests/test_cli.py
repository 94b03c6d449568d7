import csv
import io
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from oracles import euler_laplace
from resurge.cli import COLUMNS, HGrid, JobSpec, main, parse_result, render, run, write_atomic
from resurge.core import ValidationError

FIX = Path(__file__).resolve().parent.parent / "fixtures"


def invoke(capsys, *args):
    try:
        code = main([str(a) for a in args])
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.reader(io.StringIO(text)))


def test_borel_sum_euler_fixture(capsys):
    code, out, _ = invoke(capsys, "borel-sum", "--series", FIX / "euler_series.json", "--h", "0.1,0.05",
                          "--side", "plus")
    assert code == 0
    rows = rows_of(out)
    assert rows[0] == COLUMNS
    assert float(rows[1][2]) == pytest.approx(0.0915633, abs=1e-7)
    assert float(rows[1][2]) == pytest.approx(euler_laplace(0.1), abs=1e-9)
    assert float(rows[2][2]) == pytest.approx(euler_laplace(0.05), abs=1e-9)
    assert all(float(r[4]) >= 0 for r in rows[1:])


def test_stokes_pole_fixture(capsys):
    code, out, _ = invoke(capsys, "stokes", "--minor", FIX / "pole_minor.json", "--h", "0.5")
    assert code == 0
    r = rows_of(out)[1]
    jump = complex(float(r[2]), float(r[3]))
    assert abs(jump) == pytest.approx(2 * math.pi * math.exp(-2), rel=1e-9)


@pytest.mark.parametrize("grid", ["0.1:0.2:0", "0.1:0.2"])
def test_empty_or_malformed_grid_exits_2(capsys, grid):
    code, _, err = invoke(capsys, "borel-sum", "--series", FIX / "euler_series.json", "--h-grid", grid)
    assert code == 2
    payload = json.loads(err)
    assert payload["exit_code"] == 2 and payload["error"] == "ValidationError"


def test_unknown_flag_exits_2(capsys):
    code, _, err = invoke(capsys, "stokes", "--bogus")
    assert code == 2
    assert json.loads(err)["exit_code"] == 2


def test_h_outside_sector_exits_2(capsys):
    code, _, _ = invoke(capsys, "borel-sum", "--series", FIX / "euler_series.json", "--h", "-0.1")
    assert code == 2


def test_pinch_exits_3_with_location(capsys):
    code, _, err = invoke(capsys, "convolve", "--f", FIX / "euler_minor.json", "--g", FIX / "euler_minor.json",
                          "--h", "0.1", "--t=-2+0.00001j")
    assert code == 3
    payload = json.loads(err)
    assert payload["error"] == "PinchError"
    assert payload["location"][0] == pytest.approx(-2.0, abs=1e-4)


def test_convolve_values(capsys):
    code, out, _ = invoke(capsys, "convolve", "--f", FIX / "euler_minor.json", "--g", FIX / "euler_minor.json",
                          "--h", "0.1", "--t", "0.3", "--out", "json")
    assert code == 0
    res = parse_result(out)
    v = res["metadata"]["convolution_values"][0]["value"]
    assert complex(*v) == pytest.approx(2 * math.log(1.3) / 2.3, abs=1e-10)
    assert res["rows"][0][2] == pytest.approx(euler_laplace(0.1) ** 2, abs=1e-9)


def test_compose_geometric(capsys):
    code, out, _ = invoke(capsys, "compose", "--g", FIX / "g_geometric.json", "--phi", FIX / "phi_h.json",
                          "--h-grid", "0.05:0.25:5")
    assert code == 0
    for r in rows_of(out)[1:]:
        h = float(r[0])
        assert float(r[2]) == pytest.approx(h / (1 - h), abs=1e-8)


def test_schrodinger_command(capsys):
    code, out, _ = invoke(capsys, "schrodinger", "--potential", "q^2 + h*q^4", "--order", "6",
                          "--h-grid", "0.02:0.1:5", "--out", "json")
    assert code == 0
    res = json.loads(out)
    assert res["columns"][-2:] == ["residual", "slope"]
    assert res["rows"][0][-1] >= 5
    assert res["metadata"]["E_coeffs"][2][0] == pytest.approx(0.75)


def test_json_round_trip(capsys):
    code, out, _ = invoke(capsys, "borel-sum", "--series", FIX / "euler_series.json", "--h-grid",
                          "0.05:0.2:3:log", "--out", "json")
    assert code == 0
    res = parse_result(out)
    job = res["job"]
    assert isinstance(job, JobSpec)
    assert JobSpec.from_json(job.to_json()) == job
    again = run(job)
    assert np.array_equal(np.array(again["rows"]), np.array(res["rows"]))
    assert parse_result(render(again, "json"))["rows"] == res["rows"]


def test_job_file_reproduces_flags(capsys, tmp_path):
    job = JobSpec("stokes", {"minor": str(FIX / "pole_minor.json")}, h_values=[0.5, 0.3])
    p = tmp_path / "job.json"
    p.write_text(json.dumps(job.to_json()))
    code, out, _ = invoke(capsys, "stokes", "--job", p)
    assert code == 0
    code2, out2, _ = invoke(capsys, "stokes", "--minor", FIX / "pole_minor.json", "--h", "0.5,0.3")
    assert out == out2


def test_output_written_atomically(capsys, tmp_path):
    target = tmp_path / "res.csv"
    code, out, _ = invoke(capsys, "stokes", "--minor", FIX / "pole_minor.json", "--h", "0.5", "-o", target)
    assert code == 0 and out == ""
    assert rows_of(target.read_text())[0] == COLUMNS
    assert [f for f in os.listdir(tmp_path) if f.startswith(".resurge-")] == []
    write_atomic(str(target), "replaced\n")
    assert target.read_text() == "replaced\n"


def test_precision_file_is_validated(capsys, tmp_path):
    p = tmp_path / "prec.json"
    p.write_text(json.dumps({"sheet_depth": 0}))
    code, _, _ = invoke(capsys, "stokes", "--minor", FIX / "pole_minor.json", "--h", "0.5",
                        "--precision-file", p)
    assert code == 2


def test_hgrid_parsing():
    assert np.allclose(HGrid.parse("0.1:0.4:4").values(), [0.1, 0.2, 0.3, 0.4])
    assert np.allclose(HGrid.parse("0.01:1:3:log").values(), [0.01, 0.1, 1])
    with pytest.raises(ValidationError):
        HGrid.parse("0.1:0.4:x")
    with pytest.raises(ValidationError):
        HGrid.parse("-1:1:3:log").values()


def test_check_invariants(capsys):
    code, out, _ = invoke(capsys, "check-invariants", "--seed", "3", "--out", "json")
    res = json.loads(out)
    assert code == 0
    assert res["metadata"]["all_passed"]
    assert len(res["rows"]) >= 5


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "resurge", "stokes", "--minor", str(FIX / "pole_minor.json"),
                           "--h", "0.5"], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == ",".join(COLUMNS)
