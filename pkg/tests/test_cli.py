import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from horoent import formats
from horoent.cli import EXIT_INVALID, EXIT_OK, ScanSpec, main, run_scan
from horoent.states import FamilyParams, InvalidParamsError, make_state


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_state_round_trip(tmp_path):
    out = tmp_path / "state.json"
    assert main(["state", "--d", "3", "--a", "0.5", "--lambdas", "0,0", "--out", str(out)]) == EXIT_OK
    obj = formats.load(out)
    back = formats.state_from_json(obj)
    expected = make_state(FamilyParams(3, 0.5, (0.0, 0.0)))
    assert back.dims == (3, 3)
    assert np.array_equal(back.matrix, expected.matrix)
    assert obj["params"] == {"d": 3, "a": 0.5, "lambdas": [0.0, 0.0]}
    assert obj["rows"] == obj["cols"] == 9


def test_state_bit_exact_for_awkward_values(tmp_path):
    out = tmp_path / "state.json"
    main(["state", "--d", "4", "--a", "0.1234567890123456789", "--lambdas", "0.3,0.7,0.1", "--out", str(out)])
    back = formats.state_from_json(formats.load(out))
    expected = make_state(FamilyParams(4, 0.1234567890123456789, (0.3, 0.7, 0.1)))
    assert back.matrix.tobytes() == expected.matrix.astype(complex).tobytes()


def test_invalid_parameter_exit_code(capsys):
    assert main(["state", "--d", "3", "--a", "1.2", "--lambdas", "0,0"]) == EXIT_INVALID
    assert "a=1.2" in capsys.readouterr().err
    assert main(["state", "--d", "3", "--a", "0.5", "--lambdas", "0"]) == EXIT_INVALID


def test_io_error_exit_code(tmp_path):
    bad = tmp_path / "missing" / "state.json"
    assert main(["state", "--d", "3", "--a", "0.5", "--lambdas", "0,0", "--out", str(bad)]) not in (0, EXIT_INVALID)


@pytest.mark.parametrize("criterion,outcome", [("ppt", "NotDetected"), ("realign", "Entangled")])
def test_check_single_point(capsys, criterion, outcome):
    assert main(["check", criterion, "--d", "3", "--a", "0.8", "--lambdas", "0,0"]) == EXIT_OK
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["outcome"] == outcome
    assert set(verdict) == {"criterion", "outcome", "evidence", "tol"}


def test_check_dps(capsys):
    assert main(["check", "dps", "--d", "3", "--a", "0.5", "--lambdas", "0.5,0.5", "--no-escalate"]) == EXIT_OK
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["outcome"] == "Entangled" and verdict["criterion"] == "dps2"
    assert verdict["evidence"] < -1e-6


def test_scan_realign_small_grid():
    text = run_scan(ScanSpec(3, 0.8, "realign", grid=3))
    rows = rows_of(text)
    assert text.splitlines()[0] == "lambda1,lambda2,evidence,detected,status"
    assert len(rows) == 9
    coords = [(float(r["lambda1"]), float(r["lambda2"])) for r in rows]
    assert coords == [(x, y) for x in (0.0, 0.5, 1.0) for y in (0.0, 0.5, 1.0)]
    detected = {c for c, r in zip(coords, rows) if r["detected"] == "true"}
    assert {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)} <= detected
    assert (0.5, 0.5) not in detected


def test_scan_ppt_detects_nothing():
    rows = rows_of(run_scan(ScanSpec(3, 0.8, "ppt", grid=11)))
    assert len(rows) == 121
    assert not any(r["detected"] == "true" for r in rows)


def test_scan_dps_small_grid():
    rows = rows_of(run_scan(ScanSpec(3, 0.5, "dps", grid=3)))
    assert len(rows) == 9
    for r in rows:
        assert r["detected"] == "true" or ">" in r["status"], r


def test_scan_independent_of_workers():
    spec = ScanSpec(3, 0.8, "realign", grid=5)
    assert run_scan(spec, workers=1) == run_scan(spec, workers=2)


def test_scan_explicit_points_for_larger_d(capsys):
    argv = ["scan", "--d", "4", "--a", "0.8", "--criterion", "realign",
            "--point", "0,0,0", "--point", "0.5,0.5,0.5"]
    assert main(argv) == EXIT_OK
    rows = rows_of(capsys.readouterr().out)
    assert [r["lambda3"] for r in rows] == ["0.0", "0.5"]


def test_scan_spec_validation():
    with pytest.raises(InvalidParamsError):
        ScanSpec(4, 0.5, "realign")
    with pytest.raises(InvalidParamsError):
        ScanSpec(3, 0.5, "realign", grid=1)
    with pytest.raises(InvalidParamsError):
        ScanSpec(3, 0.5, "range")
    assert main(["scan", "--d", "4", "--a", "0.5", "--criterion", "ppt"]) == EXIT_INVALID


def test_witness_file(tmp_path):
    out = tmp_path / "w.json"
    argv = ["witness", "--d", "3", "--a", "0.5", "--lambdas", "0.5,0.5", "--samples", "2000", "--out", str(out)]
    assert main(argv) == EXIT_OK
    obj = formats.load(out)
    w = formats.matrix_from_json(obj)
    rho = make_state(FamilyParams(3, 0.5, (0.5, 0.5))).matrix
    assert obj["metadata"]["trace_W_rho"] < 0
    assert np.trace(w @ rho).real == pytest.approx(obj["metadata"]["trace_W_rho"], abs=1e-12)
    assert obj["metadata"]["min_sampled_product"] >= -1e-9
    assert obj["dims"] == [3, 3]


def test_witness_refused_for_separable_point(capsys):
    assert main(["witness", "--d", "3", "--a", "0.0", "--lambdas", "0.5,0.5", "--samples", "10"]) == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "horoent", "check", "ppt", "--d", "3", "--a", "0.5",
                           "--lambdas", "0.5,0.5"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["outcome"] == "NotDetected"
