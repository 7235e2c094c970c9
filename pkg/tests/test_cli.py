import json

import numpy as np
import pytest

from saturate.cli import main

PROTO = {"type": "protograph", "matrix": [[3, 3]]}
REG36 = {"2": 1.0}
REG36_RHO = {"5": 1.0}
SW = {
    "type": "slepian_wolf",
    "lambda1": REG36,
    "rho1": REG36_RHO,
    "lambda2": REG36,
    "rho2": REG36_RHO,
    "gamma": 0.5,
    "p": 0.5,
    "path": {"kind": "diagonal"},
}
EMAC = {
    "type": "emac",
    "lambda1": REG36,
    "rho1": REG36_RHO,
    "lambda2": REG36,
    "rho2": REG36_RHO,
}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_threshold_command(tmp_path):
    cfg = {
        "system": PROTO,
        "analysis": {"gap_grid": [0.44, 0.46, 0.50], "bisect_tol": 1e-5, "seed": 1},
    }
    rc = main(["threshold", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o")])
    assert rc == 0
    rep = json.loads((tmp_path / "o" / "threshold_report.json").read_text())
    assert rep["thresholds"]["bp"] == pytest.approx(0.42944, abs=1e-3)
    assert rep["thresholds"]["potential"] == pytest.approx(0.48815, abs=1e-3)
    assert rep["enumeration"] == "heuristic"
    assert len(rep["config_hash"]) == 64
    assert rep["tool"]["name"] == "saturate"
    csv_lines = (tmp_path / "o" / "energy_gap.csv").read_text().splitlines()
    assert csv_lines[0] == "eps,energy_gap"
    assert len(csv_lines) == 4


def test_threshold_empty_grid_is_config_error(tmp_path):
    cfg = {"system": PROTO, "analysis": {"gap_grid": []}}
    assert main(["threshold", "--config", _write(tmp_path, cfg)]) == 2


def test_threshold_unknown_key_rejected(tmp_path):
    cfg = {"system": PROTO, "analysis": {"gap_grid": [0.4], "nonsense": True}}
    assert main(["threshold", "--config", _write(tmp_path, cfg)]) == 2


def test_threshold_missing_config(tmp_path):
    assert main(["threshold", "--config", str(tmp_path / "nope.json")]) == 2


def test_threshold_theta_sweep(tmp_path):
    cfg = {
        "system": SW,
        "analysis": {
            "gap_grid": [0.1, 0.2],
            "theta_values": [0.25, 0.5, 0.75, 1.0],
            "bisect_tol": 1e-4,
        },
    }
    out = tmp_path / "sweep"
    rc = main(["threshold", "--config", _write(tmp_path, cfg), "--out", str(out), "--jobs", "2"])
    assert rc == 0
    reports = sorted(out.glob("threshold_report_theta_*.json"))
    assert len(reports) == 4
    bps = []
    for p in reports:
        rep = json.loads(p.read_text())
        assert rep["theta"] is not None
        bps.append(rep["thresholds"]["bp"])
    assert len(set(round(b, 8) for b in bps)) == 4  # distinct paths, distinct thresholds


def test_theta_sweep_rejected_for_non_sw(tmp_path):
    cfg = {"system": PROTO, "analysis": {"gap_grid": [0.4], "theta_values": [0.5]}}
    assert main(["threshold", "--config", _write(tmp_path, cfg)]) == 2


def test_coupled_command_profile_contract(tmp_path):
    L, w, d = 6, 3, 2
    cfg = {
        "system": PROTO,
        "analysis": {
            "L": L,
            "w": w,
            "eps_values": [0.47, 0.50],
            "record_every": 25,
            "width_bound": False,
        },
    }
    out = tmp_path / "o"
    rc = main(["coupled", "--config", _write(tmp_path, cfg), "--out", str(out)])
    assert rc == 0
    rep = json.loads((out / "coupled_report.json").read_text())
    runs = {r["eps"]: r for r in rep["runs"]}
    assert runs[0.47]["converged_to_zero"] is True
    assert runs[0.50]["converged_to_zero"] is False
    for eps in (0.47, 0.5):
        lines = (out / f"coupled_profile_eps_{eps:g}.csv").read_text().splitlines()
        assert lines[0] == "iteration,position,component,value"
        n_rows = len(lines) - 1
        assert n_rows == runs[eps]["snapshots_recorded"] * (2 * L + w) * d


def test_coupled_zero_window_is_config_error(tmp_path):
    cfg = {"system": PROTO, "analysis": {"L": 4, "w": 0, "eps_values": [0.4]}}
    assert main(["coupled", "--config", _write(tmp_path, cfg)]) == 2


def test_coupled_threshold_mode(tmp_path):
    cfg = {
        "system": PROTO,
        "analysis": {
            "L": 8,
            "w": 2,
            "eps_values": [0.45],
            "mode": "threshold",
            "bisect_tol": 1e-3,
            "max_iter": 30000,
            "width_bound": False,
        },
    }
    out = tmp_path / "o"
    rc = main(["coupled", "--config", _write(tmp_path, cfg), "--out", str(out)])
    assert rc == 0
    rep = json.loads((out / "coupled_report.json").read_text())
    assert 0.44 < rep["coupled_bp_threshold"] < 0.50


def test_coupled_width_bound_reported(tmp_path):
    cfg = {
        "system": PROTO,
        "analysis": {"L": 4, "w": 2, "eps_values": [0.45, 0.50]},
    }
    out = tmp_path / "o"
    assert main(["coupled", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
    rep = json.loads((out / "coupled_report.json").read_text())
    runs = {r["eps"]: r for r in rep["runs"]}
    assert runs[0.45]["width_bound"] > 1000.0
    assert runs[0.50]["width_bound"] is None  # gap not positive above the threshold
    assert rep["hessian_bound"] == pytest.approx(351.0, rel=1e-3)


def test_verify_command_passes(tmp_path):
    cfg = {"system": EMAC, "analysis": {"n_samples": 300, "seed": 5}}
    out = tmp_path / "o"
    rc = main(["verify", "--config", _write(tmp_path, cfg), "--out", str(out)])
    assert rc == 0
    rep = json.loads((out / "verify_report.json").read_text())
    assert rep["admissibility"]["ok"] is True
    assert rep["battery"]["ok"] is True
    assert len(rep["battery"]["checks"]) > 20


def test_verify_corrupt_f_exits_4(tmp_path, capsys):
    cfg = {"system": PROTO, "analysis": {"n_samples": 200, "corrupt_f": True}}
    rc = main(["verify", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o")])
    assert rc == 4
    err = capsys.readouterr().err
    assert "gradient_bit" in err


def test_verify_zero_samples_is_config_error(tmp_path):
    cfg = {"system": PROTO, "analysis": {"n_samples": 0}}
    assert main(["verify", "--config", _write(tmp_path, cfg)]) == 2


def test_outputs_deterministic(tmp_path):
    cfg = {
        "system": PROTO,
        "analysis": {"gap_grid": [0.45, 0.5], "bisect_tol": 1e-4, "seed": 9},
    }
    p = _write(tmp_path, cfg)
    for jobs, name in ((1, "a"), (4, "b")):
        assert main(["threshold", "--config", p, "--jobs", str(jobs),
                     "--out", str(tmp_path / name)]) == 0
    for fname in ("threshold_report.json", "energy_gap.csv"):
        assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()


def test_csv_floats_roundtrip(tmp_path):
    cfg = {"system": PROTO, "analysis": {"gap_grid": [0.456789123456789], "bisect_tol": 1e-4}}
    out = tmp_path / "o"
    assert main(["threshold", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
    line = (out / "energy_gap.csv").read_text().splitlines()[1]
    eps_text, gap_text = line.split(",")
    assert float(eps_text) == 0.456789123456789
    assert float(gap_text) == json.loads((out / "threshold_report.json").read_text())[
        "energy_gap_curve"][0][1]
