import json

import numpy as np
import pytest

from spincat.cli import main
from spincat.io import read_header, read_sync_csv
from spincat.meanfield import SyncPhasePoint, SyncStatus
import spincat.io as sio


def _write_cfg(tmp_path, name, cfg):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _load_numeric(path):
    with open(path) as fh:
        rows = [ln.strip() for ln in fh
                if ln.strip() and not ln.startswith("#")]
    return np.array([[float(x) for x in r.split(",")] for r in rows[1:]])


def _fd_config(tmp_path, out="fd.csv", **overrides):
    cfg = {
        "n_spins": 30,
        "state": {"kind": "cat", "parity": "odd", "theta": 0.18, "phi": 0.0},
        "detuning": {"kind": "gaussian", "sigma": 1.0},
        "grid": {"t_start": 0.0, "t_end": 2.0, "n_points": 6},
        "seeds": {"master_seed": 11, "realization_count": 8},
        "output_path": str(tmp_path / out),
    }
    cfg.update(overrides)
    return cfg


def test_free_dephasing_structure(tmp_path):
    cfg = _fd_config(tmp_path)
    code = main(["free-dephasing", "--config", _write_cfg(tmp_path, "c.json", cfg)])
    assert code == 0
    head = read_header(cfg["output_path"])
    assert head["tool"] == "free-dephasing"
    assert head["seed"] == 11
    assert head["columns"][0] == "t"
    assert head["columns"][1:9] == [f"r{i}" for i in range(8)]
    assert head["columns"][-3:] == ["mean", "stderr", "closed_form"]
    assert "output_path" not in head["config"]
    assert "worker_count" not in head["config"]


def test_free_dephasing_round_trip(tmp_path):
    cfg = _fd_config(tmp_path)
    path1 = cfg["output_path"]
    assert main(["free-dephasing", "--config",
                 _write_cfg(tmp_path, "c.json", cfg)]) == 0
    echoed = read_header(path1)["config"]
    echoed["output_path"] = str(tmp_path / "fd2.csv")
    assert main(["free-dephasing", "--config",
                 _write_cfg(tmp_path, "c2.json", echoed)]) == 0
    b1 = open(path1, "rb").read()
    b2 = open(echoed["output_path"], "rb").read()
    assert b1 == b2


def test_free_dephasing_worker_invariance(tmp_path):
    cfg = _fd_config(tmp_path, out="w1.csv", worker_count=1)
    assert main(["free-dephasing", "--config",
                 _write_cfg(tmp_path, "c1.json", cfg)]) == 0
    cfg4 = _fd_config(tmp_path, out="w4.csv", worker_count=4)
    assert main(["free-dephasing", "--config",
                 _write_cfg(tmp_path, "c4.json", cfg4)]) == 0
    assert open(cfg["output_path"], "rb").read() == \
        open(cfg4["output_path"], "rb").read()


def test_seed_override_changes_data(tmp_path):
    cfg = _fd_config(tmp_path, out="a.csv")
    cfgfile = _write_cfg(tmp_path, "c.json", cfg)
    assert main(["free-dephasing", "--config", cfgfile]) == 0
    assert main(["free-dephasing", "--config", cfgfile, "--seed", "99",
                 "--out", str(tmp_path / "b.csv")]) == 0
    a = open(tmp_path / "a.csv").read()
    b = open(tmp_path / "b.csv").read()
    assert a != b
    assert read_header(tmp_path / "b.csv")["seed"] == 99


def test_invalid_configs_exit_2(tmp_path):
    out = tmp_path / "never.csv"
    cfg = _fd_config(tmp_path, out="never.csv", n_spins=-5)
    assert main(["free-dephasing", "--config",
                 _write_cfg(tmp_path, "c.json", cfg)]) == 2
    assert not out.exists()
    # unknown field
    cfg = _fd_config(tmp_path, out="never.csv")
    cfg["bogus_field"] = 1
    assert main(["free-dephasing", "--config",
                 _write_cfg(tmp_path, "c2.json", cfg)]) == 2
    assert not out.exists()
    # malformed JSON
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["free-dephasing", "--config", str(bad)]) == 2
    # missing file
    assert main(["free-dephasing", "--config", str(tmp_path / "nope.json")]) == 2


def test_analytic_subcommand(tmp_path):
    cfg = {
        "n_spins": 100, "theta": 0.05, "delta_sigma": 1.0,
        "grid": {"t_start": 0.0, "t_end": 4.0, "n_points": 9},
        "output_path": str(tmp_path / "an.csv"),
    }
    assert main(["analytic", "--config", _write_cfg(tmp_path, "c.json", cfg)]) == 0
    head = read_header(cfg["output_path"])
    assert head["columns"] == ["t", "css_mean", "cat_even_mean",
                               "cat_odd_mean", "css_var"]
    data = _load_numeric(cfg["output_path"])
    assert data.shape == (9, 5)
    assert np.all(data[:, 1] <= 1.0 + 1e-12)


def test_lindblad_single_realization_columns(tmp_path):
    cfg = {
        "n_spins": 3, "eta": 0.2,
        "state": {"kind": "matched-cat", "parity": "odd"},
        "detuning": {"kind": "identical", "delta0": 0.0},
        "grid": {"t_start": 0.0, "t_end": 10.0, "n_points": 3},
        "seeds": {"master_seed": 5},
        "output_path": str(tmp_path / "lb.csv"),
    }
    assert main(["lindblad", "--config", _write_cfg(tmp_path, "c.json", cfg)]) == 0
    head = read_header(cfg["output_path"])
    assert head["columns"] == ["t", "fidelity", "trace", "parity", "re_a", "im_a"]
    data = _load_numeric(cfg["output_path"])
    assert data[0, 1] == pytest.approx(1.0, abs=1e-10)
    assert np.all(np.abs(data[:, 2] - 1.0) < 1e-8)   # trace
    assert np.all(np.abs(data[:, 3] + 1.0) < 1e-6)   # odd parity conserved


def test_mf_trajectory_and_sync_pipeline(tmp_path):
    n = 2000
    cfg = {
        "model": "two_ensemble", "n_spins": n, "eta": 60.0, "delta": 1e-4,
        "grid": {"t_start": 0.0, "t_end": 200.0, "n_points": 5},
        "initial": "steady",
        "output_path": str(tmp_path / "mf.csv"),
    }
    assert main(["mf-trajectory", "--config",
                 _write_cfg(tmp_path, "c.json", cfg)]) == 0
    data = _load_numeric(cfg["output_path"])
    assert data.shape == (5, 4)
    assert np.all(data[:, 1] > 0)

    sweep_cfg = {
        "n_spins": n,
        "eta_grid": [0.02 * n, 0.04 * n],
        "delta_grid": [0.01, 0.05, 0.09],
        "budget": 3000.0,
        "refine": True, "refine_iterations": 3,
        "output_path": str(tmp_path / "sync.csv"),
        "worker_count": 2,
    }
    code = main(["sync-sweep", "--config", _write_cfg(tmp_path, "s.json", sweep_cfg)])
    assert code in (0, 4)
    points = read_sync_csv(sweep_cfg["output_path"])
    assert len(points) >= 6
    assert any(p.status is SyncStatus.SYNCHRONIZED for p in points)

    fit_cfg = {
        "input_path": sweep_cfg["output_path"],
        "n_spins": n,
        "output_path": str(tmp_path / "fit.json"),
    }
    # only 2 eta columns -> not enough boundary points: config error
    assert main(["ellipse-fit", "--config",
                 _write_cfg(tmp_path, "f.json", fit_cfg)]) == 2


def test_ellipse_fit_json(tmp_path):
    n = 10**4
    a_true, b_true = 0.03125, 2.2077
    xs = np.linspace(0.005, 0.055, 9)
    pts = [SyncPhasePoint(x * n, b_true * np.sqrt(a_true**2 - (x - a_true)**2) * n * n,
                          0.0, SyncStatus.SYNCHRONIZED) for x in xs]
    sio.write_sync_csv(tmp_path / "sync.csv", pts, "sync-sweep", config={})
    cfg = {
        "input_path": str(tmp_path / "sync.csv"),
        "n_spins": n,
        "output_path": str(tmp_path / "fit.json"),
    }
    assert main(["ellipse-fit", "--config", _write_cfg(tmp_path, "c.json", cfg)]) == 0
    doc = json.loads((tmp_path / "fit.json").read_text())
    assert doc["a"] == pytest.approx(a_true, rel=1e-8)
    assert doc["b"] == pytest.approx(b_true, rel=1e-8)
    assert doc["eta_c"] == pytest.approx(2 * a_true * n, rel=1e-8)
    assert doc["delta_c"] == pytest.approx(a_true * b_true, rel=1e-8)
    assert doc["n"] == n


def test_unconverged_exit_code_4(tmp_path):
    # hopeless budget: nothing settles, everything is flagged unconverged
    cfg = {
        "n_spins": 2000,
        "eta_grid": [0.02 * 2000],
        "delta_grid": [1e-6],
        "budget": 1.0,
        "output_path": str(tmp_path / "s.csv"),
    }
    assert main(["sync-sweep", "--config", _write_cfg(tmp_path, "c.json", cfg)]) == 4
    points = read_sync_csv(cfg["output_path"])
    assert points[0].status is SyncStatus.UNCONVERGED


def test_numerical_failure_exit_code_3(tmp_path, monkeypatch):
    from spincat._ode import IntegrationError
    import spincat.cli as cli

    def boom(*args, **kwargs):
        raise IntegrationError("step size underflow")

    monkeypatch.setattr(cli, "monte_carlo_free_dephasing", boom)
    cfg = _fd_config(tmp_path)
    assert main(["free-dephasing", "--config",
                 _write_cfg(tmp_path, "c.json", cfg)]) == 3


def test_format_value_nan_spelling(tmp_path):
    assert sio.format_value(float("nan")) == "NaN"
    assert sio.format_value(0.1) == "0.1"
    assert sio.format_value(True) == "1"
    assert sio.format_value(3) == "3"
