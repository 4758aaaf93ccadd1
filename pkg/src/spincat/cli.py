"""``spincat`` command line: seeded, parallel figure-data emission.

Usage::

    spincat <subcommand> --config cfg.json [--seed U64] [--out PATH]
            [--workers K] [--set key=value ...]

The configuration is a single JSON document; ``--seed``, ``--out`` and
``--workers`` override the corresponding fields, and repeated ``--set``
flags override any other top-level scalar field (values are parsed as JSON
literals).  Unknown configuration fields are rejected.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 unconverged results present (data is still written, flagged in-file).

Every output file echoes the effective configuration in its header;
execution-only fields (output path, worker count) are excluded, so rerunning
the echoed configuration reproduces the data bytes exactly.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as sio
from ._ode import IntegrationError
from ._parallel import default_workers, parallel_map
from .analytic import (
    CatParity,
    mean_fidelity_cat,
    mean_fidelity_css,
    monte_carlo_free_dephasing,
    var_fidelity_css,
)
from .core import (
    EnsembleParams,
    Gaussian,
    Identical,
    SeedSpec,
    TimeGrid,
    TwoGroup,
    sample_detunings,
)
from .lindblad import (
    CatState,
    CssState,
    amplitude_expectation,
    build_collective_generator,
    build_full_generator,
    default_wigner_axes,
    fidelity_to,
    integrate_master,
    parity_expectation,
    prepare_state,
    prepare_state_vector,
    stabilized_cat_state,
    steady_amplitude_sweep,
    steady_state_amplitude,
    wigner,
)
from .meanfield import (
    MeanFieldState,
    ReducedState,
    SyncStatus,
    fit_ellipse,
    integrate_mf_full,
    integrate_reduced,
    refine_boundary,
    symmetric_steady_state,
    sync_phase_sweep,
)

__all__ = ["main", "ConfigError"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_UNCONVERGED = 4


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


# ------------------------------------------------------------- config parsing

def _require(cfg: dict, subcommand: str, required: dict, optional: dict) -> dict:
    unknown = set(cfg) - set(required) - set(optional)
    if unknown:
        raise ConfigError(
            f"{subcommand}: unknown config fields {sorted(unknown)}")
    missing = [k for k in required if k not in cfg]
    if missing:
        raise ConfigError(f"{subcommand}: missing config fields {missing}")
    out = dict(optional)
    out.update(cfg)
    return out


def _positive_int(cfg, key):
    v = cfg[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ConfigError(f"{key} must be a positive integer, got {v!r}")
    return v


def _number(cfg, key, minimum=None):
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {v}")
    return float(v)


def _time_grid(cfg) -> TimeGrid:
    g = cfg["grid"]
    if not isinstance(g, dict):
        raise ConfigError("grid must be an object with t_start/t_end/n_points")
    g = _require(g, "grid", {"t_start": None, "t_end": None, "n_points": None}, {})
    try:
        return TimeGrid(float(g["t_start"]), float(g["t_end"]), int(g["n_points"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}") from exc


def _detuning_model(cfg):
    d = cfg["detuning"]
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("detuning must be an object with a 'kind' field")
    kind = d["kind"]
    try:
        if kind == "identical":
            return Identical(float(d.get("delta0", 0.0)))
        if kind == "gaussian":
            return Gaussian(float(d["sigma"]))
        if kind == "two-group":
            return TwoGroup(float(d["delta"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"detuning: {exc}") from exc
    raise ConfigError(f"unknown detuning kind {kind!r}")


def _seed_spec(cfg) -> SeedSpec:
    s = cfg["seeds"]
    if not isinstance(s, dict):
        raise ConfigError("seeds must be an object")
    s = _require(s, "seeds", {"master_seed": None},
                 {"realization_count": 1})
    try:
        return SeedSpec(int(s["master_seed"]), int(s["realization_count"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seeds: {exc}") from exc


def _state_spec(cfg, params: EnsembleParams):
    s = cfg["state"]
    if not isinstance(s, dict) or "kind" not in s:
        raise ConfigError("state must be an object with a 'kind' field")
    kind = s["kind"]
    if kind == "matched-cat":
        s = _require(s, "state", {"kind": None, "parity": None}, {})
        return stabilized_cat_state(params, s["parity"])
    if kind == "css":
        s = _require(s, "state", {"kind": None, "theta": None}, {"phi": 0.0})
        return CssState(float(s["theta"]), float(s["phi"]))
    if kind == "cat":
        s = _require(s, "state", {"kind": None, "theta": None, "parity": None},
                     {"phi": 0.0})
        try:
            return CatState(float(s["theta"]), float(s["phi"]),
                            CatParity.from_label(s["parity"]))
        except ValueError as exc:
            raise ConfigError(f"state: {exc}") from exc
    raise ConfigError(f"unknown state kind {kind!r}")


def _grid_values(cfg, key):
    v = cfg[key]
    if isinstance(v, list):
        if not v:
            raise ConfigError(f"{key} must not be empty")
        return [float(x) for x in v]
    if isinstance(v, dict):
        v = _require(v, key, {"start": None, "stop": None, "step": None}, {})
        start, stop, step = (float(v["start"]), float(v["stop"]), float(v["step"]))
        if step <= 0 or stop < start:
            raise ConfigError(f"{key}: need step > 0 and stop >= start")
        return [float(x) for x in np.arange(start, stop + step / 2, step)]
    raise ConfigError(f"{key} must be a list or a start/stop/step object")


def _echo_config(cfg: dict) -> dict:
    """Configuration echoed into output headers (drops execution-only keys)."""
    return {k: v for k, v in cfg.items()
            if k not in ("output_path", "worker_count")}


# --------------------------------------------------------------- subcommands

def _run_free_dephasing(cfg: dict) -> int:
    cfg = _require(cfg, "free-dephasing",
                   {"n_spins": None, "state": None, "detuning": None,
                    "grid": None, "seeds": None, "output_path": None},
                   {"worker_count": 0, "emit_realizations": True})
    n = _positive_int(cfg, "n_spins")
    params = EnsembleParams(n_spins=n)
    spec = _state_spec(cfg, params)
    model = _detuning_model(cfg)
    if isinstance(model, Identical):
        raise ConfigError("free-dephasing needs a disorder model "
                          "(gaussian or two-group)")
    grid = _time_grid(cfg)
    seeds = _seed_spec(cfg)
    workers = int(cfg["worker_count"]) or default_workers()
    if isinstance(spec, CssState):
        kind, theta, phi = "css", spec.theta, spec.phi
    else:
        kind = "cat+" if spec.parity is CatParity.EVEN else "cat-"
        theta, phi = spec.theta, spec.phi
    res = monte_carlo_free_dephasing(kind, theta, phi, model, n, grid, seeds,
                                     workers=workers)
    closed = None
    if isinstance(model, Gaussian):
        if kind == "css":
            closed = mean_fidelity_css(theta, model.sigma, n, res.times)
        else:
            parity = CatParity.EVEN if kind == "cat+" else CatParity.ODD
            closed = mean_fidelity_cat(theta, model.sigma, n, parity, res.times)
    traces = res.traces if cfg["emit_realizations"] else None
    sio.write_trace_csv(cfg["output_path"], res.times, res.mean, res.stderr,
                        "free-dephasing", traces=traces, closed_form=closed,
                        config=_echo_config(cfg), seed=seeds.master_seed)
    return EXIT_OK


def _run_analytic(cfg: dict) -> int:
    cfg = _require(cfg, "analytic",
                   {"n_spins": None, "theta": None, "delta_sigma": None,
                    "grid": None, "output_path": None}, {"worker_count": 0})
    n = _positive_int(cfg, "n_spins")
    theta = _number(cfg, "theta", 0.0)
    sigma = _number(cfg, "delta_sigma", 0.0)
    times = _time_grid(cfg).times
    rows = zip(times,
               mean_fidelity_css(theta, sigma, n, times),
               mean_fidelity_cat(theta, sigma, n, CatParity.EVEN, times),
               mean_fidelity_cat(theta, sigma, n, CatParity.ODD, times),
               var_fidelity_css(theta, sigma, n, times))
    sio.write_csv(cfg["output_path"],
                  ["t", "css_mean", "cat_even_mean", "cat_odd_mean", "css_var"],
                  rows, "analytic", config=_echo_config(cfg))
    return EXIT_OK


def _lindblad_task(args):
    (n, eta, gamma2, phase_phi, spec, detunings, times, rtol, atol,
     use_sector) = args
    params = EnsembleParams(n_spins=n, eta=eta, gamma2=gamma2,
                            phase_phi=phase_phi)
    collective = not np.any(detunings)
    if collective:
        gen = build_collective_generator(params)
    else:
        sector = None
        if use_sector and isinstance(spec, CatState):
            # cat+ occupies the even excitation sector, cat- the odd one
            sector = "even" if spec.parity is CatParity.EVEN else "odd"
        gen = build_full_generator(params, detunings, parity_sector=sector)
    ref = prepare_state_vector(spec, gen.basis)
    rho0 = prepare_state(spec, gen.basis)
    snaps = integrate_master(gen, rho0, times, rtol=rtol, atol=atol)
    rows = []
    for t, s in zip(times, snaps):
        amp = amplitude_expectation(s)
        rows.append((t, fidelity_to(s, ref), s.trace().real,
                     parity_expectation(s), amp.real, amp.imag))
    return rows


def _run_lindblad(cfg: dict) -> int:
    cfg = _require(cfg, "lindblad",
                   {"n_spins": None, "eta": None, "state": None,
                    "detuning": None, "grid": None, "seeds": None,
                    "output_path": None},
                   {"gamma2": 1.0, "phase_phi": 0.0, "rtol": 1e-7,
                    "atol": 1e-9, "worker_count": 0, "parity_sector": "auto"})
    n = _positive_int(cfg, "n_spins")
    params = EnsembleParams(n_spins=n, eta=_number(cfg, "eta", 0.0),
                            gamma2=_number(cfg, "gamma2", 0.0),
                            phase_phi=_number(cfg, "phase_phi"))
    spec = _state_spec(cfg, params)
    model = _detuning_model(cfg)
    grid = _time_grid(cfg)
    seeds = _seed_spec(cfg)
    if cfg["parity_sector"] not in ("auto", "none"):
        raise ConfigError("parity_sector must be 'auto' or 'none'")
    use_sector = cfg["parity_sector"] == "auto"
    workers = int(cfg["worker_count"]) or default_workers()
    r = seeds.realization_count
    tasks = []
    for i in range(r):
        det = sample_detunings(model, n, seeds.realization_seed(i))
        tasks.append((n, params.eta, params.gamma2, params.phase_phi, spec,
                      det, grid.times, float(cfg["rtol"]), float(cfg["atol"]),
                      use_sector))
    results = parallel_map(_lindblad_task, tasks, workers=workers)
    if r == 1:
        sio.write_snapshot_csv(cfg["output_path"], results[0], "lindblad",
                               config=_echo_config(cfg),
                               seed=seeds.master_seed)
    else:
        rows = [(i, *row) for i, res in enumerate(results) for row in res]
        mean_fid = np.mean([[row[1] for row in res] for res in results], axis=0)
        for t, f in zip(grid.times, mean_fid):
            rows.append((-1, t, f, float("nan"), float("nan"),
                         float("nan"), float("nan")))
        sio.write_snapshot_csv(cfg["output_path"], rows, "lindblad",
                               config=_echo_config(cfg),
                               seed=seeds.master_seed,
                               realization_column=True)
    return EXIT_OK


def _run_hp_sweep(cfg: dict) -> int:
    cfg = _require(cfg, "hp-sweep",
                   {"n_spins": None, "eta_grid": None, "output_path": None},
                   {"gamma2": 1.0, "phase_phi": 0.0, "t_max": 400.0,
                    "window": 10.0, "drift_tol": 1e-6, "rtol": 1e-8,
                    "atol": 1e-10, "worker_count": 0})
    n = _positive_int(cfg, "n_spins")
    etas = _grid_values(cfg, "eta_grid")
    workers = int(cfg["worker_count"]) or default_workers()
    points = steady_amplitude_sweep(
        n, etas, t_max=_number(cfg, "t_max", 0.0),
        gamma2=_number(cfg, "gamma2", 0.0),
        phase_phi=_number(cfg, "phase_phi"),
        window=_number(cfg, "window", 0.0),
        drift_tol=_number(cfg, "drift_tol", 0.0),
        rtol=float(cfg["rtol"]), atol=float(cfg["atol"]), workers=workers)
    sio.write_amplitude_sweep_csv(cfg["output_path"], points, "hp-sweep",
                                  config=_echo_config(cfg))
    return EXIT_OK if all(p.converged for p in points) else EXIT_UNCONVERGED


def _run_wigner(cfg: dict) -> int:
    cfg = _require(cfg, "wigner",
                   {"n_spins": None, "eta": None, "output_path": None},
                   {"gamma2": 1.0, "phase_phi": 0.0, "t_max": 400.0,
                    "window": 10.0, "drift_tol": 1e-6, "rtol": 1e-8,
                    "atol": 1e-10, "grid_points": 81, "half_size": 0.0,
                    "worker_count": 0})
    n = _positive_int(cfg, "n_spins")
    eta = _number(cfg, "eta", 0.0)
    point = steady_state_amplitude(
        n, eta, gamma2=_number(cfg, "gamma2", 0.0),
        phase_phi=_number(cfg, "phase_phi"), t_max=_number(cfg, "t_max", 0.0),
        window=_number(cfg, "window", 0.0),
        drift_tol=_number(cfg, "drift_tol", 0.0),
        rtol=float(cfg["rtol"]), atol=float(cfg["atol"]))
    pts = _positive_int(cfg, "grid_points")
    half = _number(cfg, "half_size", 0.0)
    if half > 0:
        ax = np.linspace(-half, half, pts)
        re_axis, im_axis = ax, ax.copy()
    else:
        re_axis, im_axis = default_wigner_axes(eta, cfg["gamma2"], pts)
    grid = wigner(point.rho, re_axis, im_axis)
    sio.write_wigner_csv(cfg["output_path"], grid, "wigner",
                         config=_echo_config(cfg))
    return EXIT_OK if point.converged else EXIT_UNCONVERGED


def _run_mf_trajectory(cfg: dict) -> int:
    cfg = _require(cfg, "mf-trajectory",
                   {"model": None, "n_spins": None, "eta": None, "grid": None,
                    "output_path": None},
                   {"gamma2": 1.0, "delta": 0.0, "detuning": None,
                    "seeds": None, "initial": "steady", "rtol": 1e-10,
                    "atol": 1e-12, "worker_count": 0})
    model = cfg["model"]
    n = _positive_int(cfg, "n_spins")
    eta = _number(cfg, "eta", 0.0)
    gamma2 = _number(cfg, "gamma2", 0.0)
    delta = _number(cfg, "delta")
    params = EnsembleParams(n_spins=n, eta=eta, gamma2=gamma2)
    times = _time_grid(cfg).times
    if cfg["initial"] == "steady":
        try:
            s0 = symmetric_steady_state(n, eta, gamma2)
        except ValueError as exc:
            raise ConfigError(f"initial 'steady': {exc}") from exc
        init = ReducedState(s0.amplitude,
                            s0.phase if model == "symmetric" else 0.0,
                            s0.inversion)
    elif isinstance(cfg["initial"], dict):
        ini = _require(cfg["initial"], "initial",
                       {"amplitude": None, "phase": None, "inversion": None}, {})
        init = ReducedState(float(ini["amplitude"]), float(ini["phase"]),
                            float(ini["inversion"]))
    else:
        raise ConfigError("initial must be 'steady' or an "
                          "amplitude/phase/inversion object")

    seed = None
    if model in ("symmetric", "two_ensemble"):
        traj = integrate_reduced(model, init, params, delta, times,
                                 rtol=float(cfg["rtol"]), atol=float(cfg["atol"]))
        triples = [tuple(row) for row in traj]
    elif model == "full":
        if cfg["detuning"] is None:
            raise ConfigError("full model needs a detuning object")
        dmodel = _detuning_model(cfg)
        if cfg["seeds"] is not None:
            seeds = _seed_spec(cfg)
            seed = seeds.master_seed
            det = sample_detunings(dmodel, n, seeds.realization_seed(0))
        else:
            det = sample_detunings(dmodel, n)
        # uniform start; 'phase' measured from pi/4 as in the reduced models
        state0 = MeanFieldState(
            np.full(n, init.amplitude * np.exp(1j * (np.pi / 4 + init.phase))),
            np.full(n, init.inversion))
        traj = integrate_mf_full(state0, params, det, times,
                                 rtol=float(cfg["rtol"]), atol=float(cfg["atol"]))
        triples = []
        for st in traj:
            mean_sp = st.coherences.mean()
            triples.append((abs(mean_sp), float(np.angle(mean_sp)),
                            float(st.inversions.mean())))
    else:
        raise ConfigError(f"unknown model {model!r}")
    sio.write_reduced_trajectory_csv(cfg["output_path"], times, triples,
                                     "mf-trajectory", config=_echo_config(cfg),
                                     seed=seed)
    return EXIT_OK


def _run_sync_sweep(cfg: dict) -> int:
    cfg = _require(cfg, "sync-sweep",
                   {"n_spins": None, "eta_grid": None, "delta_grid": None,
                    "output_path": None},
                   {"gamma2": 1.0, "budget": 1e4, "start": "synchronized",
                    "refine": False, "refine_iterations": 8,
                    "worker_count": 0})
    n = _positive_int(cfg, "n_spins")
    etas = _grid_values(cfg, "eta_grid")
    deltas = _grid_values(cfg, "delta_grid")
    workers = int(cfg["worker_count"]) or default_workers()
    budget = _number(cfg, "budget", 0.0)
    gamma2 = _number(cfg, "gamma2", 0.0)
    points = sync_phase_sweep(n, etas, deltas, budget=budget, gamma2=gamma2,
                              start=cfg["start"], workers=workers)
    if cfg["refine"]:
        points = points + refine_boundary(
            n, points, budget=budget,
            iterations=_positive_int(cfg, "refine_iterations"),
            gamma2=gamma2, workers=workers)
    sio.write_sync_csv(cfg["output_path"], points, "sync-sweep",
                       config=_echo_config(cfg))
    unconverged = any(p.status is SyncStatus.UNCONVERGED for p in points)
    return EXIT_UNCONVERGED if unconverged else EXIT_OK


def _run_ellipse_fit(cfg: dict) -> int:
    cfg = _require(cfg, "ellipse-fit",
                   {"input_path": None, "n_spins": None, "output_path": None},
                   {"worker_count": 0})
    n = _positive_int(cfg, "n_spins")
    if not Path(cfg["input_path"]).exists():
        raise ConfigError(f"input_path not found: {cfg['input_path']}")
    points = sio.read_sync_csv(cfg["input_path"])
    try:
        fit = fit_ellipse(points, n)
    except ValueError as exc:
        raise ConfigError(f"ellipse-fit: {exc}") from exc
    sio.write_ellipse_json(cfg["output_path"], fit, n,
                           config=_echo_config(cfg))
    return EXIT_OK


_SUBCOMMANDS = {
    "free-dephasing": _run_free_dephasing,
    "analytic": _run_analytic,
    "lindblad": _run_lindblad,
    "hp-sweep": _run_hp_sweep,
    "wigner": _run_wigner,
    "mf-trajectory": _run_mf_trajectory,
    "sync-sweep": _run_sync_sweep,
    "ellipse-fit": _run_ellipse_fit,
}


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spincat",
        description="Spin-cat dephasing and synchronization figure data.")
    parser.add_argument("subcommand", choices=sorted(_SUBCOMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override seeds.master_seed")
    parser.add_argument("--out", default=None, help="override output_path")
    parser.add_argument("--workers", type=int, default=None,
                        help="override worker_count")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VAL",
                        help="override a top-level config field (JSON value)")
    args = parser.parse_args(argv)

    try:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config is not valid JSON (line {exc.lineno}, col {exc.colno}): "
                f"{exc.msg}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        for item in args.set:
            key, value = _parse_override(item)
            cfg[key] = value
        if args.seed is not None:
            cfg.setdefault("seeds", {})
            if not isinstance(cfg["seeds"], dict):
                raise ConfigError("seeds must be an object")
            cfg["seeds"]["master_seed"] = args.seed
        if args.out is not None:
            cfg["output_path"] = args.out
        if args.workers is not None:
            cfg["worker_count"] = args.workers
        code = _SUBCOMMANDS[args.subcommand](cfg)
    except ConfigError as exc:
        print(f"spincat: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, TypeError, KeyError) as exc:
        print(f"spincat: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"spincat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return code


if __name__ == "__main__":
    sys.exit(main())
