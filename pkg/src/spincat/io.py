"""CSV/JSON data emission with self-describing headers.

Every output file starts with ``#``-prefixed header lines carrying the tool
name, a canonical-JSON echo of the effective configuration (execution-only
fields like the output path and worker count are excluded, so identical
physics produces byte-identical files), and the master seed when one was
used.  Floats are written with shortest round-trip precision; NaN is spelled
``NaN``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .meanfield import EllipseFit, SyncPhasePoint, SyncStatus

__all__ = [
    "format_value",
    "write_csv",
    "read_header",
    "write_trace_csv",
    "write_snapshot_csv",
    "write_amplitude_sweep_csv",
    "write_wigner_csv",
    "write_sync_csv",
    "read_sync_csv",
    "write_ellipse_json",
    "write_reduced_trajectory_csv",
]


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "NaN" if math.isnan(x) else repr(x)
    return str(x)


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _header_lines(tool: str, config: dict | None, seed: int | None) -> list[str]:
    lines = [f"# spincat {tool}"]
    if config is not None:
        lines.append(f"# config: {_canonical_json(config)}")
    if seed is not None:
        lines.append(f"# seed: {seed}")
    return lines


def write_csv(path, columns: list[str], rows, tool: str,
              config: dict | None = None, seed: int | None = None) -> None:
    """Write rows of mixed scalars with the standard header block."""
    out = _header_lines(tool, config, seed)
    out.append("# columns: " + ",".join(columns))
    out.append(",".join(columns))
    for row in rows:
        out.append(",".join(format_value(v) for v in row))
    Path(path).write_text("\n".join(out) + "\n")


def read_header(path) -> dict:
    """Parse the ``#`` header block back into {tool, config, seed, columns}."""
    info: dict = {"tool": None, "config": None, "seed": None, "columns": None}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body.startswith("spincat "):
                info["tool"] = body[len("spincat "):]
            elif body.startswith("config: "):
                info["config"] = json.loads(body[len("config: "):])
            elif body.startswith("seed: "):
                info["seed"] = int(body[len("seed: "):])
            elif body.startswith("columns: "):
                info["columns"] = body[len("columns: "):].split(",")
    return info


def write_trace_csv(path, times, mean, stderr, tool: str, traces=None,
                    closed_form=None, config=None, seed=None) -> None:
    """Fidelity-trace table: t, optional per-realization columns, mean, stderr,
    optional closed-form column."""
    columns = ["t"]
    blocks = [np.asarray(times)]
    if traces is not None:
        traces = np.asarray(traces)
        width = len(str(max(traces.shape[0] - 1, 0)))
        columns += [f"r{i:0{width}d}" for i in range(traces.shape[0])]
        blocks += [traces[i] for i in range(traces.shape[0])]
    columns += ["mean", "stderr"]
    blocks += [np.asarray(mean), np.asarray(stderr)]
    if closed_form is not None:
        columns.append("closed_form")
        blocks.append(np.asarray(closed_form))
    rows = zip(*blocks)
    write_csv(path, columns, rows, tool, config=config, seed=seed)


SNAPSHOT_COLUMNS = ["t", "fidelity", "trace", "parity", "re_a", "im_a"]


def write_snapshot_csv(path, rows, tool: str, config=None, seed=None,
                       realization_column: bool = False) -> None:
    """Trajectory snapshots in the stable column order
    (t, fidelity, trace, parity, re_a, im_a); disorder-averaged runs prepend
    a ``realization`` column (-1 labels the mean-fidelity rows)."""
    columns = (["realization"] if realization_column else []) + SNAPSHOT_COLUMNS
    write_csv(path, columns, rows, tool, config=config, seed=seed)


def write_amplitude_sweep_csv(path, points, tool: str, config=None) -> None:
    columns = ["eta_tilde", "amplitude", "converged", "t_detected"]
    rows = [(p.eta, p.amplitude, p.converged, p.t_detected) for p in points]
    write_csv(path, columns, rows, tool, config=config)


def write_wigner_csv(path, grid, tool: str, config=None) -> None:
    rows = [(re, im, grid.values[j, i])
            for j, im in enumerate(grid.im_axis)
            for i, re in enumerate(grid.re_axis)]
    write_csv(path, ["re_beta", "im_beta", "w"], rows, tool, config=config)


def write_sync_csv(path, points: list[SyncPhasePoint], tool: str,
                   config=None) -> None:
    rows = [(p.eta_tilde, p.delta_tilde,
             float("nan") if p.zeta_ss is None else p.zeta_ss,
             p.status.value) for p in points]
    write_csv(path, ["eta_tilde", "delta_tilde", "zeta_ss", "status"],
              rows, tool, config=config)


def read_sync_csv(path) -> list[SyncPhasePoint]:
    points = []
    with open(path) as fh:
        header_seen = False
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                header_seen = True  # column header row
                continue
            eta_s, delta_s, zeta_s, status_s = line.split(",")
            status = SyncStatus(status_s)
            zeta = None if status is not SyncStatus.SYNCHRONIZED else float(zeta_s)
            points.append(SyncPhasePoint(float(eta_s), float(delta_s), zeta, status))
    return points


def write_ellipse_json(path, fit: EllipseFit, n: int, config=None) -> None:
    doc = {
        "a": fit.a,
        "b": fit.b,
        "residual": fit.residual,
        "eta_c": fit.eta_c(n),
        "delta_c": fit.delta_c(),
        "n": n,
    }
    if config is not None:
        doc["config"] = config
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def write_reduced_trajectory_csv(path, times, triples, tool: str,
                                 config=None, seed=None) -> None:
    """Columns (t, amplitude, phase, inversion) for reduced/full runs."""
    rows = [(t, a, ph, z) for t, (a, ph, z) in zip(times, triples)]
    write_csv(path, ["t", "amplitude", "phase", "inversion"], rows, tool,
              config=config, seed=seed)
