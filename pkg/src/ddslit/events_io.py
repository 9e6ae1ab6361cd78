"""Deterministic file formats: events CSV, survival CSV, manifests.

The events schema is fixed (column order is part of the contract)::

    event_id, source, eta, species, seed, t_left_ms, x_left_um,
    t_right_ms, x_right_um, first_screen, collapse_applied, lost_reason

Times are milliseconds, positions micrometers, all floats printed with 12
significant digits; missing values are empty fields.  Every run directory
gets a ``manifest.json`` listing the resolved configuration, the seed and a
sha256 checksum per emitted file, so byte-identical reproduction is
checkable (and the embedded config INI text is sufficient to re-run).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_dict, config_to_ini
from .dynamics import LOST_LABELS, EventTable, Trajectory

EVENT_COLUMNS = [
    "event_id", "source", "eta", "species", "seed",
    "t_left_ms", "x_left_um", "t_right_ms", "x_right_um",
    "first_screen", "collapse_applied", "lost_reason",
]

_FIRST = {0: "left", 1: "right", -1: ""}


def _fmt(x: float) -> str:
    return "" if not np.isfinite(x) else f"{x:.12g}"


def events_csv_text(table: EventTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENT_COLUMNS)
    eta = f"{table.eta:.12g}"
    for i in range(len(table)):
        w.writerow([
            int(table.event_id[i]), table.source, eta, table.species,
            table.seed,
            _fmt(table.t_left[i]), _fmt(table.x_left[i]),
            _fmt(table.t_right[i]), _fmt(table.x_right[i]),
            _FIRST[int(table.first[i])],
            "true" if table.collapse_applied[i] else "false",
            LOST_LABELS[int(table.lost[i])],
        ])
    return buf.getvalue()


def write_events(path: Path, table: EventTable) -> Path:
    path = Path(path)
    path.write_text(events_csv_text(table))
    return path


def read_events(path: Path) -> dict:
    """Columnar dict of an events CSV (floats NaN where empty)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EVENT_COLUMNS:
            missing = set(EVENT_COLUMNS) - set(reader.fieldnames or [])
            raise ValueError(f"events schema mismatch; missing/misordered: "
                             f"{sorted(missing) or reader.fieldnames}")
        rows = list(reader)
    out: dict = {c: [] for c in EVENT_COLUMNS}
    for row in rows:
        for c in EVENT_COLUMNS:
            out[c].append(row[c])
    floats = ["eta", "t_left_ms", "x_left_um", "t_right_ms", "x_right_um"]
    for c in floats:
        out[c] = np.array([float(v) if v else np.nan for v in out[c]])
    out["event_id"] = np.array([int(v) for v in out["event_id"]])
    out["seed"] = np.array([int(v) for v in out["seed"]])
    out["collapse_applied"] = np.array([v == "true" for v in out["collapse_applied"]])
    return out


def write_survival(path: Path, curves: list[tuple[float, np.ndarray, np.ndarray]]) -> Path:
    """Survival CSV: t_s, survival_fraction, kappa_over_kappa0 (times in s)."""
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t_s", "survival_fraction", "kappa_over_kappa0"])
    for ratio, t_ms, frac in curves:
        for t, f in zip(t_ms, frac):
            w.writerow([f"{t / 1e3:.12g}", f"{f:.12g}", f"{ratio:.12g}"])
    path.write_text(buf.getvalue())
    return path


def write_trajectories(path: Path, trajectories: list[Trajectory]) -> Path:
    """Trajectory polylines: event_id, t_ms, x1_um, y1_um, x2_um, y2_um."""
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["event_id", "t_ms", "x1_um", "y1_um", "x2_um", "y2_um"])
    for traj in trajectories:
        for row in traj.knots:
            w.writerow([traj.event_id] + [_fmt(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def write_histogram(path: Path, edges: np.ndarray, counts: np.ndarray) -> Path:
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_left_edge", "count"])
    for e, c in zip(edges[:-1], counts):
        w.writerow([f"{e:.12g}", f"{c:.12g}"])
    path.write_text(buf.getvalue())
    return path


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def content_hash(cfg: ExperimentConfig) -> str:
    payload = json.dumps(config_dict(cfg), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()


def write_manifest(out_dir: Path, cfg: ExperimentConfig, outputs: list[Path],
                   wall_clock_s: float, extra: dict | None = None) -> Path:
    out_dir = Path(out_dir)
    manifest = {
        "config": config_dict(cfg),
        "config_ini": config_to_ini(cfg),
        "content_hash": content_hash(cfg),
        "seed": cfg.seed,
        "versions": {"ddslit": __version__, "numpy": np.__version__},
        "wall_clock_s": round(wall_clock_s, 3),
        "outputs": {
            str(Path(p).name): sha256_file(p) for p in outputs
        },
        "created_unix": int(time.time()),
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
