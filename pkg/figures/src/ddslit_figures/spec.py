"""Figure specifications and CSV schema validation.

A spec is a JSON document declaring what to draw from which artifact files;
rendering never mutates inputs and is deterministic given (spec, inputs).

```json
{
  "kind": "joint_grid",            // joint_grid | survival | trajectories | semi_compare
  "out": "eta_sweep.png",
  "scatter_points": 10000,         // seeded subsample size per scatter
  "seed": 0,
  "panels": [
    {"title": "eta = -1",
     "with_collapse": "run_a/events.csv",       // black
     "without_collapse": "run_b/events.csv",    // dark cyan
     "semiclassical": "run_c/events.csv",       // dark blue (semi_compare)
     "t_left_range": [27.9, 29.2],              // optional axis ranges (ms)
     "t_right_range": [127.2, 128.2]}
  ],
  "survival": "out/survival.csv",               // survival kind only
  "trajectory_file": "run_a/trajectories.csv"   // trajectories kind only
}
```
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EVENT_COLUMNS = [
    "event_id", "source", "eta", "species", "seed",
    "t_left_ms", "x_left_um", "t_right_ms", "x_right_um",
    "first_screen", "collapse_applied", "lost_reason",
]
SURVIVAL_COLUMNS = ["t_s", "survival_fraction", "kappa_over_kappa0"]
TRAJECTORY_COLUMNS = ["event_id", "t_ms", "x1_um", "y1_um", "x2_um", "y2_um"]

# color roles, fixed
COLOR_WITH_COLLAPSE = "black"
COLOR_WITHOUT_COLLAPSE = "darkcyan"
COLOR_SEMICLASSICAL = "darkblue"

KINDS = ("joint_grid", "survival", "trajectories", "semi_compare")


class SchemaError(ValueError):
    """An input file does not match the expected artifact schema."""


@dataclass(frozen=True)
class Panel:
    title: str = ""
    with_collapse: str | None = None
    without_collapse: str | None = None
    semiclassical: str | None = None
    t_left_range: tuple[float, float] | None = None
    t_right_range: tuple[float, float] | None = None

    def inputs(self):
        return [p for p in (self.with_collapse, self.without_collapse,
                            self.semiclassical) if p]


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    out: str
    panels: tuple[Panel, ...] = ()
    survival: str | None = None
    trajectory_file: str | None = None
    scatter_points: int = 10_000
    seed: int = 0
    base_dir: Path = field(default_factory=Path)

    def input_files(self) -> list[Path]:
        files = []
        for panel in self.panels:
            files += [self.base_dir / p for p in panel.inputs()]
        if self.survival:
            files.append(self.base_dir / self.survival)
        if self.trajectory_file:
            files.append(self.base_dir / self.trajectory_file)
        return files

    def validate(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if self.kind in ("joint_grid", "semi_compare") and not self.panels:
            raise SchemaError(f"{self.kind} spec needs at least one panel")
        if self.kind == "survival" and not self.survival:
            raise SchemaError("survival spec needs a 'survival' file")
        if self.kind == "trajectories" and not self.trajectory_file:
            raise SchemaError("trajectories spec needs a 'trajectory_file'")
        for path in self.input_files():
            if not path.exists():
                raise SchemaError(f"input file missing: {path}")
        for path in self.input_files():
            columns = {
                "events": EVENT_COLUMNS,
                "survival": SURVIVAL_COLUMNS,
                "trajectories": TRAJECTORY_COLUMNS,
            }
            name = path.name
            if "survival" in name:
                expected = SURVIVAL_COLUMNS
            elif "trajector" in name:
                expected = TRAJECTORY_COLUMNS
            else:
                expected = EVENT_COLUMNS
            check_header(path, expected)


def check_header(path: Path, expected: list[str]):
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), None)
    if header != expected:
        missing = [c for c in expected if c not in (header or [])]
        offending = missing[0] if missing else (header or ["<empty>"])[0]
        raise SchemaError(
            f"{path}: column mismatch (offending column: {offending!r})")


def load_spec(path: str | Path) -> FigureSpec:
    path = Path(path)
    raw = json.loads(path.read_text())
    panels = tuple(
        Panel(
            title=p.get("title", ""),
            with_collapse=p.get("with_collapse"),
            without_collapse=p.get("without_collapse"),
            semiclassical=p.get("semiclassical"),
            t_left_range=tuple(p["t_left_range"]) if "t_left_range" in p else None,
            t_right_range=tuple(p["t_right_range"]) if "t_right_range" in p else None,
        )
        for p in raw.get("panels", [])
    )
    spec = FigureSpec(
        kind=raw.get("kind", ""),
        out=raw.get("out", "figure.png"),
        panels=panels,
        survival=raw.get("survival"),
        trajectory_file=raw.get("trajectory_file"),
        scatter_points=int(raw.get("scatter_points", 10_000)),
        seed=int(raw.get("seed", 0)),
        base_dir=path.parent,
    )
    spec.validate()
    return spec


def read_events(path: Path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EVENT_COLUMNS:
            check_header(path, EVENT_COLUMNS)
        rows = list(reader)
    def col(name, astype=float):
        if astype is float:
            return np.array([float(r[name]) if r[name] else np.nan for r in rows])
        return np.array([r[name] for r in rows])
    return {
        "t_left": col("t_left_ms"),
        "t_right": col("t_right_ms"),
        "lost": col("lost_reason", str),
        "source": rows[0]["source"] if rows else "",
        "eta": rows[0]["eta"] if rows else "",
    }


def read_survival(path: Path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SURVIVAL_COLUMNS:
            check_header(path, SURVIVAL_COLUMNS)
        rows = list(reader)
    t = np.array([float(r["t_s"]) for r in rows])
    s = np.array([float(r["survival_fraction"]) for r in rows])
    k = np.array([float(r["kappa_over_kappa0"]) for r in rows])
    return {"t_s": t, "survival": s, "kappa": k}


def read_trajectories(path: Path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRAJECTORY_COLUMNS:
            check_header(path, TRAJECTORY_COLUMNS)
        rows = list(reader)
    out: dict[int, list] = {}
    for r in rows:
        out.setdefault(int(r["event_id"]), []).append(
            [float(r["t_ms"]), float(r["x1_um"]), float(r["y1_um"]),
             float(r["x2_um"]), float(r["y2_um"])])
    return {k: np.array(v) for k, v in out.items()}


def manifest_footer(spec: FigureSpec) -> str:
    """Short provenance line: manifest content hashes next to the inputs,
    falling back to hashes of the input bytes."""
    tags = []
    seen = set()
    for path in spec.input_files():
        manifest = path.parent / "manifest.json"
        if manifest.exists():
            try:
                h = json.loads(manifest.read_text())["content_hash"][:12]
            except (KeyError, json.JSONDecodeError):
                h = hashlib.sha256(path.read_bytes()).hexdigest()[:12]
        else:
            h = hashlib.sha256(path.read_bytes()).hexdigest()[:12]
        if h not in seen:
            seen.add(h)
            tags.append(h)
    return "manifest " + ",".join(tags) if tags else "no manifest"
