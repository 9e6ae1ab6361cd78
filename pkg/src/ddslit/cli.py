"""Command-line front end.

Subcommands::

    ddslit run  --preset fig2 [--sweep eta=-1,0,1] ...   intrinsic pipeline
    ddslit abr  --preset fig5 --kappa 0.333,1,3 ...      back-action pipeline
    ddslit semi --preset fig7 [--sweep y_left=...] ...   semiclassical comparison

Every run writes its events CSV, metrics and a manifest into its own
directory; sweeps nest one directory per swept value.  Exit codes: 0 ok,
2 configuration error, 3 runtime error.  The only environment override is
``SEED`` (the --seed flag wins over it).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .config import (ConfigError, ExperimentConfig, load_config, parse_length,
                     to_internal_units, with_overrides)
from .dynamics import Screens, run_ensemble
from .presets import load_preset
from .semiclassical import run_semiclassical
from . import abr as abr_mod
from . import events_io, stats


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ddslit", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="cmd", required=True)
    for name, helptext in (("run", "intrinsic arrival-time ensemble"),
                           ("abr", "absorbing-boundary (detector back-action) ensemble"),
                           ("semi", "semiclassical vs Bohmian comparison")):
        sp = sub.add_parser(name, help=helptext)
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--preset", help="named preset (fig2/fig3/fig4/fig5/fig7)")
        src.add_argument("--config", help="path to a config file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--events", type=int, default=None)
        sp.add_argument("--sweep", default=None, metavar="KEY=V1,V2",
                        help="run once per value (keys: eta, y_left, y_right, seed)")
        sp.add_argument("--species", default=None,
                        help="species name or comma list (sweeps over masses)")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--out-dir", default="out")
        sp.add_argument("--no-collapse", action="store_true")
        sp.add_argument("--trajectories", type=int, default=0,
                        help="dump decimated trajectories for the first N events")
        sp.add_argument("--debug-full-trajectories", action="store_true",
                        help="keep every accepted step instead of decimating")
        sp.add_argument("--progress-every", type=float, default=0.0,
                        help="progress print cadence in seconds (0 = quiet)")
        if name == "abr":
            sp.add_argument("--kappa", default="1",
                            help="comma list of detector constants in kappa0 units")
            sp.add_argument("--no-backaction", action="store_true",
                            help="intrinsic trajectories truncated at the detector")
    return p


_SWEEP_PARSERS = {
    "eta": float,
    "y_left": parse_length,
    "y_right": parse_length,
    "seed": int,
}


def resolve_base_config(args) -> ExperimentConfig:
    if args.preset:
        cfg = load_preset(args.preset)
    else:
        cfg = load_config(Path(args.config).read_text())
    if "SEED" in os.environ:
        cfg = with_overrides(cfg, seed=int(os.environ["SEED"]))
    if args.seed is not None:
        cfg = with_overrides(cfg, seed=args.seed)
    if args.events is not None:
        cfg = with_overrides(cfg, n_events=args.events)
    if args.no_collapse:
        cfg = with_overrides(cfg, collapse_enabled=False)
    return cfg


def sweep_runs(cfg: ExperimentConfig, args) -> list[tuple[str, ExperimentConfig]]:
    """Expand --sweep / --species into (label, config) runs."""
    runs = [("", cfg)]
    if args.species:
        names = [s.strip() for s in args.species.split(",") if s.strip()]
        if len(names) == 1 and not args.sweep:
            return [("", with_overrides(cfg, species=names[0]))]
        runs = [(f"species={n}", with_overrides(cfg, species=n)) for n in names]
    if args.sweep:
        key, _, values = args.sweep.partition("=")
        key = key.strip()
        if key not in _SWEEP_PARSERS:
            raise ConfigError(f"unsupported sweep key {key!r}; "
                              f"choose from {sorted(_SWEEP_PARSERS)}")
        parse = _SWEEP_PARSERS[key]
        tokens = [v.strip() for v in values.split(",") if v.strip()]
        if not tokens:
            raise ConfigError("empty sweep value list")
        swept = []
        for label, base in runs:
            for tok in tokens:
                lab = f"{key}={tok}" if not label else f"{label},{key}={tok}"
                swept.append((lab, with_overrides(base, **{key: parse(tok)})))
        runs = swept
    return runs


def _run_dir(out_dir: Path, label: str) -> Path:
    d = out_dir if not label else out_dir / label.replace("/", "_")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _progress_printer(every: float):
    if every <= 0:
        return None
    state = {"last": time.time()}

    def cb(done, total):
        now = time.time()
        if now - state["last"] >= every or done == total:
            state["last"] = now
            print(f"  {done}/{total} events", file=sys.stderr)

    return cb


def _cleanup(paths):
    for p in paths:
        try:
            Path(p).unlink()
        except OSError:
            pass


def _marginal_histograms(table, run_dir, written):
    tl, tr = stats.kept_times(table)
    for name, sample in (("left", tl), ("right", tr)):
        if sample.size == 0:
            continue
        edges = stats.central_edges(sample)
        counts, _ = np.histogram(sample, bins=edges)
        written.append(events_io.write_histogram(
            run_dir / f"hist_{name}.csv", edges, counts))


def cmd_intrinsic(cfg: ExperimentConfig, args) -> int:
    out_dir = Path(args.out_dir)
    combined = {}
    for label, run_cfg in sweep_runs(cfg, args):
        run_dir = _run_dir(out_dir, label)
        written: list[Path] = []
        t0 = time.time()
        try:
            icfg = to_internal_units(run_cfg)
            cap = 500_000 if args.debug_full_trajectories else 2000
            table = run_ensemble(icfg, workers=args.workers,
                                 trajectories=args.trajectories,
                                 progress=_progress_printer(args.progress_every),
                                 trajectory_knot_cap=cap)
            written.append(events_io.write_events(run_dir / "events.csv", table))
            report = stats.metrics_report(table)
            (run_dir / "metrics.json").write_text(
                json.dumps(report, indent=2, sort_keys=True) + "\n")
            written.append(run_dir / "metrics.json")
            _marginal_histograms(table, run_dir, written)
            if args.trajectories:
                written.append(events_io.write_trajectories(
                    run_dir / "trajectories.csv", table.trajectories))
            events_io.write_manifest(run_dir, run_cfg, written, time.time() - t0)
            combined[label or "run"] = report
        except Exception:
            _cleanup(written)
            raise
    if len(combined) > 1:
        (out_dir / "sweep_metrics.json").write_text(
            json.dumps(combined, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_abr(cfg: ExperimentConfig, args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    icfg = to_internal_units(cfg)
    scr = Screens.from_config(icfg)

    if args.no_backaction:
        run_dir = _run_dir(out_dir, "nobackaction")
        written = []
        t0 = time.time()
        try:
            table = run_ensemble(icfg, workers=args.workers,
                                 trajectories=args.trajectories,
                                 progress=_progress_printer(args.progress_every))
            written.append(events_io.write_events(run_dir / "events.csv", table))
            if args.trajectories:
                written.append(events_io.write_trajectories(
                    run_dir / "trajectories.csv", table.trajectories))
            events_io.write_manifest(run_dir, cfg, written, time.time() - t0)
        except Exception:
            _cleanup(written)
            raise
        return 0

    ratios = []
    for tok in args.kappa.split(","):
        tok = tok.strip()
        if not tok:
            continue
        val = float(tok)
        if val <= 0:
            raise ConfigError(f"kappa must be positive, got {tok}")
        ratios.append(val)
    if not ratios:
        raise ConfigError("empty kappa list")

    k0 = abr_mod.kappa0_for(icfg, scr)
    curves, curves_wave = [], []
    import numba
    if args.workers is not None:
        numba.set_num_threads(min(max(1, args.workers),
                                  numba.config.NUMBA_NUM_THREADS))
    for ratio in ratios:
        run_dir = _run_dir(out_dir, f"kappa={ratio:g}")
        written = []
        t0 = time.time()
        try:
            res = abr_mod.evolve_abr_ensemble(
                icfg, kappa=ratio * k0, scr=scr,
                options=abr_mod.AbrOptions(trajectories=args.trajectories))
            written.append(events_io.write_events(run_dir / "events.csv", res.table))
            if args.trajectories:
                written.append(events_io.write_trajectories(
                    run_dir / "trajectories.csv", res.trajectories))
            events_io.write_manifest(run_dir, cfg, written, time.time() - t0,
                                     extra={"kappa_over_kappa0": ratio})
            curves.append((ratio, res.survival_t, res.survival_traj))
            curves_wave.append((ratio, res.survival_t, res.survival_wave))
        except Exception:
            _cleanup(written)
            raise
    events_io.write_survival(out_dir / "survival.csv", curves)
    events_io.write_survival(out_dir / "survival_wave_norm.csv", curves_wave)
    return 0


def cmd_semiclassical(cfg: ExperimentConfig, args) -> int:
    out_dir = Path(args.out_dir)
    comparison = {}
    for label, run_cfg in sweep_runs(cfg, args):
        run_dir = _run_dir(out_dir, label)
        written: list[Path] = []
        t0 = time.time()
        try:
            icfg = to_internal_units(run_cfg)
            semi = run_semiclassical(icfg)
            bohm = run_ensemble(icfg, workers=args.workers,
                                progress=_progress_printer(args.progress_every))
            written.append(events_io.write_events(
                run_dir / "events_semiclassical.csv", semi))
            written.append(events_io.write_events(
                run_dir / "events_bohmian.csv", bohm))
            entry = {}
            for side in ("left", "right"):
                a = getattr(semi, f"t_{side}")[semi.kept]
                b = getattr(bohm, f"t_{side}")[bohm.kept]
                ks = stats.ks_distance(a, b)
                entry[f"ks_{side}"] = {
                    "statistic": ks.statistic, "critical": ks.critical,
                    "reject": ks.reject, "n_semi": ks.n_a, "n_bohm": ks.n_b,
                }
            comparison[label or "run"] = entry
            (run_dir / "comparison.json").write_text(
                json.dumps(entry, indent=2, sort_keys=True) + "\n")
            written.append(run_dir / "comparison.json")
            events_io.write_manifest(run_dir, run_cfg, written, time.time() - t0)
        except Exception:
            _cleanup(written)
            raise
    (out_dir / "comparison_table.json").write_text(
        json.dumps(comparison, indent=2, sort_keys=True) + "\n")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_base_config(args)
        runs = sweep_runs(cfg, args)  # validate sweep syntax up front
        for _, rc in runs:
            to_internal_units(rc)
    except (ConfigError, KeyError, FileNotFoundError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.cmd == "run":
            return cmd_intrinsic(cfg, args)
        if args.cmd == "abr":
            return cmd_abr(cfg, args)
        return cmd_semiclassical(cfg, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
