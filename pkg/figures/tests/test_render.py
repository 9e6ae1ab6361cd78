"""Render tests against synthetic fixture CSVs (no simulator dependency)."""

import json

import numpy as np
import pytest

from ddslit_figures.render import render, subsample
from ddslit_figures.spec import SchemaError, load_spec

EVENT_HEADER = ("event_id,source,eta,species,seed,t_left_ms,x_left_um,"
                "t_right_ms,x_right_um,first_screen,collapse_applied,"
                "lost_reason\n")


def write_events(path, n=500, seed=0, eta=-1.0):
    rng = np.random.default_rng(seed)
    rows = [EVENT_HEADER]
    tl = rng.normal(28.5, 0.15, n)
    tr = rng.normal(127.7, 0.14, n)
    for i in range(n):
        rows.append(f"{i},intrinsic,{eta},sodium-23,1,{tl[i]:.6f},-5.7e5,"
                    f"{tr[i]:.6f},2.5e6,left,true,\n")
    path.write_text("".join(rows))
    return path


def write_survival(path):
    lines = ["t_s,survival_fraction,kappa_over_kappa0\n"]
    t = np.linspace(0, 8.6e-3, 120)
    for ratio, rate in ((0.333, 400.0), (1.0, 1500.0), (3.0, 420.0)):
        s = np.exp(-np.maximum(t - 2.5e-3, 0) * rate)
        for ti, si in zip(t, s):
            lines.append(f"{ti:.8g},{si:.8g},{ratio}\n")
    path.write_text("".join(lines))
    return path


def write_trajectories(path, n_events=4):
    lines = ["event_id,t_ms,x1_um,y1_um,x2_um,y2_um\n"]
    t = np.linspace(0, 3, 80)
    for ev in range(n_events):
        for ti in t:
            y = 10 - 4.905 * ti**2 + 0.1 * ev
            lines.append(f"{ev},{ti:.5f},{5000 + 2e4 * ti:.2f},{y:.4f},"
                         f"{-5000 - 2e4 * ti:.2f},{-y:.4f}\n")
    path.write_text("".join(lines))
    return path


def make_eta_sweep_spec(tmp_path, n_panels=5):
    panels = []
    for i, eta in enumerate(np.linspace(-1, 1, n_panels)):
        on = write_events(tmp_path / f"on_{i}.csv", seed=2 * i, eta=eta)
        off = write_events(tmp_path / f"off_{i}.csv", seed=2 * i + 1, eta=eta)
        panels.append({"title": f"eta={eta:g}",
                       "with_collapse": on.name,
                       "without_collapse": off.name})
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "kind": "joint_grid", "out": "eta_sweep.png", "panels": panels,
    }))
    return spec_path


def test_five_panel_eta_sweep_renders(tmp_path):
    spec = load_spec(make_eta_sweep_spec(tmp_path))
    out = render(spec)
    assert out.exists() and out.stat().st_size > 10_000


def test_survival_plot_renders(tmp_path):
    write_survival(tmp_path / "survival.csv")
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "kind": "survival", "out": "survival.png",
        "survival": "survival.csv",
    }))
    out = render(load_spec(spec_path))
    assert out.exists() and out.stat().st_size > 5_000


def test_trajectory_plot_renders(tmp_path):
    write_trajectories(tmp_path / "trajectories.csv")
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "kind": "trajectories", "out": "traj.png",
        "trajectory_file": "trajectories.csv",
    }))
    assert render(load_spec(spec_path)).exists()


def test_semi_compare_renders(tmp_path):
    bohm = write_events(tmp_path / "bohm.csv", seed=1)
    semi = write_events(tmp_path / "semi.csv", seed=2)
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "kind": "semi_compare", "out": "cmp.png",
        "panels": [{"title": "middle",
                    "with_collapse": bohm.name,
                    "semiclassical": semi.name}],
    }))
    assert render(load_spec(spec_path)).exists()


def test_subsample_is_exactly_ten_thousand_seeded():
    idx = subsample(250_000, 10_000, seed=0)
    assert len(idx) == 10_000
    assert len(np.unique(idx)) == 10_000
    again = subsample(250_000, 10_000, seed=0)
    assert np.array_equal(idx, again)
    other = subsample(250_000, 10_000, seed=1)
    assert not np.array_equal(idx, other)
    small = subsample(500, 10_000, seed=0)
    assert np.array_equal(small, np.arange(500))


def test_render_is_deterministic(tmp_path):
    spec_path = make_eta_sweep_spec(tmp_path, n_panels=2)
    a = render(load_spec(spec_path)).read_bytes()
    b = render(load_spec(spec_path)).read_bytes()
    assert a == b


def test_missing_input_named(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "kind": "joint_grid", "out": "x.png",
        "panels": [{"with_collapse": "absent.csv"}],
    }))
    with pytest.raises(SchemaError, match="absent.csv"):
        load_spec(spec_path)


def test_schema_mismatch_names_column(tmp_path):
    bad = tmp_path / "events.csv"
    bad.write_text("event_id,source,eta\n1,intrinsic,0\n")
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "kind": "joint_grid", "out": "x.png",
        "panels": [{"with_collapse": "events.csv"}],
    }))
    with pytest.raises(SchemaError, match="species"):
        load_spec(spec_path)


def test_empty_events_file_errors(tmp_path):
    empty = tmp_path / "events.csv"
    empty.write_text("")
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "kind": "joint_grid", "out": "x.png",
        "panels": [{"with_collapse": "events.csv"}],
    }))
    with pytest.raises(SchemaError):
        load_spec(spec_path)


def test_unknown_kind_rejected(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({"kind": "pie", "out": "x.png"}))
    with pytest.raises(SchemaError, match="kind"):
        load_spec(spec_path)


def test_footer_uses_manifest_hash(tmp_path):
    ev = write_events(tmp_path / "events.csv")
    (tmp_path / "manifest.json").write_text(json.dumps(
        {"content_hash": "a" * 64}))
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "kind": "joint_grid", "out": "x.png",
        "panels": [{"with_collapse": ev.name}],
    }))
    from ddslit_figures.spec import manifest_footer
    assert "a" * 12 in manifest_footer(load_spec(spec_path))
