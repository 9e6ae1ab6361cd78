"""Back-action ensembles: outward crossings, survival, collapse wiring."""

import numpy as np
import pytest

from ddslit import abr
from ddslit import dynamics as dyn
from ddslit.config import to_internal_units, with_overrides
from ddslit.presets import load_preset

FAST = abr.AbrOptions(n_grid=2048, dt_factor=5e-4, pad_widths=4.0)


@pytest.fixture(scope="module")
def icfg():
    return to_internal_units(load_preset("fig5"))


@pytest.fixture(scope="module")
def matched_run(icfg):
    scr = dyn.Screens.from_config(icfg)
    k0 = abr.kappa0_for(icfg, scr)
    return abr.evolve_abr_ensemble(icfg, kappa=k0, n_events=250, options=FAST)


def test_requires_equal_screen_heights(icfg):
    scr = dyn.Screens(y_left=-30.0, y_right=-40.0, t_max=8.0)
    with pytest.raises(ValueError, match="one height"):
        abr.evolve_abr_ensemble(icfg, kappa=1.0, scr=scr, n_events=10,
                                options=FAST)


def test_kappa_positive_required(icfg):
    with pytest.raises(ValueError, match="kappa"):
        abr.evolve_abr_ensemble(icfg, kappa=0.0, n_events=10, options=FAST)


def test_crossings_strictly_outward(matched_run):
    """The boundary condition pins the guidance velocity at the surface to
    -hbar kappa / m: every detection happens moving outward."""
    vd = matched_run.v_detect[~np.isnan(matched_run.v_detect)]
    assert vd.size > 0
    assert np.all(vd < 0.0)


def test_detection_velocity_magnitude(matched_run, icfg):
    vd = matched_run.v_detect[~np.isnan(matched_run.v_detect)]
    expect = -icfg.hbar * matched_run.kappa / icfg.mass
    assert np.allclose(vd, expect, rtol=1e-6)


def test_matched_detector_absorbs(matched_run):
    t3 = 3.0 * np.sqrt(2 * 40.0 / 9.81)
    i3 = min(np.searchsorted(matched_run.survival_t, t3 - 1e-9),
             len(matched_run.survival_t) - 1)
    assert matched_run.survival_traj[i3] < 0.05


def test_survival_curves_monotone(matched_run):
    assert np.all(np.diff(matched_run.survival_traj) <= 1e-12)
    assert np.all(np.diff(matched_run.survival_wave) <= 1e-9)
    assert 0.0 <= matched_run.survival_wave[-1] <= 1.0


def test_far_edge_stays_empty(matched_run):
    assert matched_run.edge_amplitude < 1e-10


def test_collapse_applied_and_sides(matched_run):
    tab = matched_run.table
    kept = tab.kept
    assert kept.sum() > 200
    assert np.all(tab.collapse_applied[kept])
    assert np.all(tab.x_left[kept] < 0)
    assert np.all(tab.x_right[kept] > 0)
    # detections happen around the classical fall time
    t_fall = np.sqrt(2 * 40.0 / 9.81)
    med = np.nanmedian(np.concatenate([tab.t_left[kept], tab.t_right[kept]]))
    assert med == pytest.approx(t_fall, rel=0.3)


def test_mismatched_kappa_more_survival(icfg, matched_run):
    scr = dyn.Screens.from_config(icfg)
    k0 = abr.kappa0_for(icfg, scr)
    res3 = abr.evolve_abr_ensemble(icfg, kappa=3 * k0, n_events=250,
                                   options=FAST)
    t3 = 3.0 * np.sqrt(2 * 40.0 / 9.81)
    i3 = min(np.searchsorted(res3.survival_t, t3 - 1e-9),
             len(res3.survival_t) - 1)
    assert res3.survival_traj[i3] > matched_run.survival_traj[i3] + 0.05


def test_reflection_echo_cluster(icfg):
    """kappa != kappa0 re-drops the reflected wave: arrival times show a
    delayed second cluster."""
    scr = dyn.Screens.from_config(icfg)
    k0 = abr.kappa0_for(icfg, scr)
    res = abr.evolve_abr_ensemble(icfg, kappa=k0 / 3, n_events=250,
                                  options=FAST)
    tab = res.table
    td = np.concatenate([tab.t_left[np.isfinite(tab.t_left)],
                         tab.t_right[np.isfinite(tab.t_right)]])
    t_fall = np.sqrt(2 * 40.0 / 9.81)
    early = ((td > 0.5 * t_fall) & (td < 1.8 * t_fall)).sum()
    late = (td > 2.1 * t_fall).sum()
    assert early > 50 and late > 20   # two clusters above noise


def test_trajectory_capture(icfg):
    scr = dyn.Screens.from_config(icfg)
    k0 = abr.kappa0_for(icfg, scr)
    opts = abr.AbrOptions(n_grid=2048, dt_factor=5e-4, pad_widths=4.0,
                          trajectories=3)
    res = abr.evolve_abr_ensemble(icfg, kappa=k0, n_events=50, options=opts)
    assert len(res.trajectories) == 3
    for traj in res.trajectories:
        assert traj.knots.shape[1] == 5
        assert len(traj.knots) <= 2000
        assert np.all(np.diff(traj.knots[:, 0]) > 0)


def test_deterministic(icfg):
    scr = dyn.Screens.from_config(icfg)
    k0 = abr.kappa0_for(icfg, scr)
    a = abr.evolve_abr_ensemble(icfg, kappa=k0, n_events=60, options=FAST)
    b = abr.evolve_abr_ensemble(icfg, kappa=k0, n_events=60, options=FAST)
    assert np.array_equal(a.table.t_left, b.table.t_left, equal_nan=True)
    assert np.array_equal(a.table.t_right, b.table.t_right, equal_nan=True)


def test_matched_kappa_reproduces_intrinsic_marginals(icfg):
    """With the detector matched to the arriving momentum, back-action
    leaves the arrival-time marginals at the intrinsic ones (KS < 0.02 on
    1e4 events)."""
    from ddslit.stats import ks_distance
    scr = dyn.Screens.from_config(icfg)
    k0 = abr.kappa0_for(icfg, scr)
    res = abr.evolve_abr_ensemble(icfg, kappa=k0, n_events=10_000)
    intr = dyn.run_ensemble(icfg, n_events=10_000)
    for side in ("t_left", "t_right"):
        a = getattr(res.table, side)[res.table.kept]
        b = getattr(intr, side)[intr.kept]
        assert ks_distance(a, b).statistic < 0.02


def test_grid_convergence_of_wave_survival(icfg):
    """Halving dy and dt moves the wave-norm survival curve by < 1e-3
    uniformly on the fig5 preset grid."""
    scr = dyn.Screens.from_config(icfg)
    k0 = abr.kappa0_for(icfg, scr)
    base = abr.evolve_abr_ensemble(
        icfg, kappa=k0, n_events=1,
        options=abr.AbrOptions(n_grid=8192, dt_factor=2e-4, pad_widths=5.0))
    fine = abr.evolve_abr_ensemble(
        icfg, kappa=k0, n_events=1,
        options=abr.AbrOptions(n_grid=16384, dt_factor=1e-4, pad_widths=5.0))
    interp = np.interp(base.survival_t, fine.survival_t, fine.survival_wave)
    assert np.max(np.abs(base.survival_wave - interp)) < 1e-3
