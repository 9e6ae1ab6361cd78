"""Histogram observables: joints, visibility, KS, factorization noise."""

import numpy as np
import pytest

from ddslit import stats
from ddslit.dynamics import EventTable


def make_table(tl, tr, lost=None):
    n = len(tl)
    lost_arr = np.zeros(n, dtype=np.int8) if lost is None else lost
    return EventTable(
        event_id=np.arange(n), t_left=np.asarray(tl, dtype=float),
        x_left=np.zeros(n), t_right=np.asarray(tr, dtype=float),
        x_right=np.zeros(n), first=np.zeros(n, dtype=np.int8),
        collapse_applied=np.zeros(n, dtype=bool), lost=lost_arr,
    )


def test_build_joint_single_record():
    t = make_table([1.0], [2.0])
    j = stats.build_joint(t, bins=10)
    assert j.hist.sum() == 1
    assert (j.hist > 0).sum() == 1
    assert j.n_kept == 1 and j.n_lost == 0


def test_build_joint_marginal_consistency():
    rng = np.random.default_rng(0)
    t = make_table(rng.normal(10, 1, 5000), rng.normal(20, 2, 5000))
    j = stats.build_joint(t)
    assert np.array_equal(j.marginal_left, j.hist.sum(axis=1))
    assert np.array_equal(j.marginal_right, j.hist.sum(axis=0))
    assert j.hist.sum() == j.n_kept
    assert j.n_kept + j.meta["outside_binning"] == 5000


def test_build_joint_counts_lost_separately():
    lost = np.zeros(100, dtype=np.int8)
    lost[:10] = 1
    t = make_table(np.linspace(1, 2, 100), np.linspace(3, 4, 100), lost)
    j = stats.build_joint(t)
    assert j.n_kept + j.meta["outside_binning"] == 90
    assert j.n_lost == 10


def test_build_joint_empty_errors():
    t = make_table([], [])
    with pytest.raises(stats.EmptySampleError, match="zero kept"):
        stats.build_joint(t)


def test_visibility_constant_is_zero():
    assert stats.visibility(np.full(100, 7.0)) == 0.0


def test_visibility_full_contrast_sinusoid():
    x = np.linspace(0, 6 * np.pi, 240)
    hist = 1.0 + np.cos(x)          # touches zero
    v = stats.visibility(hist)
    assert v == pytest.approx(1.0, abs=0.02)


def test_visibility_partial_contrast():
    # (I_max - I_min) / (I_max + I_min) = (0.75 - 0.25) / (0.75 + 0.25) = 1/2
    x = np.linspace(0, 6 * np.pi, 240)
    hist = 0.5 + 0.25 * np.cos(x)
    assert stats.visibility(hist) == pytest.approx(0.5, abs=0.02)


def test_visibility_too_few_extrema():
    x = np.linspace(-3, 3, 100)
    hist = np.exp(-x**2)            # single hump
    with pytest.raises(stats.UndefinedVisibilityError):
        stats.visibility(hist)


def test_conditional_visibility_empty_slice():
    rng = np.random.default_rng(1)
    t = make_table(rng.normal(10, 1, 1000), rng.normal(20, 1, 1000))
    with pytest.raises(stats.EmptySampleError):
        stats.conditional_visibility(t, (100.0, 101.0))


def test_ks_identical_zero():
    a = np.linspace(0, 1, 500)
    r = stats.ks_distance(a, a)
    assert r.statistic == 0.0 and not r.reject


def test_ks_disjoint_one():
    r = stats.ks_distance(np.linspace(0, 1, 300), np.linspace(5, 6, 300))
    assert r.statistic == 1.0 and r.reject


def test_ks_shifted_normals_reject():
    rng = np.random.default_rng(2)
    r = stats.ks_distance(rng.normal(0, 1, 10_000), rng.normal(0.5, 1, 10_000))
    assert r.reject


def test_ks_same_distribution_accepts():
    rng = np.random.default_rng(3)
    r = stats.ks_distance(rng.normal(0, 1, 10_000), rng.normal(0, 1, 10_000))
    assert not r.reject


def test_ks_empty_errors():
    with pytest.raises(stats.EmptySampleError):
        stats.ks_distance([], [1.0])


def test_ks_critical_value():
    # c(0.01) = 1.6276; equal n: crit = c * sqrt(2/n)
    assert stats.ks_critical(10_000, 10_000, 0.01) == pytest.approx(
        1.6276 * np.sqrt(2 / 10_000), rel=1e-3)


def test_factorization_independent_within_noise():
    rng = np.random.default_rng(4)
    t = make_table(rng.normal(10, 1, 20_000), rng.normal(20, 2, 20_000))
    j = stats.build_joint(t, bins=40)
    l1 = stats.joint_l1_from_product(j)
    noise = stats.factorization_noise(t, n_resample=50, bins=40)
    assert l1 < 3 * noise


def test_factorization_correlated_detected():
    # binning coarse enough that shot noise does not drown the dependence
    rng = np.random.default_rng(5)
    tl = rng.normal(10, 1, 20_000)
    tr = tl + rng.normal(0, 0.3, 20_000)    # strongly dependent
    t = make_table(tl, tr)
    j = stats.build_joint(t, bins=40)
    l1 = stats.joint_l1_from_product(j)
    noise = stats.factorization_noise(t, n_resample=50, bins=40)
    assert l1 > 3 * noise


def test_bootstrap_visibility_band_contains_value():
    rng = np.random.default_rng(6)
    x = rng.uniform(0, 6 * np.pi, 40_000)
    sample = x[rng.random(len(x)) < (1 + np.cos(x)) / 2]
    v, lo, hi = stats.bootstrap_visibility(sample, n_boot=60, seed=1)
    assert lo <= v <= hi
    assert v == pytest.approx(1.0, abs=0.08)


def test_metrics_report_shape():
    rng = np.random.default_rng(7)
    x = rng.uniform(0, 6 * np.pi, 30_000)
    tl = x[rng.random(len(x)) < (1 + np.cos(x)) / 2]
    t = make_table(tl, tl + 1.0)
    rep = stats.metrics_report(t)
    assert rep["n_kept"] == len(tl)
    assert "visibility_right" in rep and "value" in rep["visibility_right"]
    assert rep["estimator"]["bins"] == stats.DEFAULT_BINS
