"""Two-particle state: construction, symmetry, velocities, collapse."""

import numpy as np
import pytest

from ddslit import state as st
from ddslit import wavepacket as wp
from ddslit.config import to_internal_units, with_overrides
from ddslit.presets import load_preset
from ddslit.state import DegenerateCollapseError


@pytest.fixture(scope="module")
def icfg():
    return to_internal_units(load_preset("fig2"))


@pytest.fixture(scope="module")
def state_eta0(icfg):
    return st.build_initial_state(
        to_internal_units(with_overrides(load_preset("fig2"), eta=0.0)))


@pytest.fixture(scope="module")
def state_anti(icfg):
    return st.build_initial_state(icfg)  # preset eta = -1


def test_term_counts(state_eta0, state_anti):
    assert len(state_eta0.terms) == 8      # both components, symmetrized
    assert len(state_anti.terms) == 4      # parallel weight vanishes


def test_norm_constant_matches_weight_algebra(state_eta0, state_anti):
    # nearly orthogonal lobes: N ~ 1/sqrt(2 (1 + eta^2))
    assert state_eta0.norm_constant == pytest.approx(1 / np.sqrt(2), rel=1e-6)
    assert state_anti.norm_constant == pytest.approx(0.5, rel=1e-6)
    assert st.norm_squared(state_eta0) == pytest.approx(1.0, abs=1e-12)
    assert st.norm_squared(state_anti) == pytest.approx(1.0, abs=1e-12)


def test_bosonic_exchange_symmetry(state_eta0):
    rng = np.random.default_rng(5)
    for _ in range(25):
        t = rng.uniform(0.0, 40.0)
        r1 = np.array([5000 + 20000 * t, -4.9 * t * t]) + rng.normal(0, 3, 2)
        r2 = np.array([-5000 - 20000 * t, -4.9 * t * t]) + rng.normal(0, 3, 2)
        a = st.evaluate_state_log(state_eta0, r1, r2, t)
        b = st.evaluate_state_log(state_eta0, r2, r1, t)
        assert a.real == pytest.approx(b.real, abs=1e-9)
        assert np.angle(np.exp(1j * (a.imag - b.imag))) == pytest.approx(0.0, abs=1e-9)


def test_eta_sign_selects_components():
    base = load_preset("fig2")
    s_plus = st.build_initial_state(to_internal_units(with_overrides(base, eta=1.0)))
    s_minus = st.build_initial_state(to_internal_units(with_overrides(base, eta=-1.0)))
    # anticorrelated terms pair opposite slits; correlated terms equal slits
    for term in s_minus.terms:
        assert term.factors[1].l == -term.factors[3].l
    for term in s_plus.terms:
        assert term.factors[1].l == term.factors[3].l


def test_single_term_dominates_at_its_lobe(state_eta0, icfg):
    # at (upper-right, lower-left) slit centers the matching term wins by
    # the cross-packet suppression exp(-(2 l_y)^2 / (8 sigma^2)) ~ e^-50
    r1 = np.array([icfg.l_x, icfg.l_y])
    r2 = np.array([-icfg.l_x, -icfg.l_y])
    logs = st._log_terms_pair(state_eta0, r1, r2, 0.0)
    order = np.argsort(logs.real)[::-1]
    gap = logs.real[order[0]] - logs.real[order[1]]
    assert gap > 40.0  # > e^40 amplitude ratio


def test_velocity_rest_packet_is_zero():
    m = 220.6946
    x = wp.GaussianParams(1.0, 3.0, 0.0, 0.0, m)
    y = wp.GaussianParams(1.0, 0.0, 0.0, 0.0, m)
    s = st.make_product_state(x, y, x2=x, y2=y)
    v1, v2 = st.velocity_field(s, np.array([3.0, 0.0]), np.array([3.0, 0.0]), 0.0)
    assert np.allclose(v1, 0.0, atol=1e-12) and np.allclose(v2, 0.0, atol=1e-12)


def test_velocity_packet_center_moves_at_group_velocity():
    m = 220.6946
    x = wp.GaussianParams(1.0, 0.0, 20000.0, 0.0, m)
    y = wp.GaussianParams(1.0, 0.0, 0.0, -9.81, m)
    s = st.make_product_state(x, y, x2=wp.GaussianParams(1.0, 0.0, -20000.0, 0.0, m))
    v1, v2 = st.velocity_field(s, np.array([0.0, 0.0]), np.array([0.0, 0.0]), 0.0)
    assert v1[0] == pytest.approx(20000.0, rel=1e-12)
    assert v1[1] == pytest.approx(0.0, abs=1e-12)
    assert v2[0] == pytest.approx(-20000.0, rel=1e-12)


def test_free_fall_velocity_at_center():
    # guidance at the packet center reproduces u_y - g t exactly
    m = 220.6946
    x = wp.GaussianParams(1.0, 0.0, 20000.0, 0.0, m)
    y = wp.GaussianParams(1.0, 0.0, 0.0, -9.81, m)
    s = st.make_product_state(x, y, x2=wp.GaussianParams(1.0, 0.0, -20000.0, 0.0, m))
    for t in (1.0, 20.0, 80.0):
        r1 = np.array([wp.center(x, t), wp.center(y, t)])
        r2 = np.array([-wp.center(x, t), wp.center(y, t)])
        v1, _ = st.velocity_field(s, r1, r2, t)
        assert v1[1] == pytest.approx(-9.81 * t, rel=1e-6)


def test_velocity_matches_finite_differences(state_eta0, icfg):
    """Analytic gradients vs central differences of Im(grad Psi / Psi)."""
    rng = np.random.default_rng(11)
    # h must keep the phase increment below pi (fast horizontal packets) yet
    # stay above the absolute-phase roundoff floor; early flight keeps the
    # total phase small enough for both
    h = 1e-4
    worst = 0.0
    for _ in range(200):
        t = rng.uniform(0.05, 2.0)
        side = rng.choice([-1, 1])
        r1 = np.array([side * (icfg.l_x + icfg.u_x * t),
                       rng.choice([-1, 1]) * icfg.l_y - 4.905 * t * t]) \
            + rng.uniform(-2, 2, 2)
        r2 = np.array([-side * (icfg.l_x + icfg.u_x * t),
                       rng.choice([-1, 1]) * icfg.l_y - 4.905 * t * t]) \
            + rng.uniform(-2, 2, 2)
        v1, v2, lp = st.velocity_field_diag(state_eta0, r1, r2, t)
        if lp < -80:
            continue
        vref = np.concatenate([v1.ravel(), v2.ravel()])
        vfd = np.empty(4)
        for i in range(4):
            rp1, rp2 = r1.copy(), r2.copy()
            rm1, rm2 = r1.copy(), r2.copy()
            (rp1 if i < 2 else rp2)[i % 2] += h
            (rm1 if i < 2 else rm2)[i % 2] -= h
            d = np.imag(st.evaluate_state_log(state_eta0, rp1, rp2, t)
                        - st.evaluate_state_log(state_eta0, rm1, rm2, t))
            d = np.angle(np.exp(1j * d))
            vfd[i] = icfg.hbar / icfg.mass * d / (2 * h)
        worst = max(worst, np.max(np.abs(vref - vfd)) / np.linalg.norm(vref))
    assert worst < 1e-7


def test_collapse_product_state_factorizes():
    m = 220.6946
    x = wp.GaussianParams(1.0, 5.0, 100.0, 0.0, m)
    y = wp.GaussianParams(1.0, 2.0, 0.0, -9.81, m)
    x2 = wp.GaussianParams(1.0, -5.0, -100.0, 0.0, m)
    y2 = wp.GaussianParams(1.0, -2.0, 0.0, -9.81, m)
    s = st.make_product_state(x, y, x2=x2, y2=y2)
    for R in ([5.0, 2.0], [4.0, 1.0], [6.5, 3.0]):
        c = st.collapse(s, detected=1, position=R, t_c=0.3)
        # conditional wave equals the undetected particle's factor, any R
        r = np.array([-35.0, -2.5])
        got = st.evaluate_state_log(c, None, r, 1.0)
        want = (wp.gaussian_log(x2, r[0], 1.0) + wp.gaussian_log(y2, r[1], 1.0))
        ratio = got - want
        assert ratio.real == pytest.approx(0.0, abs=1e-9)


def test_collapse_normalizes(state_anti, icfg):
    c = st.collapse(state_anti, detected=1,
                    position=(icfg.l_x, icfg.l_y), t_c=0.0)
    assert st.norm_squared(c) == pytest.approx(1.0, abs=1e-10)


def test_collapse_upper_left_selects_lower_right(icfg):
    # eta = -1: detecting particle 1 deep in the upper LEFT packet leaves the
    # partner in the lower RIGHT packet with all but ~1e-20 of the norm
    s = st.build_initial_state(icfg)  # eta = -1
    c = st.collapse(s, detected=1, position=(-icfg.l_x, +icfg.l_y), t_c=0.0)
    weights = {}
    for term in c.conditional_terms:
        key = (np.sign(term.factors[0].l), np.sign(term.factors[1].l))
        weights[key] = weights.get(key, 0.0) + abs(term.coefficient) ** 2
    total = sum(weights.values())
    stray = total - weights.get((1.0, -1.0), 0.0)
    # all but < 1e-20 of the norm sits in the lower-right packet
    assert stray / total < 1e-20


def test_collapse_twice_rejected(state_anti, icfg):
    c = st.collapse(state_anti, 1, (icfg.l_x, icfg.l_y), 0.0)
    with pytest.raises(ValueError, match="already collapsed"):
        st.collapse(c, 2, (0.0, 0.0), 1.0)


def test_degenerate_collapse_raises(state_anti, icfg):
    with pytest.raises(DegenerateCollapseError):
        st.collapse(state_anti, 1, (0.0, 1e7), 0.0)


def test_collapsed_velocity_matches_one_particle_fd(state_anti, icfg):
    # early synthetic collapse keeps absolute phases small enough for the
    # finite-difference oracle
    t_c = 5.0
    xd = -(icfg.l_x + icfg.u_x * t_c)
    yd = icfg.l_y - 4.905 * t_c**2
    c = st.collapse(state_anti, detected=1, position=(xd, yd), t_c=t_c)
    rng = np.random.default_rng(2)
    h = 1e-4
    for _ in range(40):
        t = t_c + rng.uniform(0.2, 3.0)
        r = np.array([icfg.l_x + icfg.u_x * t, -4.905 * t * t]) + rng.uniform(-3, 3, 2)
        _, v2, lp = st.velocity_field_diag(c, None, r, t)
        if lp < -80:
            continue
        for i in range(2):
            rp, rm = r.copy(), r.copy()
            rp[i] += h
            rm[i] -= h
            d = np.imag(st.evaluate_state_log(c, None, rp, t)
                        - st.evaluate_state_log(c, None, rm, t))
            d = np.angle(np.exp(1j * d))
            fd = icfg.hbar / icfg.mass * d / (2 * h)
            assert abs(v2[i] - fd) / (np.linalg.norm(v2) + 1e-12) < 1e-6


def test_momentum_density_single_term_marginal():
    m = 220.6946
    x = wp.GaussianParams(1.0, 5.0, 20000.0, 0.0, m)
    y = wp.GaussianParams(1.0, 0.0, 0.0, -9.81, m)
    s = st.make_product_state(x, y, x2=wp.GaussianParams(1.0, -5.0, -20000.0, 0.0, m))
    dens = st.momentum_density(s)
    f = dens.factors[0][0]
    assert f.p0 == pytest.approx(m * 20000.0)
    assert f.sigma_p == pytest.approx(105.4571817 / 2.0, rel=1e-9)
    assert dens.total_mass() == pytest.approx(1.0, abs=1e-6)


def test_momentum_density_eta0_two_lobes(state_eta0, icfg):
    dens = st.momentum_density(state_eta0)
    assert dens.total_mass() == pytest.approx(1.0, abs=1e-6)
    # balanced p1x lobes at +-m u_x
    p0 = icfg.mass * icfg.u_x
    lobes = {1: 0.0, -1: 0.0}
    for c, facs in zip(dens.coefficients, dens.factors):
        lobes[int(np.sign(facs[0].p0))] += abs(c) ** 2
    assert lobes[1] == pytest.approx(lobes[-1], rel=1e-12)
    # density itself peaks near both lobes equally
    pa = np.array([p0, 0.0]), np.array([-p0, 0.0])
    pb = np.array([-p0, 0.0]), np.array([p0, 0.0])
    da = dens.density(*pa)
    db = dens.density(*pb)
    assert da == pytest.approx(db, rel=1e-9)


def test_momentum_density_requires_uncollapsed(state_anti, icfg):
    c = st.collapse(state_anti, 1, (icfg.l_x, icfg.l_y), 0.0)
    with pytest.raises(ValueError, match="initial state"):
        st.momentum_density(c)
