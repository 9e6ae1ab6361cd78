"""Constants, config parsing, presets and unit scaling."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddslit import constants
from ddslit.config import (ConfigError, load_config, parse_length,
                           to_internal_units, to_si_units, with_overrides)
from ddslit.presets import PRESETS, load_preset

GOOD = """
[packet]
sigma_x = 1e-6
sigma_y = 1e-6
u_x = 20
u_y = 0

[slits]
l_x = 5e-3
l_y = 1e-5

[screens]
y_left = -4mm
y_right = -8cm

[run]
species = sodium-23
n_events = 100
seed = 7
"""


def test_physical_constants_defaults():
    pc = constants.PhysicalConstants()
    assert pc.hbar > 0 and pc.g == 9.81
    for name in ("helium-4", "sodium-23", "cesium-133"):
        assert pc.masses[name] > 0


def test_helium_mass_matches_atomic_tables():
    # 4.002602 u; compare at the 5-digit level
    assert constants.species_mass_kg("helium-4") == pytest.approx(6.6465e-27, rel=1e-4)


def test_unknown_species_rejected():
    with pytest.raises(KeyError, match="unknown species"):
        constants.species_mass_kg("unobtainium")


def test_load_config_round_trips_lengths():
    cfg = load_config(GOOD)
    assert cfg.y_left == pytest.approx(-0.004)
    assert cfg.y_right == pytest.approx(-0.08)
    assert cfg.l_y == pytest.approx(1e-5)
    assert cfg.n_events == 100 and cfg.seed == 7


def test_unknown_key_rejected_with_name():
    with pytest.raises(ConfigError, match=r"\[run\] bogus"):
        load_config(GOOD + "\nbogus = 1\n")


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="detector"):
        load_config(GOOD + "\n[detector]\nkappa = 1\n")


def test_empty_eta_defaults_to_minus_one():
    cfg = load_config(GOOD + "\neta =\n")
    assert cfg.eta == -1.0


def test_eta_out_of_range_names_field():
    with pytest.raises(ConfigError, match="eta"):
        load_config(GOOD.replace("seed = 7", "seed = 7\neta = 1.5"))


def test_missing_required_keys():
    with pytest.raises(ConfigError, match="sigma_x"):
        load_config("[packet]\nsigma_y = 1e-6\n")


def test_screen_above_slits_warns_not_fails():
    with pytest.warns(UserWarning, match="y_left"):
        load_config(GOOD.replace("y_left = -4mm", "y_left = 1mm"))


def test_parse_length_suffixes():
    assert parse_length("-8cm") == pytest.approx(-0.08)
    assert parse_length("10um") == pytest.approx(1e-5)
    assert parse_length("3nm") == pytest.approx(3e-9)
    assert parse_length("0.5") == 0.5
    with pytest.raises(ConfigError):
        parse_length("4 furlongs")


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_load(name):
    cfg = load_preset(name)
    icfg = to_internal_units(cfg)
    assert icfg.n_events >= 1


def test_fig2_preset_matches_geometry():
    cfg = load_preset("fig2")
    assert cfg.sigma_x == cfg.sigma_y == pytest.approx(1e-6)
    assert 2 * cfg.l_y == pytest.approx(20e-6)      # slit distance 20 um
    assert cfg.u_x == pytest.approx(20.0)
    assert cfg.y_right == pytest.approx(-0.08)
    assert cfg.y_left == pytest.approx(-0.004)      # signed: 4 mm below


def test_internal_units_magnitudes():
    icfg = to_internal_units(load_preset("fig2"))
    assert icfg.hbar == pytest.approx(105.4571817, rel=1e-9)
    assert icfg.g == pytest.approx(9.81)            # m/s^2 == um/ms^2
    assert icfg.u_y == 0.0
    assert icfg.u_x == pytest.approx(20000.0)       # 20 m/s in um/ms
    assert icfg.sigma_x == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(
    sigma=st.floats(1e-8, 1e-4),
    ux=st.floats(-100, 100),
    yl=st.floats(-1.0, -1e-4),
    eta=st.floats(-1, 1),
)
def test_si_internal_round_trip(sigma, ux, yl, eta):
    cfg = with_overrides(load_preset("fig2"), sigma_x=sigma, u_x=ux,
                         y_left=yl, eta=eta)
    back = to_si_units(to_internal_units(cfg))
    for name in ("sigma_x", "sigma_y", "l_x", "l_y", "u_x", "u_y",
                 "y_left", "y_right", "t_max", "g", "eta"):
        a, b = getattr(cfg, name), getattr(back, name)
        assert b == pytest.approx(a, rel=1e-12, abs=1e-300)


def test_internal_round_trip_accel_and_velocity_examples():
    cfg = load_preset("fig2")
    icfg = to_internal_units(cfg)
    assert icfg.g == pytest.approx(9.81, rel=1e-15)
    assert to_internal_units(with_overrides(cfg, u_y=0.0)).u_y == 0.0
