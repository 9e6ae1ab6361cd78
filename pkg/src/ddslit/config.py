"""Experiment configuration: INI-style parsing, validation and unit scaling.

Config grammar (documented here, parsed with :mod:`configparser`)::

    [packet]
    sigma_x = 1e-6          # initial widths, meters
    sigma_y = 1e-6
    u_x = 20                # launch speeds, m/s
    u_y = 0

    [slits]
    l_x = 5e-3              # slit half-separations, meters
    l_y = 1e-5

    [screens]
    y_left = -4mm           # signed heights relative to the slit center;
    y_right = -8cm          # lengths accept m/cm/mm/um/nm suffixes
    x_split = 0             # abscissa separating left/right detector halves
    t_max = 0.3             # simulation horizon, seconds

    [run]
    species = sodium-23
    eta = -1                # entanglement parameter in [-1, 1]
    n_events = 100000
    seed = 1
    collapse = true

Unknown sections or keys are rejected.  Omitted keys take the defaults shown
by ``DEFAULTS`` below; an empty ``eta`` value falls back to -1.
"""

from __future__ import annotations

import configparser
import io
import warnings
from dataclasses import dataclass, replace, asdict

from .constants import (
    ACCEL_UNIT,
    DEFAULT_G,
    HBAR_INT,
    LENGTH_UNIT_M,
    MASS_UNIT_KG,
    TIME_UNIT_S,
    VELOCITY_UNIT,
    species_mass_kg,
)


class ConfigError(ValueError):
    """Malformed or constraint-violating configuration."""


_LENGTH_SUFFIXES = {"nm": 1e-9, "um": 1e-6, "mm": 1e-3, "cm": 1e-2, "m": 1.0}


def parse_length(text: str) -> float:
    """Parse a length in meters, accepting m/cm/mm/um/nm suffixes."""
    s = text.strip()
    for suffix in ("nm", "um", "mm", "cm", "m"):
        if s.endswith(suffix):
            try:
                return float(s[: -len(suffix)]) * _LENGTH_SUFFIXES[suffix]
            except ValueError:
                raise ConfigError(f"bad length value {text!r}") from None
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"bad length value {text!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Geometry, initial state and run parameters, all in SI units."""

    sigma_x: float
    sigma_y: float
    l_x: float
    l_y: float
    u_x: float
    u_y: float
    eta: float
    y_left: float
    y_right: float
    species: str
    n_events: int
    seed: int
    collapse_enabled: bool = True
    x_split: float = 0.0
    t_max: float = 0.3
    g: float = DEFAULT_G

    def __post_init__(self):
        if self.sigma_x <= 0 or self.sigma_y <= 0:
            raise ConfigError("sigma_x and sigma_y must be positive")
        if not abs(self.eta) <= 1:
            raise ConfigError(f"eta must lie in [-1, 1], got {self.eta}")
        if self.n_events < 1:
            raise ConfigError("n_events must be >= 1")
        if self.t_max <= 0:
            raise ConfigError("t_max must be positive")
        species_mass_kg(self.species)  # raises for unknown names
        lowest_slit = -abs(self.l_y)
        for name, y in (("y_left", self.y_left), ("y_right", self.y_right)):
            if y >= lowest_slit:
                warnings.warn(
                    f"{name}={y} m is not strictly below the lowest slit center "
                    f"({lowest_slit} m); gravity-driven detection may never occur",
                    stacklevel=2,
                )

    def mass_kg(self) -> float:
        return species_mass_kg(self.species)


# (section, key) -> (field name, parser)
_SCHEMA = {
    ("packet", "sigma_x"): ("sigma_x", parse_length),
    ("packet", "sigma_y"): ("sigma_y", parse_length),
    ("packet", "u_x"): ("u_x", float),
    ("packet", "u_y"): ("u_y", float),
    ("slits", "l_x"): ("l_x", parse_length),
    ("slits", "l_y"): ("l_y", parse_length),
    ("screens", "y_left"): ("y_left", parse_length),
    ("screens", "y_right"): ("y_right", parse_length),
    ("screens", "x_split"): ("x_split", parse_length),
    ("screens", "t_max"): ("t_max", float),
    ("run", "species"): ("species", str),
    ("run", "eta"): ("eta", float),
    ("run", "n_events"): ("n_events", int),
    ("run", "seed"): ("seed", int),
    ("run", "collapse"): ("collapse_enabled", None),  # bool, handled below
    ("run", "g"): ("g", float),
}

DEFAULTS = dict(
    u_y=0.0,
    eta=-1.0,
    x_split=0.0,
    t_max=0.3,
    species="sodium-23",
    n_events=100_000,
    seed=1,
    collapse_enabled=True,
    g=DEFAULT_G,
)

_REQUIRED = ("sigma_x", "sigma_y", "l_x", "l_y", "u_x", "y_left", "y_right")

_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def load_config(text: str) -> ExperimentConfig:
    """Parse an INI config document into a validated :class:`ExperimentConfig`."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_file(io.StringIO(text))
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    values: dict[str, object] = dict(DEFAULTS)
    for section in parser.sections():
        for key, raw in parser.items(section):
            try:
                field_name, convert = _SCHEMA[(section, key)]
            except KeyError:
                raise ConfigError(f"unknown key [{section}] {key}") from None
            raw = raw.strip()
            if raw == "":
                continue  # empty value -> keep the default
            if convert is None:
                try:
                    values[field_name] = _BOOL[raw.lower()]
                except KeyError:
                    raise ConfigError(f"bad boolean for [{section}] {key}: {raw!r}") from None
            else:
                try:
                    values[field_name] = convert(raw)
                except (ValueError, ConfigError) as exc:
                    raise ConfigError(f"bad value for [{section}] {key}: {exc}") from None

    missing = [f for f in _REQUIRED if f not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    return ExperimentConfig(**values)  # type: ignore[arg-type]


def config_to_ini(cfg: ExperimentConfig) -> str:
    """Render a config back to the INI grammar accepted by :func:`load_config`."""
    return (
        "[packet]\n"
        f"sigma_x = {cfg.sigma_x!r}\nsigma_y = {cfg.sigma_y!r}\n"
        f"u_x = {cfg.u_x!r}\nu_y = {cfg.u_y!r}\n\n"
        "[slits]\n"
        f"l_x = {cfg.l_x!r}\nl_y = {cfg.l_y!r}\n\n"
        "[screens]\n"
        f"y_left = {cfg.y_left!r}\ny_right = {cfg.y_right!r}\n"
        f"x_split = {cfg.x_split!r}\nt_max = {cfg.t_max!r}\n\n"
        "[run]\n"
        f"species = {cfg.species}\neta = {cfg.eta!r}\n"
        f"n_events = {cfg.n_events}\nseed = {cfg.seed}\n"
        f"collapse = {'true' if cfg.collapse_enabled else 'false'}\ng = {cfg.g!r}\n"
    )


@dataclass(frozen=True)
class InternalConfig:
    """The same experiment expressed in internal units (um, ms, 1e-27 kg).

    ``hbar`` is included so downstream code never touches SI constants.
    """

    sigma_x: float
    sigma_y: float
    l_x: float
    l_y: float
    u_x: float
    u_y: float
    eta: float
    y_left: float
    y_right: float
    x_split: float
    t_max: float
    g: float
    mass: float
    hbar: float
    species: str
    n_events: int
    seed: int
    collapse_enabled: bool


def to_internal_units(cfg: ExperimentConfig) -> InternalConfig:
    """Scale a validated SI config into internal units."""
    L, V = LENGTH_UNIT_M, VELOCITY_UNIT
    return InternalConfig(
        sigma_x=cfg.sigma_x / L,
        sigma_y=cfg.sigma_y / L,
        l_x=cfg.l_x / L,
        l_y=cfg.l_y / L,
        u_x=cfg.u_x / V,
        u_y=cfg.u_y / V,
        eta=cfg.eta,
        y_left=cfg.y_left / L,
        y_right=cfg.y_right / L,
        x_split=cfg.x_split / L,
        t_max=cfg.t_max / TIME_UNIT_S,
        g=cfg.g / ACCEL_UNIT,
        mass=cfg.mass_kg() / MASS_UNIT_KG,
        hbar=HBAR_INT,
        species=cfg.species,
        n_events=cfg.n_events,
        seed=cfg.seed,
        collapse_enabled=cfg.collapse_enabled,
    )


def to_si_units(icfg: InternalConfig) -> ExperimentConfig:
    """Inverse of :func:`to_internal_units` (used by round-trip checks)."""
    L, V = LENGTH_UNIT_M, VELOCITY_UNIT
    return ExperimentConfig(
        sigma_x=icfg.sigma_x * L,
        sigma_y=icfg.sigma_y * L,
        l_x=icfg.l_x * L,
        l_y=icfg.l_y * L,
        u_x=icfg.u_x * V,
        u_y=icfg.u_y * V,
        eta=icfg.eta,
        y_left=icfg.y_left * L,
        y_right=icfg.y_right * L,
        x_split=icfg.x_split * L,
        t_max=icfg.t_max * TIME_UNIT_S,
        g=icfg.g * ACCEL_UNIT,
        species=icfg.species,
        n_events=icfg.n_events,
        seed=icfg.seed,
        collapse_enabled=icfg.collapse_enabled,
    )


def with_overrides(cfg: ExperimentConfig, **kwargs) -> ExperimentConfig:
    """Return a copy with the given fields replaced (re-validated)."""
    return replace(cfg, **kwargs)


def config_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)
