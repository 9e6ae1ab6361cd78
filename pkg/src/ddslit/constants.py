"""Physical constants and the internal unit system.

Internal units are micrometers, milliseconds and 1e-27 kg.  In these units
hbar ~ 105.46, g ~ 9.81 and atomic masses are O(1)-O(100), so every exponent
that enters a wave-function evaluation stays far away from float underflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# CODATA 2018: hbar = h / (2 pi) with h = 6.62607015e-34 J s (exact).
HBAR_SI = 1.054571817e-34
# Unified atomic mass unit, CODATA 2018.
ATOMIC_MASS_KG = 1.66053906660e-27

# Relative atomic masses (AME2020 atomic mass evaluation).
SPECIES_MASS_U = {
    "helium-4": 4.002602,
    "sodium-23": 22.98976928,
    "cesium-133": 132.905451961,
}

DEFAULT_G = 9.81  # m/s^2

# Internal base units expressed in SI.
LENGTH_UNIT_M = 1e-6   # 1 internal length = 1 um
TIME_UNIT_S = 1e-3     # 1 internal time  = 1 ms
MASS_UNIT_KG = 1e-27   # 1 internal mass  = 1e-27 kg

# Derived conversion factors (internal = SI / unit).
VELOCITY_UNIT = LENGTH_UNIT_M / TIME_UNIT_S            # m/s per (um/ms)
ACCEL_UNIT = LENGTH_UNIT_M / TIME_UNIT_S**2            # m/s^2 per (um/ms^2)
ACTION_UNIT = MASS_UNIT_KG * LENGTH_UNIT_M**2 / TIME_UNIT_S
WAVENUMBER_UNIT = 1.0 / LENGTH_UNIT_M                  # 1/m per (1/um)
MOMENTUM_UNIT = MASS_UNIT_KG * LENGTH_UNIT_M / TIME_UNIT_S

HBAR_INT = HBAR_SI / ACTION_UNIT  # ~105.4571817


def species_mass_kg(name: str) -> float:
    """Atomic mass in kg for a known species name."""
    try:
        return SPECIES_MASS_U[name] * ATOMIC_MASS_KG
    except KeyError:
        known = ", ".join(sorted(SPECIES_MASS_U))
        raise KeyError(f"unknown species {name!r}; known species: {known}") from None


@dataclass(frozen=True)
class PhysicalConstants:
    """hbar, gravitational acceleration and the species mass table (SI)."""

    hbar: float = HBAR_SI
    g: float = DEFAULT_G
    masses: dict[str, float] = field(
        default_factory=lambda: {n: species_mass_kg(n) for n in SPECIES_MASS_U}
    )

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.g < 0:
            raise ValueError("g must be non-negative")
        for name, m in self.masses.items():
            if m <= 0:
                raise ValueError(f"mass of {name!r} must be positive")
        for required in ("helium-4", "sodium-23", "cesium-133"):
            if required not in self.masses:
                raise ValueError(f"species table must include {required!r}")
