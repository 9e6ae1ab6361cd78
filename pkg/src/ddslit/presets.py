"""Named experiment presets.

Each preset is stored as INI text and goes through the ordinary
:func:`ddslit.config.load_config` path, so presets and user files share one
grammar.  Species choices follow the figure captions of the study these
setups reproduce; override with ``--species`` where a different atom is
wanted.
"""

from __future__ import annotations

from .config import ExperimentConfig, load_config

_COMMON_PACKET = """\
[packet]
sigma_x = 1e-6
sigma_y = 1e-6
u_x = 20
u_y = 0

[slits]
l_x = 5e-3
l_y = 1e-5
"""

PRESETS: dict[str, str] = {
    # Entanglement sweep panel: fixed screens, eta varied via --sweep.
    "fig2": _COMMON_PACKET
    + """
[screens]
y_left = -4mm
y_right = -8cm
t_max = 0.3

[run]
species = sodium-23
eta = -1
n_events = 100000
seed = 2
""",
    # Left-screen position sweep at maximal anticorrelation.
    "fig3": _COMMON_PACKET
    + """
[screens]
y_left = -4mm
y_right = -8cm
t_max = 0.3

[run]
species = sodium-23
eta = -1
n_events = 100000
seed = 3
""",
    # Mass comparison: near left screen, far right screen.
    "fig4": _COMMON_PACKET
    + """
[screens]
y_left = -1mm
y_right = -8cm
t_max = 0.3

[run]
species = cesium-133
eta = -1
n_events = 100000
seed = 4
""",
    # Absorbing-boundary study: both detectors at -40 um, helium,
    # horizon = 3x the classical fall time from the slit center.
    "fig5": _COMMON_PACKET
    + """
[screens]
y_left = -40um
y_right = -40um
t_max = 8.567e-3

[run]
species = helium-4
eta = -1
n_events = 2000
seed = 5
""",
    # Semiclassical comparison: left screen swept across near/middle/far field.
    # Uncorrelated slits (eta=0) so each marginal carries the full double-slit
    # fringe structure that separates the models outside the far field.
    "fig7": _COMMON_PACKET
    + """
[screens]
y_left = -4mm
y_right = -8cm
t_max = 0.3

[run]
species = sodium-23
eta = 0
n_events = 100000
seed = 7
""",
}


def load_preset(name: str) -> ExperimentConfig:
    try:
        text = PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; available: {known}") from None
    return load_config(text)
