"""Semiclassical arrival model: classical flight from a phase-space sample.

Initial positions come from |Psi(t0)|^2 and momenta independently from
|Psi~(t0)|^2 (the product approximation valid for non-overlapping initial
packets); every particle then follows its classical parabola to the screen.
For a linear potential these trajectories coincide with the phase-space
(Wigner-flow) trajectories, so this is the standard far-field analysis
extended to arbitrary screen distances.  No collapse concept exists here:
the two particles are independent once sampled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import InternalConfig
from .dynamics import EventTable, Screens
from .kernels import LOST_SAME_SIDE, LOST_TMAX
from .sampler import sample_phase_points
from .state import build_initial_state

LOST_NO_HIT = LOST_TMAX  # a particle that never reaches its screen


@dataclass(frozen=True)
class ClassicalArrival:
    """Earliest positive screen crossing of one classical particle."""

    t: float
    x: float
    hit: bool


def classical_arrival(r0, p0, m: float, y_screen: float,
                      g: float) -> ClassicalArrival:
    """Solve y0 + (p_y/m) t - g t^2/2 = y_screen for the earliest t > 0."""
    x0, y0 = float(r0[0]), float(r0[1])
    vx, vy = float(p0[0]) / m, float(p0[1]) / m
    t = _first_positive_root(y0 - y_screen, vy, g)
    if t is None:
        return ClassicalArrival(np.nan, np.nan, False)
    return ClassicalArrival(t, x0 + vx * t, True)


def _first_positive_root(height, vy, g):
    """Earliest t > 0 with height + vy t - g t^2/2 = 0, else None."""
    if g == 0.0:
        if vy == 0.0 or (t := -height / vy) <= 0.0:
            return None
        return t
    disc = vy * vy + 2.0 * g * height
    if disc < 0.0:
        return None
    sq = np.sqrt(disc)
    roots = sorted(((vy - sq) / g, (vy + sq) / g))
    for t in roots:
        if t > 0.0:
            return t
    return None


def run_semiclassical(icfg: InternalConfig, scr: Screens | None = None,
                      n: int | None = None, seed: int | None = None) -> EventTable:
    """Classical arrival records for an ensemble of sampled phase points.

    Shares the events schema with the Bohmian pipelines (source tag
    ``semiclassical``).  Particles that never reach a screen, or pairs
    landing on the same side, are flagged lost.
    """
    scr = scr or Screens.from_config(icfg)
    n = icfg.n_events if n is None else n
    seed = icfg.seed if seed is None else seed
    state = build_initial_state(icfg)
    pos, mom = sample_phase_points(state, n, seed)
    m, g = icfg.mass, icfg.g

    table = EventTable(
        event_id=np.arange(n, dtype=np.int64),
        t_left=np.full(n, np.nan), x_left=np.full(n, np.nan),
        t_right=np.full(n, np.nan), x_right=np.full(n, np.nan),
        first=np.full(n, -1, dtype=np.int8),
        collapse_applied=np.zeros(n, dtype=bool),
        lost=np.zeros(n, dtype=np.int8),
        source="semiclassical",
        eta=icfg.eta, species=icfg.species, seed=seed,
    )
    if n == 0:
        return table

    for ev in range(n):
        arrivals = []
        ok = True
        for part in range(2):
            r0 = pos[ev, 2 * part:2 * part + 2]
            p0 = mom[ev, 2 * part:2 * part + 2]
            # a particle is detected by the screen on its own side only
            arr = None
            for screen_side, y_s in ((0, scr.y_left), (1, scr.y_right)):
                cand = classical_arrival(r0, p0, m, y_s, g)
                if not cand.hit or cand.t > scr.t_max:
                    continue
                side = 0 if cand.x < scr.x_split else 1
                if side == screen_side:
                    arr = (cand, side)
                    break
            if arr is None:
                ok = False
                continue
            arrivals.append(arr)
        if not ok and not arrivals:
            table.lost[ev] = LOST_NO_HIT
            continue
        sides = [side for _, side in arrivals]
        if len(arrivals) == 2 and sides[0] == sides[1]:
            table.lost[ev] = LOST_SAME_SIDE
            cand, side = min(arrivals, key=lambda a: a[0].t)
            _fill(table, ev, cand, side)
            continue
        if not ok:
            table.lost[ev] = LOST_NO_HIT
        for cand, side in arrivals:
            _fill(table, ev, cand, side)
        tl, tr = table.t_left[ev], table.t_right[ev]
        if np.isnan(tl) and np.isnan(tr):
            table.first[ev] = -1
        elif np.isnan(tr) or (not np.isnan(tl) and tl <= tr):
            table.first[ev] = 0
        else:
            table.first[ev] = 1
    return table


def _fill(table: EventTable, ev: int, cand: ClassicalArrival, side: int):
    if side == 0:
        table.t_left[ev] = cand.t
        table.x_left[ev] = cand.x
    else:
        table.t_right[ev] = cand.t
        table.x_right[ev] = cand.x
    if table.first[ev] == -1:
        table.first[ev] = side
