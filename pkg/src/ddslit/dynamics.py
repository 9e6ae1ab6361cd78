"""Ensemble integration: sampling, guidance ODE, detection bookkeeping.

Positions, times and screens are in internal units throughout (um, ms).
Events are independent work units; randomness is fixed by (seed, event_id)
before integration starts, and every output array is indexed by event id, so
results do not depend on the worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numba

from . import kernels
from .config import InternalConfig
from .sampler import ConfigPoint, sample_positions
from .state import TwoParticleState, build_initial_state

LOST_LABELS = {
    kernels.LOST_NONE: "",
    kernels.LOST_TMAX: "t_max",
    kernels.LOST_NODE_TRAP: "node_trap",
    kernels.LOST_SAME_SIDE: "same_side",
    kernels.LOST_DEGENERATE: "degenerate_collapse",
    kernels.LOST_STEP_LIMIT: "step_limit",
}


@dataclass(frozen=True)
class Screens:
    """Detector geometry: signed heights, side split, horizon (internal units)."""

    y_left: float
    y_right: float
    x_split: float = 0.0
    t_max: float = 300.0

    def __post_init__(self):
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")

    @classmethod
    def from_config(cls, icfg: InternalConfig) -> "Screens":
        return cls(y_left=icfg.y_left, y_right=icfg.y_right,
                   x_split=icfg.x_split, t_max=icfg.t_max)


@dataclass(frozen=True)
class DetectionRecord:
    """One simulated event pair; missing values are NaN / None."""

    event_id: int
    t_left: float
    x_left: float
    t_right: float
    x_right: float
    first: str | None          # "left" | "right" | None
    collapse_applied: bool
    lost_reason: str           # "" when kept

    @property
    def lost(self) -> bool:
        return self.lost_reason != ""


@dataclass(frozen=True)
class Trajectory:
    """Decimated polyline of one event: knots (t, x1, y1, x2, y2)."""

    event_id: int
    knots: np.ndarray
    termination: str


@dataclass
class EventTable:
    """Columnar detection records for a whole run."""

    event_id: np.ndarray
    t_left: np.ndarray
    x_left: np.ndarray
    t_right: np.ndarray
    x_right: np.ndarray
    first: np.ndarray           # int8: 0 left, 1 right, -1 none
    collapse_applied: np.ndarray
    lost: np.ndarray            # int8 reason codes
    source: str = "intrinsic"
    eta: float = 0.0
    species: str = ""
    seed: int = 0
    n_steps: np.ndarray | None = None
    final_positions: np.ndarray | None = None
    trajectories: list[Trajectory] = field(default_factory=list)

    def __len__(self):
        return len(self.event_id)

    @property
    def kept(self) -> np.ndarray:
        return self.lost == kernels.LOST_NONE

    def records(self) -> list[DetectionRecord]:
        out = []
        for i in range(len(self)):
            f = {0: "left", 1: "right", -1: None}[int(self.first[i])]
            out.append(DetectionRecord(
                event_id=int(self.event_id[i]),
                t_left=float(self.t_left[i]), x_left=float(self.x_left[i]),
                t_right=float(self.t_right[i]), x_right=float(self.x_right[i]),
                first=f,
                collapse_applied=bool(self.collapse_applied[i]),
                lost_reason=LOST_LABELS[int(self.lost[i])],
            ))
        return out


def pack_state(s: TwoParticleState):
    """Flatten a pair state into the kernel's slot/candidate arrays."""
    if s.is_collapsed:
        raise ValueError("ensemble integration starts from the uncollapsed state")
    nterms = len(s.terms)
    fac_sigma = np.empty(4)
    fac_a = np.empty(4)
    fac_l = np.empty((4, 2))
    fac_u = np.empty((4, 2))
    term_idx = np.zeros((nterms, 4), dtype=np.uint8)

    for slot in range(4):
        cands: list = []
        for k, term in enumerate(s.terms):
            f = term.factors[slot]
            key = (f.sigma, f.l, f.u, f.a, f.m)
            if key not in cands:
                cands.append(key)
            term_idx[k, slot] = cands.index(key)
        if len(cands) > 2:
            raise ValueError("kernel packing supports two candidates per slot")
        if len(cands) == 1:
            cands.append(cands[0])
        sig0, _, _, a0, m0 = cands[0]
        sig1, _, _, a1, _ = cands[1]
        if sig0 != sig1 or a0 != a1:
            raise ValueError("slot candidates must share sigma and a")
        fac_sigma[slot] = sig0
        fac_a[slot] = a0
        fac_l[slot] = [cands[0][1], cands[1][1]]
        fac_u[slot] = [cands[0][2], cands[1][2]]

    term_logc = np.array([np.log(complex(t.coefficient)) for t in s.terms],
                         dtype=np.complex128)
    mass = s.terms[0].factors[0].m
    return fac_sigma, fac_a, fac_l, fac_u, term_idx, term_logc, mass, s.hbar


def _map_outputs(table: EventTable, t_par, x_par, side_par):
    """Assign per-particle detections to left/right screen columns."""
    n = len(table)
    for i in range(n):
        order = np.argsort(t_par[i])  # NaN sorts last
        for part in order:
            side = side_par[i, part]
            if side == 0 and np.isnan(table.t_left[i]):
                table.t_left[i] = t_par[i, part]
                table.x_left[i] = x_par[i, part]
            elif side == 1 and np.isnan(table.t_right[i]):
                table.t_right[i] = t_par[i, part]
                table.x_right[i] = x_par[i, part]
        tl, tr = table.t_left[i], table.t_right[i]
        if np.isnan(tl) and np.isnan(tr):
            table.first[i] = -1
        elif np.isnan(tr) or (not np.isnan(tl) and tl <= tr):
            table.first[i] = 0
        else:
            table.first[i] = 1


def run_ensemble(icfg: InternalConfig, scr: Screens | None = None,
                 state: TwoParticleState | None = None,
                 n_events: int | None = None,
                 trajectories: int = 0,
                 workers: int | None = None,
                 progress=None,
                 chunk: int = 8192,
                 first_event: int = 0,
                 trajectory_knot_cap: int = kernels.MAX_KNOTS) -> EventTable:
    """Integrate an ensemble and return the event table (ordered by event id).

    ``progress``, when given, is called as ``progress(done, total)`` after
    every chunk.  Trajectories are decimated to ``trajectory_knot_cap``
    knots; raise the cap for full-resolution debugging dumps.
    """
    scr = scr or Screens.from_config(icfg)
    state = state or build_initial_state(icfg)
    n = icfg.n_events if n_events is None else n_events
    if workers is not None:
        numba.set_num_threads(min(max(1, workers), numba.config.NUMBA_NUM_THREADS))

    packed = pack_state(state)
    q0 = sample_positions(state, n, icfg.seed, first_event=first_event)

    t_par = np.full((n, 2), np.nan)
    x_par = np.full((n, 2), np.nan)
    side_par = np.full((n, 2), -1, dtype=np.int8)
    lost = np.zeros(n, dtype=np.int8)
    collapsed = np.zeros(n, dtype=np.int8)
    n_steps = np.zeros(n, dtype=np.int64)
    n_traj = min(trajectories, n)
    q_final = np.full((n, 4), np.nan)
    traj_buf = np.zeros((max(n_traj, 1), trajectory_knot_cap, 5))
    traj_len = np.zeros(max(n_traj, 1), dtype=np.int64)

    done = 0
    while done < n:
        hi = min(done + chunk, n)
        sl = slice(done, hi)
        nt_chunk = max(0, min(n_traj - done, hi - done))
        if nt_chunk > 0:
            tb = traj_buf[done:done + nt_chunk]
            tl = traj_len[done:done + nt_chunk]
        else:
            tb, tl = traj_buf[:1], traj_len[:1]
        kernels.integrate_batch(
            q0[sl], *packed,
            scr.y_left, scr.y_right, scr.x_split, scr.t_max,
            icfg.collapse_enabled, nt_chunk,
            t_par[sl], x_par[sl], side_par[sl], lost[sl], collapsed[sl],
            n_steps[sl], q_final[sl], tb, tl,
        )
        done = hi
        if progress is not None:
            progress(done, n)

    table = EventTable(
        event_id=np.arange(first_event, first_event + n, dtype=np.int64),
        t_left=np.full(n, np.nan), x_left=np.full(n, np.nan),
        t_right=np.full(n, np.nan), x_right=np.full(n, np.nan),
        first=np.full(n, -1, dtype=np.int8),
        collapse_applied=collapsed.astype(bool),
        lost=lost,
        source="intrinsic",
        eta=icfg.eta, species=icfg.species, seed=icfg.seed,
        n_steps=n_steps,
        final_positions=q_final,
    )
    _map_outputs(table, t_par, x_par, side_par)

    for i in range(n_traj):
        table.trajectories.append(Trajectory(
            event_id=first_event + i,
            knots=traj_buf[i, :traj_len[i]].copy(),
            termination=LOST_LABELS[int(lost[i])] or "detected",
        ))
    return table


def integrate_pair(x0: ConfigPoint, s: TwoParticleState, scr: Screens,
                   collapse_enabled: bool = True,
                   want_trajectory: bool = False):
    """Integrate a single event from a given initial configuration.

    Returns (DetectionRecord, Trajectory | None).
    """
    packed = pack_state(s)
    q0 = x0.as_array()[None, :]
    t_par = np.full((1, 2), np.nan)
    x_par = np.full((1, 2), np.nan)
    side_par = np.full((1, 2), -1, dtype=np.int8)
    lost = np.zeros(1, dtype=np.int8)
    collapsed = np.zeros(1, dtype=np.int8)
    n_steps = np.zeros(1, dtype=np.int64)
    q_final = np.full((1, 4), np.nan)
    traj_buf = np.zeros((1, kernels.MAX_KNOTS, 5))
    traj_len = np.zeros(1, dtype=np.int64)

    kernels.integrate_batch(
        q0, *packed, scr.y_left, scr.y_right, scr.x_split, scr.t_max,
        collapse_enabled, 1 if want_trajectory else 0,
        t_par, x_par, side_par, lost, collapsed, n_steps, q_final,
        traj_buf, traj_len)

    table = EventTable(
        event_id=np.zeros(1, dtype=np.int64),
        t_left=np.full(1, np.nan), x_left=np.full(1, np.nan),
        t_right=np.full(1, np.nan), x_right=np.full(1, np.nan),
        first=np.full(1, -1, dtype=np.int8),
        collapse_applied=collapsed.astype(bool),
        lost=lost,
    )
    _map_outputs(table, t_par, x_par, side_par)
    rec = table.records()[0]
    traj = None
    if want_trajectory:
        traj = Trajectory(0, traj_buf[0, :traj_len[0]].copy(),
                          LOST_LABELS[int(lost[0])] or "detected")
    return rec, traj
