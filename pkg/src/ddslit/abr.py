"""Detector back-action: trajectories in the absorbing-boundary field.

Both detectors sit at one common height, so with a separable Hamiltonian
every product term keeps factorizing: the horizontal factors stay analytic
while the two distinct vertical factors (upper/lower slit) evolve as shared
1D Robin-boundary grid problems.  Bohmian velocities combine the analytic
x-gradients with grid y-gradients interpolated to the particle (cubic
Hermite in space from centered-difference node derivatives, linear in time
inside one trajectory window).

A detector clicks when and where a trajectory reaches the boundary; the
first click collapses the event to a per-event linear combination of the
same four shared one-particle factor products (the n-particle collapse
rule is linear in the wave function, so no per-event field propagation is
needed).  The boundary condition pins the guidance velocity at the surface
to -hbar*kappa/m, so trajectories cross strictly outward.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from . import kernels
from .config import InternalConfig
from .dynamics import EventTable, Screens, Trajectory, _map_outputs
from .robin import RobinPropagator, RobinSolverConfig, initial_grid_state
from .sampler import sample_positions
from .state import build_initial_state, slit_factors
from .wavepacket import overlap

_PHASE_PAIR = 0
_PHASE_SINGLE = 1
_PHASE_DONE = 2

_NEG_BIG = kernels._NEG_BIG
_H_MIN = kernels.H_MIN
_LOG_NODE_EPS = kernels.LOG_NODE_EPS


@dataclass(frozen=True)
class AbrOptions:
    """Numerical knobs for the back-action run."""

    n_grid: int = 8192
    dt_factor: float = 2e-4      # CN step as a fraction of the classical fall time
    window: int = 4              # CN steps per trajectory window
    pad_widths: float = 5.0      # far-edge padding in units of the final spread
    rtol: float = 1e-7           # trajectory tolerance against interpolated fields
    trajectories: int = 0


@dataclass
class AbrResult:
    table: EventTable
    survival_t: np.ndarray          # window-end times (ms)
    survival_traj: np.ndarray       # fraction of events with >= 1 undetected particle
    survival_wave: np.ndarray       # pair-field norm ratio (no collapse accounting)
    kappa: float
    kappa_over_kappa0: float
    v_detect: np.ndarray            # (n, 2) boundary y-velocity at each detection
    edge_amplitude: float           # max |psi| near the far Dirichlet edge
    grid_cfg: RobinSolverConfig
    trajectories: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# compiled field evaluation

@njit(cache=True)
def _grid_factor(y, c, tau, val0, val1, der0, der1, y_lo, dy, n_grid):
    """Complex (value, derivative) of grid factor ``c`` at position y.

    Linear interpolation in time between the window's two field levels,
    cubic Hermite in space from node values and node derivatives.
    """
    pos = (y - y_lo) / dy
    j = int(math.floor(pos))
    if j < 0:
        j = 0
    elif j > n_grid - 2:
        j = n_grid - 2
    th = pos - j

    w1 = 1.0 - tau
    v_a = w1 * val0[c, j] + tau * val1[c, j]
    v_b = w1 * val0[c, j + 1] + tau * val1[c, j + 1]
    d_a = (w1 * der0[c, j] + tau * der1[c, j]) * dy
    d_b = (w1 * der0[c, j + 1] + tau * der1[c, j + 1]) * dy

    t2 = th * th
    t3 = t2 * th
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + th
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    value = h00 * v_a + h10 * d_a + h01 * v_b + h11 * d_b
    g00 = 6.0 * t2 - 6.0 * th
    g10 = 3.0 * t2 - 4.0 * th + 1.0
    g11 = 3.0 * t2 - 2.0 * th
    deriv = (g00 * v_a + g10 * d_a - g00 * v_b + g11 * d_b) / dy
    return value, deriv


@njit(cache=True)
def _abr_velocity(t, tau, q, nslots, term_idx, term_logc,
                  x_sigma, x_l, x_u, mass, hbar,
                  val0, val1, der0, der1, y_lo, dy, n_grid, v_out):
    """Velocities and log|Psi|^2; mirrors kernels.velocity_terms.

    Even slots are analytic x factors, odd slots grid y factors (slot order
    x1, y1, x2, y2 in the pair phase; x, y in the single phase).
    """
    nterms = term_logc.shape[0]
    logg = np.empty((nslots, 2), np.complex128)
    dlog = np.empty((nslots, 2), np.complex128)
    for s in range(nslots):
        if s % 2 == 0:
            sigma = x_sigma
            st = sigma * (1.0 + 1j * t * hbar / (2.0 * mass * sigma * sigma))
            log_pref = -0.25 * math.log(2.0 * math.pi) - 0.5 * cmath.log(st)
            inv4 = 1.0 / (4.0 * sigma * st)
            x = q[s]
            for c in range(2):
                l = x_l[c]
                u = x_u[c]
                dx = x - (l + u * t)
                logg[s, c] = log_pref - dx * dx * inv4 \
                    + 1j * (mass / hbar) * u * (x - l - 0.5 * u * t)
                dlog[s, c] = -dx * (2.0 * inv4) + 1j * (mass / hbar) * u
        else:
            y = q[s]
            for c in range(2):
                value, deriv = _grid_factor(y, c, tau, val0, val1, der0,
                                            der1, y_lo, dy, n_grid)
                m = abs(value)
                if m == 0.0:
                    logg[s, c] = _NEG_BIG + 0.0j
                    dlog[s, c] = 0.0 + 0.0j
                else:
                    logg[s, c] = math.log(m) + 1j * cmath.phase(value)
                    dlog[s, c] = deriv / value

    shift = _NEG_BIG
    lterm = np.empty(nterms, np.complex128)
    for k in range(nterms):
        acc = term_logc[k]
        for s in range(nslots):
            acc = acc + logg[s, term_idx[k, s]]
        lterm[k] = acc
        if acc.real > shift:
            shift = acc.real
    denom = 0.0 + 0.0j
    w = np.empty(nterms, np.complex128)
    for k in range(nterms):
        w[k] = cmath.exp(lterm[k] - shift)
        denom += w[k]
    mag = abs(denom)
    if mag == 0.0 or shift <= _NEG_BIG:
        for s in range(nslots):
            v_out[s] = 0.0
        return _NEG_BIG
    coef = hbar / mass
    for s in range(nslots):
        num = 0.0 + 0.0j
        for k in range(nterms):
            num += w[k] * dlog[s, term_idx[k, s]]
        v_out[s] = coef * (num / denom).imag
    return 2.0 * (shift + math.log(mag))


@njit(cache=True)
def _abr_collapse(t_c, tau_c, xd, det, term_idx, term_logc,
                  x_sigma, x_l, x_u, mass, hbar,
                  val0, val1, out_logc):
    """Insert the detected position (xd, boundary node) into the wave function."""
    if det == 0:
        sx, sy, rx, ry = 0, 1, 2, 3
    else:
        sx, sy, rx, ry = 2, 3, 0, 1
    nterms = term_logc.shape[0]
    st = x_sigma * (1.0 + 1j * t_c * hbar / (2.0 * mass * x_sigma * x_sigma))
    log_pref = -0.25 * math.log(2.0 * math.pi) - 0.5 * cmath.log(st)
    inv4 = 1.0 / (4.0 * x_sigma * st)
    shift = _NEG_BIG
    vals = np.empty(nterms, np.complex128)
    combo = np.empty(nterms, np.int64)
    for k in range(nterms):
        acc = term_logc[k]
        cx = term_idx[k, sx]
        l = x_l[cx]
        u = x_u[cx]
        dx = xd - (l + u * t_c)
        acc = acc + (log_pref - dx * dx * inv4
                     + 1j * (mass / hbar) * u * (xd - l - 0.5 * u * t_c))
        cy = term_idx[k, sy]
        v = (1.0 - tau_c) * val0[cy, 0] + tau_c * val1[cy, 0]
        m = abs(v)
        if m == 0.0:
            acc = acc + (_NEG_BIG + 0.0j)
        else:
            acc = acc + (math.log(m) + 1j * cmath.phase(v))
        vals[k] = acc
        combo[k] = term_idx[k, rx] * 2 + term_idx[k, ry]
        if acc.real > shift:
            shift = acc.real
    if shift <= kernels.LOG_TINY:
        return _NEG_BIG
    sums = np.zeros(4, np.complex128)
    for k in range(nterms):
        sums[combo[k]] += cmath.exp(vals[k] - shift)
    for j in range(4):
        m = abs(sums[j])
        out_logc[j] = (_NEG_BIG + 0.0j) if m == 0.0 else (
            math.log(m) + 1j * cmath.phase(sums[j]))
    return shift


@njit(cache=True)
def _bisect_boundary(q0, f0, q1, f1, h, coord, y_lo, tmp):
    """Crossing of trajectory coordinate ``coord`` through the boundary."""
    lo = 0.0
    hi = 1.0
    n = q0.shape[0]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        kernels._hermite(q0, f0, q1, f1, h, mid, tmp[:n])
        if tmp[coord] > y_lo:
            lo = mid
        else:
            hi = mid
        if (hi - lo) <= 1e-12:
            break
    theta = 0.5 * (lo + hi)
    kernels._hermite(q0, f0, q1, f1, h, theta, tmp[:n])
    return theta


@njit(cache=True)
def _abr_advance_event(T0, T1, q, phase0, sg_logc, t_par, x_par, side_par,
                       v_det, h_io, run_max_io,
                       term_idx, term_logc, x_sigma, x_l, x_u, mass, hbar,
                       val0, val1, der0, der1, y_lo, dy, n_grid,
                       x_split, rtol):
    """Advance one event across the window [T0, T1].

    tau = (t - T0)/(T1 - T0) parameterizes the linear-in-time field.
    Returns (lost_code, phase).
    """
    width = T1 - T0
    t = T0
    h = h_io[0]
    if h > width:
        h = width
    cur_phase = phase0
    rem_part = 0 if t_par[0] != t_par[0] else 1  # NaN test: undetected particle

    k_stage = np.empty((7, 4), np.float64)
    q_try = np.empty(4, np.float64)
    q_new = np.empty(4, np.float64)
    tmp = np.empty(4, np.float64)
    f0 = np.empty(4, np.float64)

    while t < T1 - 1e-15:
        if h > T1 - t:
            h = T1 - t
        if cur_phase == _PHASE_PAIR:
            nq = 4
            idx = term_idx
            logc = term_logc
        else:
            nq = 2
            idx = kernels._SINGLE_IDX
            logc = sg_logc

        tau0 = (t - T0) / width
        lp0 = _abr_velocity(t, tau0, q[:nq], nq, idx, logc, x_sigma, x_l,
                            x_u, mass, hbar, val0, val1, der0, der1, y_lo,
                            dy, n_grid, f0[:nq])
        if lp0 > run_max_io[0]:
            run_max_io[0] = lp0

        # embedded step with retries
        while True:
            for i in range(nq):
                k_stage[0, i] = f0[i]
            min_log = lp0
            for stg in range(1, 6):
                for i in range(nq):
                    acc = 0.0
                    for j in range(stg):
                        acc += kernels._A[stg, j] * k_stage[j, i]
                    q_try[i] = q[i] + h * acc
                ts = t + kernels._C[stg] * h
                lp = _abr_velocity(ts, (ts - T0) / width, q_try[:nq], nq,
                                   idx, logc, x_sigma, x_l, x_u, mass, hbar,
                                   val0, val1, der0, der1, y_lo, dy, n_grid,
                                   k_stage[stg, :nq])
                if lp < min_log:
                    min_log = lp
            for i in range(nq):
                acc = 0.0
                for j in range(6):
                    acc += kernels._B5[j] * k_stage[j, i]
                q_new[i] = q[i] + h * acc
            te = t + h
            lp_end = _abr_velocity(te, (te - T0) / width, q_new[:nq], nq,
                                   idx, logc, x_sigma, x_l, x_u, mass, hbar,
                                   val0, val1, der0, der1, y_lo, dy, n_grid,
                                   k_stage[6, :nq])
            if lp_end < min_log:
                min_log = lp_end
            acc_err = 0.0
            for i in range(nq):
                s = 0.0
                for j in range(7):
                    s += kernels._E[j] * k_stage[j, i]
                scale = kernels.ATOL + rtol * max(abs(q[i]), abs(q_new[i]))
                r = h * s / scale
                acc_err += r * r
            enorm = math.sqrt(acc_err / nq)
            node_hit = min_log < run_max_io[0] + _LOG_NODE_EPS
            if enorm > 1.0 or node_hit:
                fac = max(0.2, 0.9 * enorm ** -0.2) if enorm > 1.0 else 1.0
                if node_hit:
                    fac = min(fac, 0.25)
                h *= fac
                if h < _H_MIN:
                    return kernels.LOST_NODE_TRAP, _PHASE_DONE
                continue
            break
        if lp_end > run_max_io[0]:
            run_max_io[0] = lp_end
        h_next = h * min(5.0, max(0.2, 0.9 * (enorm + 1e-300) ** -0.2))

        if cur_phase == _PHASE_PAIR:
            th0 = 2.0
            th1 = 2.0
            if q_new[1] <= y_lo:
                th0 = _bisect_boundary(q[:4], k_stage[0, :4], q_new[:4],
                                       k_stage[6, :4], h, 1, y_lo, tmp)
            if q_new[3] <= y_lo:
                th1 = _bisect_boundary(q[:4], k_stage[0, :4], q_new[:4],
                                       k_stage[6, :4], h, 3, y_lo, tmp)
            if th0 <= 1.0 or th1 <= 1.0:
                if th0 <= 1.0 and (th1 > 1.0 or th0 * h <= th1 * h + kernels.TIE_WINDOW):
                    det = 0
                    th = th0
                else:
                    det = 1
                    th = th1
                t_c = t + th * h
                tau_c = (t_c - T0) / width
                kernels._hermite(q[:4], k_stage[0, :4], q_new[:4],
                                 k_stage[6, :4], h, th, tmp)
                xd = tmp[2 * det]
                t_par[det] = t_c
                x_par[det] = xd
                side_par[det] = 0 if xd < x_split else 1
                vv = np.empty(4, np.float64)
                _abr_velocity(t_c, tau_c, tmp[:4], 4, term_idx, term_logc,
                              x_sigma, x_l, x_u, mass, hbar, val0, val1,
                              der0, der1, y_lo, dy, n_grid, vv)
                v_det[det] = vv[2 * det + 1]

                shift = _abr_collapse(t_c, tau_c, xd, det, term_idx,
                                      term_logc, x_sigma, x_l, x_u, mass,
                                      hbar, val0, val1, sg_logc)
                if shift <= _NEG_BIG:
                    return kernels.LOST_DEGENERATE, _PHASE_DONE
                rem_part = 1 - det
                q[0] = tmp[2 * rem_part]
                q[1] = tmp[2 * rem_part + 1]
                t = t_c
                cur_phase = _PHASE_SINGLE
                run_max_io[0] = _NEG_BIG
                h = min(h_next, width)
                continue
        else:
            if q_new[1] <= y_lo:
                th = _bisect_boundary(q[:2], k_stage[0, :2], q_new[:2],
                                      k_stage[6, :2], h, 1, y_lo, tmp)
                t_c = t + th * h
                xd = tmp[0]
                t_par[rem_part] = t_c
                x_par[rem_part] = xd
                side_par[rem_part] = 0 if xd < x_split else 1
                vv = np.empty(2, np.float64)
                _abr_velocity(t_c, (t_c - T0) / width, tmp[:2], 2,
                              kernels._SINGLE_IDX, sg_logc, x_sigma, x_l,
                              x_u, mass, hbar, val0, val1, der0, der1,
                              y_lo, dy, n_grid, vv)
                v_det[rem_part] = vv[1]
                return kernels.LOST_NONE, _PHASE_DONE

        t += h
        for i in range(nq):
            q[i] = q_new[i]
        h = h_next

    h_io[0] = h
    return kernels.LOST_NONE, cur_phase


@njit(cache=True, parallel=True)
def _abr_window_batch(T0, T1, q, phase, sg_logc, t_par, x_par, side_par,
                      v_det, h_arr, run_max, lost,
                      term_idx, term_logc, x_sigma, x_l, x_u, mass, hbar,
                      val0, val1, der0, der1, y_lo, dy, n_grid,
                      x_split, rtol):
    n = q.shape[0]
    for i in prange(n):
        if phase[i] == _PHASE_DONE:
            continue
        code, new_phase = _abr_advance_event(
            T0, T1, q[i], phase[i], sg_logc[i], t_par[i], x_par[i],
            side_par[i], v_det[i], h_arr[i:i + 1], run_max[i:i + 1],
            term_idx, term_logc, x_sigma, x_l, x_u, mass, hbar,
            val0, val1, der0, der1, y_lo, dy, n_grid, x_split, rtol)
        phase[i] = new_phase
        if code != kernels.LOST_NONE:
            lost[i] = code
            phase[i] = _PHASE_DONE


# ---------------------------------------------------------------------------
# orchestration

def _node_derivatives(psi_mat: np.ndarray, dy: float, kappa: float) -> np.ndarray:
    """Centered-difference derivatives per factor column; boundary rows use
    the Robin condition (-psi' = i kappa psi) and a one-sided stencil."""
    d = np.empty_like(psi_mat)
    d[1:-1] = (psi_mat[2:] - psi_mat[:-2]) / (2.0 * dy)
    d[0] = -1j * kappa * psi_mat[0]
    d[-1] = (psi_mat[-1] - psi_mat[-2]) / dy
    return d


def _term_arrays(state, l_x, l_y):
    """Kernel term tables with candidate order pinned to (+,-)/(up,down)."""
    nterms = len(state.terms)
    term_idx = np.zeros((nterms, 4), dtype=np.uint8)
    for k, term in enumerate(state.terms):
        for slot, f in enumerate(term.factors):
            if slot % 2 == 0:
                term_idx[k, slot] = 0 if f.l == +l_x else 1
            else:
                term_idx[k, slot] = 0 if f.l == +l_y else 1
    term_logc = np.array([np.log(complex(t.coefficient)) for t in state.terms],
                         dtype=np.complex128)
    return term_idx, term_logc


def evolve_abr_ensemble(icfg: InternalConfig, kappa: float,
                        scr: Screens | None = None,
                        n_events: int | None = None,
                        seed: int | None = None,
                        options: AbrOptions = AbrOptions()) -> AbrResult:
    """Run the back-action ensemble at detector constant ``kappa`` (1/um)."""
    scr = scr or Screens.from_config(icfg)
    if scr.y_left != scr.y_right:
        raise ValueError("back-action run requires both screens at one height")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    y_b = scr.y_right
    if y_b >= -icfg.l_y:
        raise ValueError("boundary must lie below the lower slit")
    n = icfg.n_events if n_events is None else n_events
    seed = icfg.seed if seed is None else seed

    mass, g, hbar = icfg.mass, icfg.g, icfg.hbar
    drop = -y_b
    t_fall = math.sqrt(2.0 * drop / g)
    t_max = scr.t_max
    dt = options.dt_factor * t_fall
    spread = icfg.sigma_y * math.sqrt(
        1.0 + (t_max * hbar / (2.0 * mass * icfg.sigma_y ** 2)) ** 2)
    y_far = icfg.l_y + max(10.0 * icfg.sigma_y, options.pad_widths * spread)
    cfg = RobinSolverConfig(kappa=kappa, y_boundary=y_b, y_far=y_far,
                            n_grid=options.n_grid, dt=dt, t_max=t_max)

    state = build_initial_state(icfg)
    (xp, xm), (yu, yd) = slit_factors(icfg)
    x_sigma = icfg.sigma_x
    x_l = np.array([xp.l, xm.l])
    x_u = np.array([xp.u, xm.u])
    term_idx, term_logc = _term_arrays(state, icfg.l_x, icfg.l_y)

    prop = RobinPropagator(cfg, mass, g, hbar)
    psi = np.stack([initial_grid_state(cfg, yu, hbar).psi,
                    initial_grid_state(cfg, yd, hbar).psi], axis=1)
    x_overlap = np.array([[overlap(a, b, hbar) for b in (xp, xm)]
                          for a in (xp, xm)])
    coeffs = np.array([complex(t.coefficient) for t in state.terms])

    def pair_norm2(psi_mat):
        y_ov = cfg.dy * (psi_mat.conj().T @ psi_mat)
        total = 0.0
        for j in range(len(coeffs)):
            for k in range(len(coeffs)):
                ov = np.conj(coeffs[j]) * coeffs[k]
                ov *= x_overlap[term_idx[j, 0], term_idx[k, 0]]
                ov *= y_ov[term_idx[j, 1], term_idx[k, 1]]
                ov *= x_overlap[term_idx[j, 2], term_idx[k, 2]]
                ov *= y_ov[term_idx[j, 3], term_idx[k, 3]]
                total += ov.real
        return total

    norm2_0 = pair_norm2(psi)

    q = sample_positions(state, n, seed)
    phase = np.zeros(n, dtype=np.uint8)
    sg_logc = np.full((n, 4), _NEG_BIG, dtype=np.complex128)
    t_par = np.full((n, 2), np.nan)
    x_par = np.full((n, 2), np.nan)
    side_par = np.full((n, 2), -1, dtype=np.int8)
    v_det = np.full((n, 2), np.nan)
    h_arr = np.full(n, min(kernels.H_INIT, options.window * dt))
    run_max = np.full(n, _NEG_BIG)
    lost = np.zeros(n, dtype=np.int8)

    n_windows = int(math.ceil(t_max / (options.window * dt)))
    surv_t = np.empty(n_windows)
    surv_wave = np.empty(n_windows)
    edge_amp = 0.0
    n_traj = min(options.trajectories, n)
    traj_rows: list[list] = [[] for _ in range(n_traj)]

    val0 = np.ascontiguousarray(psi.T)
    der0 = np.ascontiguousarray(_node_derivatives(psi, cfg.dy, kappa).T)
    T0 = 0.0
    for w in range(n_windows):
        for _ in range(options.window):
            psi, _ = prop.advance_many(psi)
        T1 = min(T0 + options.window * dt, t_max)
        val1 = np.ascontiguousarray(psi.T)
        der1 = np.ascontiguousarray(_node_derivatives(psi, cfg.dy, kappa).T)
        _abr_window_batch(T0, T1, q, phase, sg_logc, t_par, x_par, side_par,
                          v_det, h_arr, run_max, lost,
                          term_idx, term_logc, x_sigma, x_l, x_u, mass, hbar,
                          val0, val1, der0, der1, y_b, cfg.dy, cfg.n_grid,
                          scr.x_split, options.rtol)
        surv_t[w] = T1
        surv_wave[w] = pair_norm2(psi) / norm2_0
        edge_amp = max(edge_amp, float(np.abs(psi[-2]).max()))
        for i in range(n_traj):
            if phase[i] == _PHASE_PAIR:
                traj_rows[i].append((T1, q[i, 0], q[i, 1], q[i, 2], q[i, 3]))
            elif phase[i] == _PHASE_SINGLE:
                rem = 0 if np.isnan(t_par[i, 0]) else 1
                det = 1 - rem
                row = [T1, 0.0, 0.0, 0.0, 0.0]
                row[1 + 2 * rem], row[2 + 2 * rem] = q[i, 0], q[i, 1]
                row[1 + 2 * det], row[2 + 2 * det] = x_par[i, det], y_b
                traj_rows[i].append(tuple(row))
        T0 = T1
        val0, der0 = val1, der1

    alive = phase != _PHASE_DONE
    lost[alive & (lost == kernels.LOST_NONE)] = kernels.LOST_TMAX

    table = EventTable(
        event_id=np.arange(n, dtype=np.int64),
        t_left=np.full(n, np.nan), x_left=np.full(n, np.nan),
        t_right=np.full(n, np.nan), x_right=np.full(n, np.nan),
        first=np.full(n, -1, dtype=np.int8),
        collapse_applied=~np.isnan(t_par).all(axis=1),
        lost=lost,
        source="abr", eta=icfg.eta, species=icfg.species, seed=seed,
    )
    _map_outputs(table, t_par, x_par, side_par)

    both_t = np.where(np.isnan(t_par), np.inf, t_par).max(axis=1)
    surv_traj = np.array([(both_t > tt).mean() for tt in surv_t])

    k0 = kappa0_for(icfg, scr)
    trajectories = []
    for i in range(n_traj):
        knots = np.array(traj_rows[i]) if traj_rows[i] else np.empty((0, 5))
        if len(knots) > kernels.MAX_KNOTS:
            stride = int(math.ceil(len(knots) / kernels.MAX_KNOTS))
            knots = knots[::stride]
        trajectories.append(Trajectory(
            event_id=i, knots=knots,
            termination=("detected" if phase[i] == _PHASE_DONE
                         and lost[i] == kernels.LOST_NONE else "t_max")))

    return AbrResult(
        table=table, survival_t=surv_t, survival_traj=surv_traj,
        survival_wave=surv_wave, kappa=kappa,
        kappa_over_kappa0=kappa / k0, v_detect=v_det,
        edge_amplitude=edge_amp, grid_cfg=cfg, trajectories=trajectories,
    )


def kappa0_for(icfg: InternalConfig, scr: Screens) -> float:
    """Matched detector wavenumber for the run geometry (drop from slit center)."""
    from .robin import kappa0 as _k0
    return _k0(icfg.mass, -scr.y_right, icfg.g, icfg.hbar)
