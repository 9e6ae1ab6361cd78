"""Compiled per-event trajectory integration.

Each Monte Carlo event integrates the guidance ODE with an embedded
Dormand-Prince 4(5) pair, localizes screen crossings by bisection on the
cubic Hermite interpolant of the accepted step, applies the mid-flight
collapse, and continues the surviving particle under the conditional state.
The wave-function arithmetic mirrors :mod:`ddslit.state` exactly (log-space
term combination with a max shift); tests assert the two paths agree to
machine precision.

State packing: slot order is (x1, y1, x2, y2); each slot owns a 2-row table
of candidate packets (right/left movers for x slots, upper/lower slits for y
slots) and every term selects one candidate per slot.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from numba import njit, prange

# lost-reason codes shared with dynamics.py
LOST_NONE = 0
LOST_TMAX = 1
LOST_NODE_TRAP = 2
LOST_SAME_SIDE = 3
LOST_DEGENERATE = 4
LOST_STEP_LIMIT = 5

LOG_NODE_EPS = math.log(1e-24)    # node flag: |Psi|^2 below this x running max
LOG_TINY = math.log(1e-300)       # degenerate-collapse threshold
_NEG_BIG = -1e300                 # sentinel "log of zero"

RTOL = 1e-9
ATOL = 1e-9                       # um
H_INIT = 1e-3                     # ms
H_MIN = 1e-9                      # ms (= 1e-12 s)
TIE_WINDOW = 1e-9                 # ms; equal-time crossings resolve to particle 1
MAX_STEPS = 5_000_000
MAX_KNOTS = 2000

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
])
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([
    35 / 384 - 5179 / 57600, 0.0, 500 / 1113 - 7571 / 16695,
    125 / 192 - 393 / 640, -2187 / 6784 + 92097 / 339200,
    11 / 84 - 187 / 2100, -1 / 40,
])

_SINGLE_IDX = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.uint8)


@njit(cache=True)
def velocity_terms(t, q, fac_sigma, fac_a, fac_l, fac_u, term_idx, term_logc,
                   mass, hbar, v_out):
    """Guidance velocities and log|Psi|^2 at configuration q (any slot count).

    Writes velocities into ``v_out`` and returns log|Psi|^2 (``_NEG_BIG`` at
    an exact node, where the velocity is left zero).
    """
    nslots = q.shape[0]
    nterms = term_logc.shape[0]
    logg = np.empty((nslots, 2), np.complex128)
    dlog = np.empty((nslots, 2), np.complex128)
    for s in range(nslots):
        sigma = fac_sigma[s]
        a = fac_a[s]
        st = sigma * (1.0 + 1j * t * hbar / (2.0 * mass * sigma * sigma))
        log_pref = -0.25 * math.log(2.0 * math.pi) - 0.5 * cmath.log(st)
        inv4 = 1.0 / (4.0 * sigma * st)
        a2t36 = a * a * t * t * t / 6.0
        x = q[s]
        for c in range(2):
            l = fac_l[s, c]
            u = fac_u[s, c]
            xc = l + u * t + 0.5 * a * t * t
            uat = u + a * t
            phase = (mass / hbar) * (uat * (x - l - 0.5 * u * t) - a2t36) \
                + (mass * a * l / hbar) * t
            dx = x - xc
            logg[s, c] = log_pref - dx * dx * inv4 + 1j * phase
            dlog[s, c] = -dx * (2.0 * inv4) + 1j * (mass / hbar) * uat

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
def _hermite(q0, f0, q1, f1, h, theta, out):
    """Cubic Hermite interpolation on one accepted step."""
    t2 = theta * theta
    t3 = t2 * theta
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + theta
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    for i in range(q0.shape[0]):
        out[i] = h00 * q0[i] + h10 * h * f0[i] + h01 * q1[i] + h11 * h * f1[i]


@njit(cache=True)
def _screen_height(x, x_split, y_left, y_right):
    return y_left if x < x_split else y_right


@njit(cache=True)
def _gap(q, part, x_split, y_left, y_right):
    """Height of particle ``part`` above its applicable screen plane."""
    x = q[2 * part]
    y = q[2 * part + 1]
    return y - _screen_height(x, x_split, y_left, y_right)


@njit(cache=True)
def _bisect_crossing(q0, f0, q1, f1, h, t0, part, x_split, y_left, y_right,
                     tmp):
    """Locate a screen crossing inside an accepted step.

    Assumes the particle is above its screen at theta=0 and at or below at
    theta=1.  Refines until the time bracket is below 1e-9 relative.
    Returns (theta, x_at_crossing).
    """
    lo = 0.0
    hi = 1.0
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        _hermite(q0, f0, q1, f1, h, mid, tmp)
        if _gap(tmp, part, x_split, y_left, y_right) > 0.0:
            lo = mid
        else:
            hi = mid
        t_mid = t0 + mid * h
        if (hi - lo) * h <= 1e-9 * max(t_mid, 1e-6):
            break
    theta = 0.5 * (lo + hi)
    _hermite(q0, f0, q1, f1, h, theta, tmp)
    return theta, tmp[2 * part]


@njit(cache=True)
def _error_norm(q0, q1, err, n):
    acc = 0.0
    for i in range(n):
        scale = ATOL + RTOL * max(abs(q0[i]), abs(q1[i]))
        r = err[i] / scale
        acc += r * r
    return math.sqrt(acc / n)


@njit(cache=True)
def _collapse_coefficients(t_c, xd, yd, det, fac_sigma, fac_a, fac_l, fac_u,
                           term_idx, term_logc, mass, hbar, out_logc):
    """Fold the detected particle's factors at (xd, yd, t_c) into coefficients.

    Remaining-particle terms are grouped by their (x, y) candidate pair;
    ``out_logc`` has 4 entries indexed ``2*ix + iy``.  Returns the max real
    log before shifting, or ``_NEG_BIG`` when the conditional amplitude
    vanished entirely.
    """
    if det == 0:
        sx, sy = 0, 1
        rx, ry = 2, 3
    else:
        sx, sy = 2, 3
        rx, ry = 0, 1
    nterms = term_logc.shape[0]
    vals = np.empty(nterms, np.complex128)
    combo = np.empty(nterms, np.int64)
    shift = _NEG_BIG
    for k in range(nterms):
        acc = term_logc[k]
        for pair_i in range(2):
            slot = sx if pair_i == 0 else sy
            coord = xd if pair_i == 0 else yd
            sigma = fac_sigma[slot]
            a = fac_a[slot]
            st = sigma * (1.0 + 1j * t_c * hbar / (2.0 * mass * sigma * sigma))
            c = term_idx[k, slot]
            l = fac_l[slot, c]
            u = fac_u[slot, c]
            xc = l + u * t_c + 0.5 * a * t_c * t_c
            phase = (mass / hbar) * ((u + a * t_c) * (coord - l - 0.5 * u * t_c)
                                     - a * a * t_c ** 3 / 6.0) \
                + (mass * a * l / hbar) * t_c
            acc = acc + (-0.25 * math.log(2.0 * math.pi) - 0.5 * cmath.log(st)
                         - (coord - xc) ** 2 / (4.0 * sigma * st) + 1j * phase)
        vals[k] = acc
        combo[k] = term_idx[k, rx] * 2 + term_idx[k, ry]
        if acc.real > shift:
            shift = acc.real
    if shift <= LOG_TINY:
        return _NEG_BIG
    sums = np.zeros(4, np.complex128)
    for k in range(nterms):
        sums[combo[k]] += cmath.exp(vals[k] - shift)
    for j in range(4):
        m = abs(sums[j])
        if m == 0.0:
            out_logc[j] = _NEG_BIG + 0.0j
        else:
            out_logc[j] = math.log(m) + 1j * cmath.phase(sums[j])
    return shift


@njit(cache=True)
def _record_knot(traj, n_knots, t, x1, y1, x2, y2):
    traj[n_knots, 0] = t
    traj[n_knots, 1] = x1
    traj[n_knots, 2] = y1
    traj[n_knots, 3] = x2
    traj[n_knots, 4] = y2
    return n_knots + 1


@njit(cache=True)
def _integrate_event(q_init, fac_sigma, fac_a, fac_l, fac_u, term_idx,
                     term_logc, mass, hbar, y_left, y_right, x_split, t_max,
                     collapse_enabled, t_par, x_par, side_par, q_final, traj,
                     want_traj):
    """Integrate one event through both detections.

    Per-particle outputs: detection time, detection x, side (0 left, 1 right,
    -1 undetected).  Returns (lost_reason, collapse_applied, n_steps,
    n_knots).
    """
    q = q_init.copy()
    t = 0.0
    h = H_INIT
    detected = np.zeros(2, np.uint8)
    collapse_applied = False
    lost = LOST_NONE

    k_stage = np.empty((7, 4), np.float64)
    q_try = np.empty(4, np.float64)
    q_new = np.empty(4, np.float64)
    err = np.empty(4, np.float64)
    tmp = np.empty(4, np.float64)
    f0 = np.empty(4, np.float64)

    # single-phase scratch, filled at collapse
    sg_sigma = np.empty(2, np.float64)
    sg_a = np.empty(2, np.float64)
    sg_l = np.empty((2, 2), np.float64)
    sg_u = np.empty((2, 2), np.float64)
    sg_logc = np.empty(4, np.complex128)

    is_pair = True
    rem_part = -1

    logpsi2 = velocity_terms(t, q[:4], fac_sigma, fac_a, fac_l, fac_u,
                             term_idx, term_logc, mass, hbar, f0[:4])
    run_max = logpsi2

    n_knots = 0
    knot_stride = 1
    step_since_knot = 0
    if want_traj:
        n_knots = _record_knot(traj, n_knots, t, q[0], q[1], q[2], q[3])

    n_steps = 0
    while True:
        if not is_pair and rem_part < 0:
            break
        if t >= t_max:
            lost = LOST_TMAX
            break
        if n_steps >= MAX_STEPS:
            lost = LOST_STEP_LIMIT
            break
        if h > t_max - t:
            h = t_max - t

        if is_pair:
            nq = 4
        else:
            nq = 2

        # --- one embedded Dormand-Prince step ---------------------------
        for i in range(nq):
            k_stage[0, i] = f0[i]
        min_stage_log = logpsi2
        for stg in range(1, 6):
            for i in range(nq):
                acc = 0.0
                for j in range(stg):
                    acc += _A[stg, j] * k_stage[j, i]
                q_try[i] = q[i] + h * acc
            if is_pair:
                lp = velocity_terms(t + _C[stg] * h, q_try[:4], fac_sigma,
                                    fac_a, fac_l, fac_u, term_idx, term_logc,
                                    mass, hbar, k_stage[stg, :4])
            else:
                lp = velocity_terms(t + _C[stg] * h, q_try[:2], sg_sigma,
                                    sg_a, sg_l, sg_u, _SINGLE_IDX, sg_logc,
                                    mass, hbar, k_stage[stg, :2])
            if lp < min_stage_log:
                min_stage_log = lp
        for i in range(nq):
            acc = 0.0
            for j in range(6):
                acc += _B5[j] * k_stage[j, i]
            q_new[i] = q[i] + h * acc
        if is_pair:
            lp_end = velocity_terms(t + h, q_new[:4], fac_sigma, fac_a,
                                    fac_l, fac_u, term_idx, term_logc,
                                    mass, hbar, k_stage[6, :4])
        else:
            lp_end = velocity_terms(t + h, q_new[:2], sg_sigma, sg_a, sg_l,
                                    sg_u, _SINGLE_IDX, sg_logc, mass, hbar,
                                    k_stage[6, :2])
        if lp_end < min_stage_log:
            min_stage_log = lp_end
        for i in range(nq):
            acc = 0.0
            for j in range(7):
                acc += _E[j] * k_stage[j, i]
            err[i] = h * acc
        enorm = _error_norm(q[:nq], q_new[:nq], err[:nq], nq)
        node_hit = min_stage_log < run_max + LOG_NODE_EPS

        n_steps += 1
        if enorm > 1.0 or node_hit:
            fac = max(0.2, 0.9 * enorm ** -0.2) if enorm > 1.0 else 1.0
            if node_hit:
                fac = min(fac, 0.25)
            h *= fac
            if h < H_MIN:
                lost = LOST_NODE_TRAP
                break
            continue

        # --- accepted step ----------------------------------------------
        if lp_end > run_max:
            run_max = lp_end
        h_next = h * min(5.0, max(0.2, 0.9 * (enorm + 1e-300) ** -0.2))

        if is_pair:
            # collect crossings of all alive particles within this step
            th0 = 2.0
            th1 = 2.0
            x0d = 0.0
            x1d = 0.0
            if detected[0] == 0 and _gap(q_new, 0, x_split, y_left, y_right) <= 0.0:
                th0, x0d = _bisect_crossing(q[:4], k_stage[0, :4], q_new[:4],
                                            k_stage[6, :4], h, t, 0,
                                            x_split, y_left, y_right, tmp)
            if detected[1] == 0 and _gap(q_new, 1, x_split, y_left, y_right) <= 0.0:
                th1, x1d = _bisect_crossing(q[:4], k_stage[0, :4], q_new[:4],
                                            k_stage[6, :4], h, t, 1,
                                            x_split, y_left, y_right, tmp)
            if th0 <= 1.0 or th1 <= 1.0:
                # equal-time tie resolves to particle 1 (index 0)
                if th0 <= 1.0 and (th1 > 1.0 or th0 * h <= th1 * h + TIE_WINDOW):
                    first_part, th_first, x_first = 0, th0, x0d
                    second_ok, th_second, x_second = th1 <= 1.0, th1, x1d
                else:
                    first_part, th_first, x_first = 1, th1, x1d
                    second_ok, th_second, x_second = th0 <= 1.0, th0, x0d
                t_c = t + th_first * h
                t_par[first_part] = t_c
                x_par[first_part] = x_first
                side_par[first_part] = 0 if x_first < x_split else 1
                detected[first_part] = 1

                if collapse_enabled:
                    y_scr = _screen_height(x_first, x_split, y_left, y_right)
                    shift = _collapse_coefficients(
                        t_c, x_first, y_scr, first_part, fac_sigma, fac_a,
                        fac_l, fac_u, term_idx, term_logc, mass, hbar,
                        sg_logc)
                    if shift <= _NEG_BIG:
                        lost = LOST_DEGENERATE
                        break
                    rem_part = 1 - first_part
                    rx = 2 * rem_part
                    ry = rx + 1
                    sg_sigma[0] = fac_sigma[rx]
                    sg_sigma[1] = fac_sigma[ry]
                    sg_a[0] = fac_a[rx]
                    sg_a[1] = fac_a[ry]
                    for c in range(2):
                        sg_l[0, c] = fac_l[rx, c]
                        sg_l[1, c] = fac_l[ry, c]
                        sg_u[0, c] = fac_u[rx, c]
                        sg_u[1, c] = fac_u[ry, c]
                    _hermite(q[:4], k_stage[0, :4], q_new[:4],
                             k_stage[6, :4], h, th_first, tmp)
                    q[0] = tmp[rx]
                    q[1] = tmp[ry]
                    t = t_c
                    is_pair = False
                    collapse_applied = True
                    logpsi2 = velocity_terms(t, q[:2], sg_sigma, sg_a, sg_l,
                                             sg_u, _SINGLE_IDX, sg_logc,
                                             mass, hbar, f0[:2])
                    run_max = logpsi2
                    h = min(h_next, H_INIT)
                    if want_traj and n_knots < traj.shape[0]:
                        n_knots = _record_knot(traj, n_knots, t, tmp[0],
                                               tmp[1], tmp[2], tmp[3])
                    continue

                # collapse disabled: record the other crossing too
                if second_ok:
                    t_par[1 - first_part] = t + th_second * h
                    x_par[1 - first_part] = x_second
                    side_par[1 - first_part] = 0 if x_second < x_split else 1
                    detected[1 - first_part] = 1
                if detected[0] == 1 and detected[1] == 1:
                    t = max(t_par[0], t_par[1])
                    break
        else:
            g1 = q_new[1] - _screen_height(q_new[0], x_split, y_left, y_right)
            if g1 <= 0.0:
                th, xd = _bisect_crossing(q[:2], k_stage[0, :2], q_new[:2],
                                          k_stage[6, :2], h, t, 0,
                                          x_split, y_left, y_right, tmp)
                t_c = t + th * h
                t_par[rem_part] = t_c
                x_par[rem_part] = xd
                side_par[rem_part] = 0 if xd < x_split else 1
                detected[rem_part] = 1
                t = t_c
                break

        # advance
        t += h
        for i in range(nq):
            q[i] = q_new[i]
            f0[i] = k_stage[6, i]
        logpsi2 = lp_end
        h = h_next

        if want_traj:
            step_since_knot += 1
            if step_since_knot >= knot_stride:
                step_since_knot = 0
                if n_knots >= traj.shape[0]:
                    half = n_knots // 2
                    for i in range(half):
                        for j in range(5):
                            traj[i, j] = traj[2 * i, j]
                    n_knots = half
                    knot_stride *= 2
                if is_pair:
                    n_knots = _record_knot(traj, n_knots, t, q[0], q[1],
                                           q[2], q[3])
                else:
                    det_part = 1 - rem_part
                    y_frozen = _screen_height(x_par[det_part], x_split,
                                              y_left, y_right)
                    if rem_part == 0:
                        n_knots = _record_knot(traj, n_knots, t, q[0], q[1],
                                               x_par[det_part], y_frozen)
                    else:
                        n_knots = _record_knot(traj, n_knots, t,
                                               x_par[det_part], y_frozen,
                                               q[0], q[1])

    for i in range(4):
        q_final[i] = q[i]
    if lost == LOST_NONE and detected[0] == 1 and detected[1] == 1:
        if side_par[0] == side_par[1]:
            lost = LOST_SAME_SIDE
    return lost, collapse_applied, n_steps, n_knots


@njit(cache=True, parallel=True)
def integrate_batch(q0, fac_sigma, fac_a, fac_l, fac_u, term_idx, term_logc,
                    mass, hbar, y_left, y_right, x_split, t_max,
                    collapse_enabled, n_traj,
                    t_par, x_par, side_par, lost, collapsed, n_steps,
                    q_final, traj_buf, traj_len):
    n = q0.shape[0]
    for i in prange(n):
        want = i < n_traj
        if want:
            res = _integrate_event(
                q0[i], fac_sigma, fac_a, fac_l, fac_u, term_idx, term_logc,
                mass, hbar, y_left, y_right, x_split, t_max, collapse_enabled,
                t_par[i], x_par[i], side_par[i], q_final[i], traj_buf[i], True)
            traj_len[i] = res[3]
        else:
            res = _integrate_event(
                q0[i], fac_sigma, fac_a, fac_l, fac_u, term_idx, term_logc,
                mass, hbar, y_left, y_right, x_split, t_max, collapse_enabled,
                t_par[i], x_par[i], side_par[i], q_final[i], traj_buf[0, :0, :],
                False)
        lost[i] = res[0]
        collapsed[i] = 1 if res[1] else 0
        n_steps[i] = res[2]
