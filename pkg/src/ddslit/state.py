"""The entangled two-particle state and its Bohmian velocity field.

The state is a superposition of products of 1D Gaussian packets: two
horizontal factors (right-mover ``X+`` and left-mover ``X-``, no force) and
two vertical factors (upper-slit ``Yu`` and lower-slit ``Yd``, accelerating
with -g).  The anticorrelated component pairs an upper packet on one side
with a lower packet on the other; the correlated component pairs equal
heights.  Bosonic symmetrization doubles each product, giving 8 terms with
weights (1 - eta)/2 and (1 + eta)/2 before normalization.

Amplitudes are combined in log space throughout: after tens of milliseconds
of flight the product terms differ by hundreds of orders of magnitude, so
naive complex sums would underflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import InternalConfig
from .constants import HBAR_INT
from .wavepacket import (
    GaussianParams,
    gaussian_dlog,
    gaussian_log,
    momentum_factor,
    momentum_log,
    momentum_overlap,
    overlap,
)

LOG_TINY = np.log(1e-300)


class DegenerateCollapseError(ValueError):
    """Collapse evaluated where the wave function is identically ~0."""


@dataclass(frozen=True)
class PacketTerm:
    """One product term: coefficient times (x1, y1, x2, y2) packets."""

    coefficient: complex
    factors: tuple[GaussianParams, GaussianParams, GaussianParams, GaussianParams]

    def __post_init__(self):
        if len(self.factors) != 4:
            raise ValueError("PacketTerm needs exactly 4 factors")


@dataclass(frozen=True)
class ConditionalTerm:
    """Post-collapse one-particle term: coefficient times (x, y) packets."""

    coefficient: complex
    factors: tuple[GaussianParams, GaussianParams]


@dataclass(frozen=True)
class CollapseInfo:
    detected: int          # 1 or 2
    position: tuple[float, float]
    t_c: float


@dataclass(frozen=True)
class TwoParticleState:
    terms: tuple[PacketTerm, ...]
    eta: float
    norm_constant: float
    t0: float = 0.0
    collapsed: CollapseInfo | None = None
    conditional_terms: tuple[ConditionalTerm, ...] | None = None
    hbar: float = HBAR_INT

    @property
    def is_collapsed(self) -> bool:
        return self.collapsed is not None


# ---------------------------------------------------------------------------
# construction

def slit_factors(icfg: InternalConfig):
    """The four distinct 1D packets: (X+, X-), (Yu, Yd)."""
    m, g = icfg.mass, icfg.g
    x_plus = GaussianParams(icfg.sigma_x, +icfg.l_x, +icfg.u_x, 0.0, m)
    x_minus = GaussianParams(icfg.sigma_x, -icfg.l_x, -icfg.u_x, 0.0, m)
    y_up = GaussianParams(icfg.sigma_y, +icfg.l_y, +icfg.u_y, -g, m)
    y_down = GaussianParams(icfg.sigma_y, -icfg.l_y, -icfg.u_y, -g, m)
    return (x_plus, x_minus), (y_up, y_down)


# Factor-table indices (0 = X+/Yu, 1 = X-/Yd) for the 8 symmetrized products.
CROSS_TERMS = ((0, 0, 1, 1), (0, 1, 1, 0), (1, 1, 0, 0), (1, 0, 0, 1))
PARALLEL_TERMS = ((0, 0, 1, 0), (0, 1, 1, 1), (1, 0, 0, 0), (1, 1, 0, 1))


def build_initial_state(icfg: InternalConfig) -> TwoParticleState:
    """Assemble and normalize the symmetrized initial state at t0 = 0."""
    (xp, xm), (yu, yd) = slit_factors(icfg)
    x_tab, y_tab = (xp, xm), (yu, yd)
    w_cross = 0.5 * (1.0 - icfg.eta)
    w_par = 0.5 * (1.0 + icfg.eta)

    raw: list[PacketTerm] = []
    for weight, idx_list in ((w_cross, CROSS_TERMS), (w_par, PARALLEL_TERMS)):
        if weight == 0.0:
            continue
        for i1x, i1y, i2x, i2y in idx_list:
            raw.append(
                PacketTerm(weight, (x_tab[i1x], y_tab[i1y], x_tab[i2x], y_tab[i2y]))
            )

    norm2 = _pair_norm_squared(raw, icfg.hbar)
    n_const = 1.0 / np.sqrt(norm2)
    terms = tuple(
        PacketTerm(t.coefficient * n_const, t.factors) for t in raw
    )
    return TwoParticleState(terms=terms, eta=icfg.eta, norm_constant=n_const,
                            hbar=icfg.hbar)


def make_product_state(x: GaussianParams, y: GaussianParams,
                       x2: GaussianParams | None = None,
                       y2: GaussianParams | None = None,
                       hbar: float = HBAR_INT) -> TwoParticleState:
    """Single-term product state (particle 2 mirrors particle 1 by default)."""
    x2 = x2 or GaussianParams(x.sigma, -x.l, -x.u, x.a, x.m)
    y2 = y2 or y
    term = PacketTerm(1.0, (x, y, x2, y2))
    return TwoParticleState(terms=(term,), eta=0.0, norm_constant=1.0, hbar=hbar)


def _pair_norm_squared(terms, hbar: float) -> float:
    total = 0.0 + 0.0j
    for tj in terms:
        for tk in terms:
            ov = np.conj(tj.coefficient) * tk.coefficient
            for fj, fk in zip(tj.factors, tk.factors):
                ov *= overlap(fj, fk, hbar)
            total += ov
    return float(total.real)


def norm_squared(s: TwoParticleState) -> float:
    """Exact squared norm from pairwise Gaussian overlaps (time-invariant)."""
    if s.is_collapsed:
        return _conditional_norm_squared(s.conditional_terms, s.hbar)
    return _pair_norm_squared(s.terms, s.hbar)


def _conditional_norm_squared(terms, hbar: float) -> float:
    total = 0.0 + 0.0j
    for tj in terms:
        for tk in terms:
            ov = np.conj(tj.coefficient) * tk.coefficient
            for fj, fk in zip(tj.factors, tk.factors):
                ov *= overlap(fj, fk, hbar)
            total += ov
    return float(total.real)


# ---------------------------------------------------------------------------
# evaluation

def _coords(r):
    r = np.asarray(r, dtype=float)
    return r[..., 0], r[..., 1]


def _log_terms_pair(s: TwoParticleState, r1, r2, t):
    x1, y1 = _coords(r1)
    x2, y2 = _coords(r2)
    # group the sum per particle: particle exchange then permutes bitwise
    # identical addends, keeping evaluate_state exactly symmetric
    logs = [
        np.log(term.coefficient + 0j)
        + (
            (gaussian_log(term.factors[0], x1, t, s.hbar)
             + gaussian_log(term.factors[1], y1, t, s.hbar))
            + (gaussian_log(term.factors[2], x2, t, s.hbar)
               + gaussian_log(term.factors[3], y2, t, s.hbar))
        )
        for term in s.terms
    ]
    return np.stack(logs, axis=0)


def _log_terms_single(s: TwoParticleState, r, t):
    x, y = _coords(r)
    logs = [
        np.log(term.coefficient + 0j)
        + gaussian_log(term.factors[0], x, t, s.hbar)
        + gaussian_log(term.factors[1], y, t, s.hbar)
        for term in s.conditional_terms
    ]
    return np.stack(logs, axis=0)


def evaluate_state_log(s: TwoParticleState, r1, r2, t):
    """Complex log of the amplitude (conditional amplitude once collapsed)."""
    if s.is_collapsed:
        r = r2 if s.collapsed.detected == 1 else r1
        logs = _log_terms_single(s, r, t)
    else:
        logs = _log_terms_pair(s, r1, r2, t)
    shift = np.max(logs.real, axis=0)
    total = np.sum(np.exp(logs - shift), axis=0)
    with np.errstate(divide="ignore"):
        return shift + np.log(total)


def evaluate_state(s: TwoParticleState, r1, r2, t):
    """Complex amplitude; underflows to 0 far outside the packet support."""
    return np.exp(evaluate_state_log(s, r1, r2, t))


def velocity_field_diag(s: TwoParticleState, r1, r2, t):
    """Velocities of both particles plus log|Psi|^2 at the configuration.

    A collapsed state guides only the surviving particle; the detected one
    gets zero velocity.  Reference implementation (the production integrator
    uses a compiled replica of this arithmetic).
    """
    if s.is_collapsed:
        det = s.collapsed.detected
        r = r2 if det == 1 else r1
        x, y = _coords(r)
        coords = (x, y)
        logs = _log_terms_single(s, r, t)
        dlogs = [
            [gaussian_dlog(term.factors[i], coords[i], t, s.hbar) for term in s.conditional_terms]
            for i in range(2)
        ]
        mass = s.conditional_terms[0].factors[0].m
    else:
        x1, y1 = _coords(r1)
        x2, y2 = _coords(r2)
        coords = (x1, y1, x2, y2)
        logs = _log_terms_pair(s, r1, r2, t)
        dlogs = [
            [gaussian_dlog(term.factors[i], coords[i], t, s.hbar) for term in s.terms]
            for i in range(4)
        ]
        mass = s.terms[0].factors[0].m

    shift = np.max(logs.real, axis=0)
    weights = np.exp(logs - shift)
    denom = np.sum(weights, axis=0)
    log_psi2 = 2.0 * (shift + np.log(np.abs(denom), where=np.abs(denom) > 0,
                                     out=np.full_like(shift, -np.inf)))
    vel = []
    for dlog_list in dlogs:
        num = np.sum(weights * np.stack(dlog_list, axis=0), axis=0)
        vel.append((s.hbar / mass) * np.imag(num / denom))

    if s.is_collapsed:
        zero = np.zeros_like(vel[0])
        v_rem = np.stack(vel, axis=-1)
        v1 = np.stack((zero, zero), axis=-1) if s.collapsed.detected == 1 else v_rem
        v2 = v_rem if s.collapsed.detected == 1 else np.stack((zero, zero), axis=-1)
        return v1, v2, log_psi2
    v1 = np.stack(vel[:2], axis=-1)
    v2 = np.stack(vel[2:], axis=-1)
    return v1, v2, log_psi2


def velocity_field(s: TwoParticleState, r1, r2, t):
    """Guidance velocities (hbar/m) Im(grad Psi / Psi) for both particles."""
    v1, v2, _ = velocity_field_diag(s, r1, r2, t)
    return v1, v2


# ---------------------------------------------------------------------------
# collapse

def collapse(s: TwoParticleState, detected: int, position, t_c: float) -> TwoParticleState:
    """Reduce to the conditional one-particle state at the detection event.

    The detected particle's factors are evaluated at the detected position
    and absorbed into the coefficients of the surviving particle's four
    distinct factor pairs; the result is renormalized exactly via overlaps.
    """
    if s.is_collapsed:
        raise ValueError("state is already collapsed")
    if detected not in (1, 2):
        raise ValueError("detected particle index must be 1 or 2")
    xd, yd = float(position[0]), float(position[1])
    det_sl = (0, 1) if detected == 1 else (2, 3)
    rem_sl = (2, 3) if detected == 1 else (0, 1)

    groups: dict[tuple, list] = {}
    for term in s.terms:
        key = (term.factors[rem_sl[0]], term.factors[rem_sl[1]])
        logc = (
            np.log(term.coefficient + 0j)
            + gaussian_log(term.factors[det_sl[0]], xd, t_c, s.hbar)
            + gaussian_log(term.factors[det_sl[1]], yd, t_c, s.hbar)
        )
        groups.setdefault(key, []).append(logc)

    keys = list(groups)
    logcs = np.array([_logsumexp_complex(groups[k]) for k in keys])
    peak = np.max(logcs.real)
    if peak < LOG_TINY:
        raise DegenerateCollapseError(
            f"conditional amplitude vanished at {(xd, yd)}, t={t_c}"
        )
    coeffs = np.exp(logcs - peak)

    raw = [ConditionalTerm(c, k) for c, k in zip(coeffs, keys) if c != 0.0]
    norm2 = _conditional_norm_squared(raw, s.hbar)
    scale = 1.0 / np.sqrt(norm2)
    cond = tuple(ConditionalTerm(t.coefficient * scale, t.factors) for t in raw)
    return TwoParticleState(
        terms=s.terms,
        eta=s.eta,
        norm_constant=s.norm_constant,
        t0=s.t0,
        collapsed=CollapseInfo(detected, (xd, yd), t_c),
        conditional_terms=cond,
        hbar=s.hbar,
    )


def _logsumexp_complex(logs) -> complex:
    logs = np.asarray(logs)
    shift = np.max(logs.real)
    if not np.isfinite(shift):
        return complex(-np.inf, 0.0)
    return shift + np.log(np.sum(np.exp(logs - shift)))


# ---------------------------------------------------------------------------
# momentum space

@dataclass(frozen=True)
class MomentumDensity:
    """|FT of the initial state|^2, a Gaussian-mixture density over (p1, p2)."""

    coefficients: tuple[complex, ...]
    factors: tuple[tuple, ...]   # per term: 4 MomentumFactor (p1x, p1y, p2x, p2y)
    hbar: float

    def log_density(self, p1, p2):
        p1 = np.asarray(p1, dtype=float)
        p2 = np.asarray(p2, dtype=float)
        comps = (p1[..., 0], p1[..., 1], p2[..., 0], p2[..., 1])
        logs = []
        for c, facs in zip(self.coefficients, self.factors):
            lg = np.log(c + 0j)
            for f, p in zip(facs, comps):
                lg = lg + momentum_log(f, p, self.hbar)
            logs.append(lg)
        logs = np.stack(logs, axis=0)
        shift = np.max(logs.real, axis=0)
        total = np.sum(np.exp(logs - shift), axis=0)
        with np.errstate(divide="ignore"):
            return 2.0 * (shift + np.log(np.abs(total)))

    def density(self, p1, p2):
        return np.exp(self.log_density(p1, p2))

    def total_mass(self) -> float:
        """Exact integral over all momenta (Parseval check), from overlaps."""
        total = 0.0 + 0.0j
        for cj, fj in zip(self.coefficients, self.factors):
            for ck, fk in zip(self.coefficients, self.factors):
                ov = np.conj(cj) * ck
                for a, b in zip(fj, fk):
                    ov *= momentum_overlap(a, b, self.hbar)
                total += ov
        return float(total.real)


def momentum_density(s: TwoParticleState) -> MomentumDensity:
    """Momentum-space density of the uncollapsed initial state."""
    if s.is_collapsed:
        raise ValueError("momentum density is defined for the initial state only")
    coeffs = tuple(term.coefficient for term in s.terms)
    factors = tuple(
        tuple(momentum_factor(f, s.hbar) for f in term.factors) for term in s.terms
    )
    return MomentumDensity(coeffs, factors, s.hbar)
