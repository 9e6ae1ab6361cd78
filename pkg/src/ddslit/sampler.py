"""Quantum-equilibrium sampling of initial conditions.

Positions are drawn from |Psi(t0)|^2 and momenta (for the semiclassical
oracle) independently from |Psi~(t0)|^2.  Both densities are squared sums of
Gaussian products, so an exact rejection sampler is available: the proposal
is the phase-stripped square (sum of term moduli)^2 -- itself a Gaussian
mixture once the geometric-mean cross components are included -- which
dominates the true density pointwise by the triangle inequality.  With
near-disjoint packets the acceptance ratio is ~1 away from overlap fringes,
and the correction keeps the sampler exact when the packets do overlap.

Randomness is counter-based and per event: event ``i`` of a run seeded with
``s`` uses a Philox-4x64 generator keyed ``(s, i)``, so samples do not depend
on batch size, ordering, or worker count.  Each rejection round consumes a
fixed-size block of draws from the event's stream, keeping the stream layout
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .state import TwoParticleState, momentum_density

_BLOCK = 3  # proposals drawn per rejection round


@dataclass(frozen=True)
class ConfigPoint:
    """Initial configuration (r1, r2) of one event, internal units."""

    r1: tuple[float, float]
    r2: tuple[float, float]

    def as_array(self) -> np.ndarray:
        return np.array([*self.r1, *self.r2], dtype=float)


@dataclass(frozen=True)
class PhasePoint:
    """Initial configuration plus momenta of one event, internal units."""

    r1: tuple[float, float]
    r2: tuple[float, float]
    p1: tuple[float, float]
    p2: tuple[float, float]


def event_rng(seed: int, event_id: int) -> np.random.Generator:
    """Counter-based per-event substream (Philox key = (seed, event_id))."""
    key = np.array([np.uint64(seed & (2**64 - 1)), np.uint64(event_id)])
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class _Mixture:
    """Exact rejection sampler for |sum_k c_k T_k|^2-type densities.

    ``T_k`` is a product of four 1D Gaussians over coordinates ``z`` with a
    linear phase: log T_k(z) = sum_s [-(z_s - c_ks)^2 / (4 sigma_s^2)]
    + i (slope_k . z + phi0_k) + const.  The shared const cancels from the
    acceptance ratio and is dropped.
    """

    comp_centers: np.ndarray   # (C, 4) proposal component centers
    comp_cumw: np.ndarray      # (C,) cumulative weights, last = 1
    sigmas: np.ndarray         # (4,)
    term_centers: np.ndarray   # (K, 4)
    term_slopes: np.ndarray    # (K, 4)
    term_phi0: np.ndarray      # (K,)
    term_logc: np.ndarray      # (K,) log of positive coefficients

    def log_accept(self, z: np.ndarray) -> np.ndarray:
        """log of |sum c T|^2 / (sum c |T|)^2 for points z of shape (n, 4)."""
        env = self.term_logc[None, :] - np.sum(
            (z[:, None, :] - self.term_centers[None, :, :]) ** 2
            / (4.0 * self.sigmas**2)[None, None, :],
            axis=2,
        )
        phase = z @ self.term_slopes.T + self.term_phi0[None, :]
        shift = env.max(axis=1, keepdims=True)
        w = np.exp(env - shift)
        num = np.abs(np.sum(w * np.exp(1j * phase), axis=1))
        den = np.sum(w, axis=1)
        with np.errstate(divide="ignore"):
            return 2.0 * (np.log(num) - np.log(den))

    def propose(self, u_comp: np.ndarray, normals: np.ndarray) -> np.ndarray:
        comp = np.minimum(
            np.searchsorted(self.comp_cumw, u_comp), len(self.comp_cumw) - 1
        )
        return self.comp_centers[comp] + self.sigmas[None, :] * normals


def _build_mixture(term_centers, sigmas, coeffs, term_slopes, term_phi0) -> _Mixture:
    coeffs = np.asarray(coeffs, dtype=float)
    if np.any(coeffs <= 0):
        raise ValueError("mixture requires positive term coefficients")
    k = len(coeffs)
    centers, weights = [], []
    for j in range(k):
        for i in range(j, k):
            damp = np.exp(
                -np.sum((term_centers[j] - term_centers[i]) ** 2 / (8.0 * sigmas**2))
            )
            w = coeffs[j] * coeffs[i] * damp * (1.0 if i == j else 2.0)
            centers.append(0.5 * (term_centers[j] + term_centers[i]))
            weights.append(w)
    weights = np.asarray(weights)
    return _Mixture(
        comp_centers=np.asarray(centers),
        comp_cumw=np.cumsum(weights) / weights.sum(),
        sigmas=np.asarray(sigmas, dtype=float),
        term_centers=np.asarray(term_centers, dtype=float),
        term_slopes=np.asarray(term_slopes, dtype=float),
        term_phi0=np.asarray(term_phi0, dtype=float),
        term_logc=np.log(coeffs),
    )


def _position_mixture(s: TwoParticleState) -> _Mixture:
    coeffs = np.array([complex(t.coefficient).real for t in s.terms])
    centers = np.array([[f.l for f in t.factors] for t in s.terms])
    sigmas = np.array([f.sigma for f in s.terms[0].factors])
    hbar = s.hbar
    slopes = np.array([[f.m * f.u / hbar for f in t.factors] for t in s.terms])
    phi0 = np.array([-sum(f.m * f.u * f.l / hbar for f in t.factors) for t in s.terms])
    return _build_mixture(centers, sigmas, coeffs, slopes, phi0)


def _momentum_mixture(s: TwoParticleState) -> _Mixture:
    dens = momentum_density(s)
    coeffs = np.array([complex(c).real for c in dens.coefficients])
    centers = np.array([[f.p0 for f in facs] for facs in dens.factors])
    sigmas = np.array([f.sigma_p for f in dens.factors[0]])
    slopes = np.array([[-f.l / s.hbar for f in facs] for facs in dens.factors])
    phi0 = np.zeros(len(coeffs))
    return _build_mixture(centers, sigmas, coeffs, slopes, phi0)


def _rejection_sample(mix: _Mixture, rngs: list[np.random.Generator],
                      out: np.ndarray) -> None:
    pending = np.arange(len(rngs))
    while pending.size:
        m = pending.size
        u_comp = np.empty((m, _BLOCK))
        normals = np.empty((m, _BLOCK, 4))
        u_acc = np.empty((m, _BLOCK))
        for j, ev in enumerate(pending):
            r = rngs[ev]
            u_comp[j] = r.random(_BLOCK)
            normals[j] = r.standard_normal((_BLOCK, 4))
            u_acc[j] = r.random(_BLOCK)
        done = np.zeros(m, dtype=bool)
        for b in range(_BLOCK):
            open_idx = np.flatnonzero(~done)
            if open_idx.size == 0:
                break
            z = mix.propose(u_comp[open_idx, b], normals[open_idx, b])
            ok = np.log(u_acc[open_idx, b]) < mix.log_accept(z)
            hit = open_idx[ok]
            out[pending[hit]] = z[ok]
            done[hit] = True
        pending = pending[~done]


def sample_positions(s: TwoParticleState, n: int, seed: int,
                     first_event: int = 0) -> np.ndarray:
    """n i.i.d. draws from |Psi(t0)|^2, shape (n, 4) as (x1, y1, x2, y2)."""
    if s.is_collapsed:
        raise ValueError("sampling requires the uncollapsed initial state")
    out = np.empty((n, 4), dtype=float)
    if n == 0:
        return out
    mix = _position_mixture(s)
    rngs = [event_rng(seed, first_event + i) for i in range(n)]
    _rejection_sample(mix, rngs, out)
    return out


def sample_phase_points(s: TwoParticleState, n: int, seed: int,
                        first_event: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Positions from |Psi|^2 and momenta from |Psi~|^2, paired per event.

    Each event's substream is consumed positions first, then momenta, so the
    pair is independent by construction.
    """
    if s.is_collapsed:
        raise ValueError("sampling requires the uncollapsed initial state")
    pos = np.empty((n, 4), dtype=float)
    mom = np.empty((n, 4), dtype=float)
    if n == 0:
        return pos, mom
    rngs = [event_rng(seed, first_event + i) for i in range(n)]
    _rejection_sample(_position_mixture(s), rngs, pos)
    _rejection_sample(_momentum_mixture(s), rngs, mom)
    return pos, mom


def config_points(arr: np.ndarray) -> list[ConfigPoint]:
    return [ConfigPoint((row[0], row[1]), (row[2], row[3])) for row in arr]
