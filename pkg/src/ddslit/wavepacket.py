"""Closed-form 1D Gaussian wave packets under a uniform force.

A packet ``G_t(x; sigma, l, u, a)`` starts at t=0 as

    G_0(x) = (2 pi sigma^2)^(-1/4) exp(-(x-l)^2 / (4 sigma^2) + i m u (x-l) / hbar)

and evolves exactly under ``i hbar dG/dt = -(hbar^2/2m) G'' - m a x G``
(linear potential, classical acceleration ``+a``; pass ``a = -g`` for an axis
with gravity pulling toward negative coordinates).  The closed form is

    G_t(x) = (2 pi s_t^2)^(-1/4) exp(i m a l t / hbar)
             * exp(-(x - x_c)^2 / (4 sigma s_t))
             * exp(i (m/hbar) [(u + a t)(x - l - u t / 2) - a^2 t^3 / 6])

with ``s_t = sigma (1 + i t hbar / (2 m sigma^2))`` and the classical center
``x_c = l + u t + a t^2 / 2``.  The leading time-dependent phase
``exp(i m a l t / hbar)`` is required for the expression to solve the wave
equation exactly; dropping it (or flipping the sign of ``a t`` in the last
phase) leaves a nonzero residual.  All quantities are in internal units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import HBAR_INT


@dataclass(frozen=True)
class GaussianParams:
    """One 1D packet: width, center, velocity, acceleration, mass."""

    sigma: float
    l: float
    u: float
    a: float
    m: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.m <= 0:
            raise ValueError("m must be positive")


def s_t(p: GaussianParams, t, hbar: float = HBAR_INT):
    """Complex width parameter sigma * (1 + i t hbar / (2 m sigma^2))."""
    return p.sigma * (1.0 + 1j * t * hbar / (2.0 * p.m * p.sigma**2))


def center(p: GaussianParams, t):
    """Classical packet center l + u t + a t^2 / 2."""
    return p.l + p.u * t + 0.5 * p.a * t * t


def gaussian_log(p: GaussianParams, x, t, hbar: float = HBAR_INT):
    """Complex log of G_t(x); broadcasting over x and t.

    Safe for amplitudes far below float underflow; exponentiate only after
    combining terms.
    """
    st = s_t(p, t, hbar)
    xc = center(p, t)
    # (2 pi s_t^2)^(-1/4) as (2 pi)^(-1/4) * s_t^(-1/2); Re(s_t) > 0 keeps the
    # principal square root on one branch.
    log_pref = -0.25 * np.log(2.0 * np.pi) - 0.5 * np.log(st + 0j)
    phase = (p.m / hbar) * (
        (p.u + p.a * t) * (x - p.l - 0.5 * p.u * t) - p.a**2 * t**3 / 6.0
    )
    extra = (p.m * p.a * p.l / hbar) * t
    return log_pref - (x - xc) ** 2 / (4.0 * p.sigma * st) + 1j * (phase + extra)


def gaussian_dlog(p: GaussianParams, x, t, hbar: float = HBAR_INT):
    """d/dx of the complex log of G_t(x)."""
    st = s_t(p, t, hbar)
    return -(x - center(p, t)) / (2.0 * p.sigma * st) + 1j * (p.m / hbar) * (
        p.u + p.a * t
    )


def gaussian_t(p: GaussianParams, x, t, hbar: float = HBAR_INT):
    """Complex amplitude G_t(x).  May underflow for |x - x_c| >> spread."""
    return np.exp(gaussian_log(p, x, t, hbar))


def overlap(p1: GaussianParams, p2: GaussianParams, hbar: float = HBAR_INT) -> complex:
    """Exact inner product <G_{p1}, G_{p2}> at t = 0.

    Requires equal widths and masses (the only case the state machinery
    needs).  Because both packets also share the axis acceleration, the same
    value holds at every time.
    """
    if p1.sigma != p2.sigma or p1.m != p2.m:
        raise ValueError("overlap requires matching sigma and m")
    slope1 = p1.m * p1.u / hbar
    slope2 = p2.m * p2.u / hbar
    phi1 = -p1.m * p1.u * p1.l / hbar
    phi2 = -p2.m * p2.u * p2.l / hbar
    return _overlap1d(p1.sigma, p1.l, slope1, phi1, p2.l, slope2, phi2)


def _overlap1d(sigma, c1, s1, f1, c2, s2, f2) -> complex:
    """<G1, G2> for G_j ~ (2 pi sigma^2)^(-1/4) exp(-(z-c_j)^2/(4 sigma^2) + i(s_j z + f_j))."""
    k = s2 - s1
    return complex(
        np.exp(
            -((c1 - c2) ** 2) / (8.0 * sigma**2)
            - 0.5 * k**2 * sigma**2
            + 1j * (k * 0.5 * (c1 + c2) + (f2 - f1))
        )
    )


@dataclass(frozen=True)
class MomentumFactor:
    """Fourier transform of a t=0 packet: Gaussian in p with a linear phase.

    G~(p) = (2 pi sigma_p^2)^(-1/4) exp(-(p - p0)^2/(4 sigma_p^2) - i p l / hbar)
    with sigma_p = hbar / (2 sigma) and p0 = m u.
    """

    sigma_p: float
    p0: float
    l: float


def momentum_factor(p: GaussianParams, hbar: float = HBAR_INT) -> MomentumFactor:
    return MomentumFactor(sigma_p=hbar / (2.0 * p.sigma), p0=p.m * p.u, l=p.l)


def momentum_log(f: MomentumFactor, p, hbar: float = HBAR_INT):
    """Complex log of the momentum-space packet."""
    log_pref = -0.25 * np.log(2.0 * np.pi * f.sigma_p**2)
    return log_pref - (p - f.p0) ** 2 / (4.0 * f.sigma_p**2) - 1j * p * f.l / hbar


def momentum_overlap(f1: MomentumFactor, f2: MomentumFactor, hbar: float = HBAR_INT) -> complex:
    if f1.sigma_p != f2.sigma_p:
        raise ValueError("momentum overlap requires matching widths")
    return _overlap1d(f1.sigma_p, f1.p0, -f1.l / hbar, 0.0, f2.p0, -f2.l / hbar, 0.0)
