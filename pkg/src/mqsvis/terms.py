"""Hypergeometric term construction for the cloner state and its
beam-splitter image.

The amplified singlet has amplitudes gamma_ij = C^-2 (T/2)^(i+j)
sqrt((2i+1)!(2j)!)/(i! j!) with C = cosh g, T = tanh g, so every squared
amplitude factorizes as gamma_ij^2 = C^4 gamma_i0^2 gamma_0j^2.  A lossy
channel (beam splitter, reflectivity R) turns each 2i+1 / 2j photon
component into a binomial over reflected counts; the products
f_i(n,i) = C^2 gamma_i0^2 binom(2i+1,n) R^n T_bs^(2i+1-n) (and f_j alike)
are the terms every series in this package sums.  All functions return
natural logs; LOG_ZERO is an exact structural zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .specfun import LOG_ZERO, log_binomial, log_factorial

_LOG4 = math.log(4.0)


@dataclass(frozen=True)
class GainParams:
    """Amplifier gain in the parametrization used everywhere downstream.

    mean is m = sinh^2 g (the squeezed-vacuum mean photon number), c2 is
    cosh^2 g = 1 + m, z = tanh^2 g = m/(1+m).  Logs are precomputed once;
    log_z is LOG_ZERO at g = 0.
    """

    g: float
    mean: float
    c2: float
    z: float
    log_c2: float
    log_z: float

    @property
    def log_z4(self) -> float:
        """log(z/4), the per-index decay of the squared amplitudes."""
        return self.log_z - _LOG4


def gain_from_mean(mean: float) -> GainParams:
    """GainParams from the mean photon number m = sinh^2 g."""
    if mean < 0.0 or not math.isfinite(mean):
        raise ValueError(f"mean photon number must be finite and >= 0, got {mean}")
    g = math.asinh(math.sqrt(mean))
    c2 = 1.0 + mean
    z = mean / (1.0 + mean)
    log_c2 = math.log1p(mean)
    log_z = math.log(mean) - log_c2 if mean > 0.0 else LOG_ZERO
    return GainParams(g=g, mean=mean, c2=c2, z=z, log_c2=log_c2, log_z=log_z)


def gain_from_g(g: float) -> GainParams:
    """GainParams from the dimensionless gain g itself."""
    if g < 0.0 or not math.isfinite(g):
        raise ValueError(f"gain must be finite and >= 0, got {g}")
    return gain_from_mean(math.sinh(g) ** 2)


@dataclass(frozen=True)
class BeamSplitterParams:
    """Loss channel: reflectivity R in [0, 1], transmittivity T = 1 - R."""

    reflectivity: float
    log_r: float
    log_t: float


def splitter_from_reflectivity(r: float) -> BeamSplitterParams:
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"reflectivity must lie in [0, 1], got {r}")
    log_r = math.log(r) if r > 0.0 else LOG_ZERO
    log_t = math.log1p(-r) if r < 1.0 else LOG_ZERO
    return BeamSplitterParams(reflectivity=r, log_r=log_r, log_t=log_t)


def log_sq_gamma_i0(i: int, gain: GainParams) -> float:
    """log gamma_i0^2 = log[ C^-4 (z/4)^i (2i+1)!/i!^2 ]."""
    if i < 0:
        raise ValueError(f"index i must be >= 0, got {i}")
    decay = 0.0 if i == 0 else i * gain.log_z4
    return -2.0 * gain.log_c2 + decay + log_factorial(2 * i + 1) - 2.0 * log_factorial(i)


def log_sq_gamma_0j(j: int, gain: GainParams) -> float:
    """log gamma_0j^2 = log[ C^-4 (z/4)^j (2j)!/j!^2 ]."""
    if j < 0:
        raise ValueError(f"index j must be >= 0, got {j}")
    decay = 0.0 if j == 0 else j * gain.log_z4
    return -2.0 * gain.log_c2 + decay + log_factorial(2 * j) - 2.0 * log_factorial(j)


def log_sq_gamma(i: int, j: int, gain: GainParams) -> float:
    """log gamma_ij^2 via the exact factorization gamma_ij^2 = C^4 gamma_i0^2 gamma_0j^2."""
    return 2.0 * gain.log_c2 + log_sq_gamma_i0(i, gain) + log_sq_gamma_0j(j, gain)


def log_bs_coeff_sq(k: int, n: int, bs: BeamSplitterParams) -> float:
    """log of the binomial loss weight binom(n,k) R^k T^(n-k).

    This is |c_k^(n)|^2 of the beam-splitter transformation of an n-photon
    Fock state: the probability that k of n photons reflect.
    """
    if k < 0 or k > n:
        return LOG_ZERO
    r_part = 0.0 if k == 0 else k * bs.log_r
    t_part = 0.0 if n == k else (n - k) * bs.log_t
    if r_part == LOG_ZERO or t_part == LOG_ZERO:
        return LOG_ZERO
    return log_binomial(n, k) + r_part + t_part


def log_f_i(n: int, i: int, gain: GainParams, bs: BeamSplitterParams,
            weight_exponent: int = 0) -> float:
    """log f_i(n,i) = log[ C^2 gamma_i0^2 binom(2i+1,n) R^n T^(2i+1-n) ],
    optionally weighted by (2i+1-n)^p for moment series."""
    if n < 0 or n > 2 * i + 1:
        return LOG_ZERO
    base = gain.log_c2 + log_sq_gamma_i0(i, gain) + log_bs_coeff_sq(n, 2 * i + 1, bs)
    if weight_exponent:
        transmitted = 2 * i + 1 - n
        if transmitted == 0:
            return LOG_ZERO
        base += weight_exponent * math.log(transmitted)
    return base


def log_f_j(m_occ: int, j: int, gain: GainParams, bs: BeamSplitterParams,
            weight_exponent: int = 0) -> float:
    """log f_j(m,j) = log[ C^2 gamma_0j^2 binom(2j,m) R^m T^(2j-m) ],
    optionally weighted by (2j-m)^q."""
    if m_occ < 0 or m_occ > 2 * j:
        return LOG_ZERO
    base = gain.log_c2 + log_sq_gamma_0j(j, gain) + log_bs_coeff_sq(m_occ, 2 * j, bs)
    if weight_exponent:
        transmitted = 2 * j - m_occ
        if transmitted == 0:
            return LOG_ZERO
        base += weight_exponent * math.log(transmitted)
    return base
