"""Preselected macro-state distributions and their normalization.

Theoretical preselection keeps Fock components with k + l >= sigma photons;
beam-splitter preselection demands the *reflected* occupations satisfy
n + m >= sigma'.  Both normalizations reduce to the same threshold sum
S = sum_{n+m>=s} a(n) b(m) over product tables, evaluated either as a tail
double sum or as a complement of the finite low-order block; the complement
bounds stop at s-1 (subtracting pairs with n+m <= s would drop the n+m = s
shell itself).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegeneratePreselectionError, TableRangeError
from .series import PrecisionConfig, SeriesTables, precompute_tables, theory_tables
from .specfun import LOG_ZERO
from .terms import (
    BeamSplitterParams,
    GainParams,
    log_f_i,
    log_f_j,
    log_sq_gamma_0j,
    log_sq_gamma_i0,
)

THEORY_STRATEGY_SWITCH = 5000
SPLITTER_STRATEGY_SWITCH = 500

_DEAD_SCAN = 8


def _compensated_prefix(values: np.ndarray) -> list:
    """Running prefix sums with Neumaier compensation: entry t carries
    values[0] + ... + values[t] to within one rounding, independent of
    length (a plain running sum would lose ~len*eps and that error lands
    directly in the complement strategy's excluded block)."""
    out = []
    s = 0.0
    c = 0.0
    for v in values:
        v = float(v)
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out.append(s + c)
    return out


@dataclass(frozen=True)
class Theoretical:
    """Projective filter on total transmitted photons: k + l >= sigma."""

    sigma: int

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class BeamSplitter:
    """Weak filter on reflected occupations: n + m >= sigma_prime."""

    sigma_prime: int
    bs: BeamSplitterParams

    def __post_init__(self) -> None:
        if self.sigma_prime < 0:
            raise ValueError(f"sigma_prime must be >= 0, got {self.sigma_prime}")


Preselection = Union[Theoretical, BeamSplitter]


@dataclass(frozen=True)
class ModelConfig:
    """Everything a tile worker needs: gain, preselection, precision and
    the squared normalization (computed once by norm_* or injected from
    the command line, mirroring the norm/tile program split)."""

    gain: GainParams
    presel: Preselection
    prec: PrecisionConfig
    norm_sq: float

    def __post_init__(self) -> None:
        if not self.norm_sq > 0.0:
            raise ValueError(f"norm_sq must be positive, got {self.norm_sq}")

    @property
    def log_norm_sq(self) -> float:
        return math.log(self.norm_sq)


def theory_shell_threshold(sigma: int) -> int:
    """Photon gate k + l >= sigma on k = 2i+1, l = 2j is the shell gate
    i + j >= ceil((sigma-1)/2) = sigma//2 (integer indices make sigma = 2r
    and 2r+1 equivalent: the parity plateau)."""
    return sigma // 2


def s_sum(tables: SeriesTables, sigma: int, strategy: str = "auto",
          switch: int = SPLITTER_STRATEGY_SWITCH) -> float:
    """S = sum_{n+m >= sigma} a[n] b[m] over the precomputed tables.

    The tail strategy sums diagonals t = n+m from sigma up (no
    cancellation, O(N*M)); the complement subtracts the n+m <= sigma-1
    block from the table total (O(sigma^2), exact only while S is not
    many orders below 1).  auto picks complement up to `switch`.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma > tables.max_needed:
        raise TableRangeError(
            f"tables built for thresholds <= {tables.max_needed}, asked for {sigma}")
    if strategy == "auto":
        strategy = "complement" if sigma <= switch else "tail"
    a, b = tables.a, tables.b
    if strategy == "tail":
        diag = np.convolve(a, b)
        if sigma >= len(diag):
            return 0.0
        return math.fsum(diag[sigma:])
    if strategy != "complement":
        raise ValueError(f"unknown strategy {strategy!r}")
    total = math.fsum(a) * math.fsum(b)
    if sigma == 0:
        return total
    prefix_b = _compensated_prefix(b)
    m_last = len(b) - 1
    excluded = math.fsum(
        a[n] * prefix_b[min(sigma - 1 - n, m_last)]
        for n in range(min(sigma - 1, len(a) - 1) + 1))
    return max(total - excluded, 0.0)


def norm_th(gain: GainParams, sigma: int,
            prec: PrecisionConfig = PrecisionConfig(),
            strategy: str = "auto",
            switch: int = THEORY_STRATEGY_SWITCH) -> float:
    """|N_Th|^2 = 1 / sum_{i+j >= sigma//2} gamma_ij^2."""
    shell = theory_shell_threshold(sigma)
    tables = theory_tables(shell, gain, prec=prec)
    inv = s_sum(tables, shell, strategy, switch)
    if inv <= 0.0:
        raise DegeneratePreselectionError(
            f"theoretical preselection sigma={sigma} leaves no mass at eps={prec.eps_rel}")
    return 1.0 / inv


def norm_bs(gain: GainParams, bs: BeamSplitterParams, sigma_prime: int,
            prec: PrecisionConfig = PrecisionConfig(),
            strategy: str = "auto",
            switch: int = SPLITTER_STRATEGY_SWITCH) -> float:
    """|N_BS|^2 = 1 / sum_{n+m >= sigma'} A(n) B(m)."""
    tables = precompute_tables(sigma_prime, gain, bs, prec=prec)
    inv = s_sum(tables, sigma_prime, strategy, switch)
    if inv <= 0.0:
        raise DegeneratePreselectionError(
            f"beam-splitter preselection sigma'={sigma_prime} at R={bs.reflectivity} "
            f"leaves no mass at eps={prec.eps_rel}")
    return 1.0 / inv


def build_model(gain: GainParams, presel: Preselection,
                prec: PrecisionConfig = PrecisionConfig(),
                strategy: str = "auto") -> ModelConfig:
    """ModelConfig with the normalization computed here."""
    if isinstance(presel, Theoretical):
        nsq = norm_th(gain, presel.sigma, prec, strategy)
    else:
        nsq = norm_bs(gain, presel.bs, presel.sigma_prime, prec, strategy)
    return ModelConfig(gain=gain, presel=presel, prec=prec, norm_sq=nsq)


def log_p_th(k: int, l: int, model: ModelConfig) -> float:
    """log p of the theoretically preselected state at (k, l); LOG_ZERO
    off the odd/even support or below the photon gate."""
    presel = model.presel
    if not isinstance(presel, Theoretical):
        raise TypeError("log_p_th needs a Theoretical preselection")
    if k < 0 or l < 0 or k % 2 == 0 or l % 2 == 1 or k + l < presel.sigma:
        return LOG_ZERO
    gain = model.gain
    return (model.log_norm_sq + 2.0 * gain.log_c2
            + log_sq_gamma_i0((k - 1) // 2, gain)
            + log_sq_gamma_0j(l // 2, gain))


def p_th(k: int, l: int, model: ModelConfig) -> float:
    lp = log_p_th(k, l, model)
    return math.exp(lp) if lp != LOG_ZERO else 0.0


def reflected_log_vector(photons: int, even_mode: bool, gain: GainParams,
                         bs: BeamSplitterParams, sigma_prime: int,
                         prec: PrecisionConfig) -> np.ndarray:
    """Dense log-term vector over the reflected count of one mode, for a
    fixed transmitted count.

    For the odd mode (even_mode=False, transmitted k): entry n' holds
    log f_i((k+n'-1)/2, n') at parity-valid n' (k+n' odd), LOG_ZERO
    elsewhere.  For the even mode (transmitted l): entry m holds
    log f_j((l+m)/2, m) at l+m even.  The scan cannot stop before the
    preselection boundary sigma' because the gated product sum may live
    entirely beyond it; past max(peak, sigma') it stops at eps_rel
    relative to the maximum seen since the boundary.
    """
    if photons < 0:
        raise ValueError(f"photon count must be >= 0, got {photons}")
    start = photons % 2 if even_mode else (photons + 1) % 2
    live: list[tuple[int, float]] = []
    ref = LOG_ZERO
    dead = 0
    idx = start
    steps = 0
    log_eps = prec.log_eps
    while True:
        if even_mode:
            t = log_f_j(idx, (photons + idx) // 2, gain, bs)
        else:
            t = log_f_i(idx, (photons + idx - 1) // 2, gain, bs)
        if t == LOG_ZERO:
            dead += 1
            if dead > _DEAD_SCAN:
                break
        else:
            dead = 0
            live.append((idx, t))
            if idx >= sigma_prime:
                # ref is the maximum seen at or past the boundary; stopping
                # against the global peak could truncate the gated tail.
                if t >= ref:
                    ref = t
                elif t - ref <= log_eps:
                    break
        idx += 2
        steps += 1
        if steps > prec.max_terms:
            raise DegeneratePreselectionError(
                f"reflected-count scan for {photons} transmitted photons did not converge")
    if not live:
        return np.empty(0, dtype=np.float64)
    vec = np.full(live[-1][0] + 1, LOG_ZERO)
    for i, t in live:
        vec[i] = t
    return vec


def gated_product_sum(a_logs: np.ndarray, b_logs: np.ndarray, sigma_prime: int) -> float:
    """log of sum_{n'+m >= sigma'} exp(a_logs[n']) exp(b_logs[m]),
    evaluated with per-vector peak shifts so nothing underflows."""
    if len(a_logs) == 0 or len(b_logs) == 0:
        return LOG_ZERO
    amax = float(np.max(a_logs))
    bmax = float(np.max(b_logs))
    if amax == LOG_ZERO or bmax == LOG_ZERO:
        return LOG_ZERO
    a = np.exp(a_logs - amax)
    b = np.exp(b_logs - bmax)
    # suffix[t] = sum_{m >= t} b[m], suffix[len(b)] = 0
    suffix = np.zeros(len(b) + 1)
    suffix[:-1] = np.cumsum(b[::-1])[::-1]
    m_floor = np.clip(sigma_prime - np.arange(len(a)), 0, len(b))
    total = float(np.dot(a, suffix[m_floor]))
    if total <= 0.0:
        return LOG_ZERO
    return amax + bmax + math.log(total)


def log_p_bs(k: int, l: int, model: ModelConfig) -> float:
    """log p of the beam-splitter preselected state at (k, l)."""
    presel = model.presel
    if not isinstance(presel, BeamSplitter):
        raise TypeError("log_p_bs needs a BeamSplitter preselection")
    if k < 0 or l < 0:
        return LOG_ZERO
    a = reflected_log_vector(k, False, model.gain, presel.bs, presel.sigma_prime, model.prec)
    b = reflected_log_vector(l, True, model.gain, presel.bs, presel.sigma_prime, model.prec)
    s = gated_product_sum(a, b, presel.sigma_prime)
    return model.log_norm_sq + s if s != LOG_ZERO else LOG_ZERO


def p_bs(k: int, l: int, model: ModelConfig) -> float:
    lp = log_p_bs(k, l, model)
    return math.exp(lp) if lp != LOG_ZERO else 0.0


def log_p(k: int, l: int, model: ModelConfig) -> float:
    if isinstance(model.presel, Theoretical):
        return log_p_th(k, l, model)
    return log_p_bs(k, l, model)


def moment_sum(model: ModelConfig, p: int, q: int) -> float:
    """E[k^p l^q] under the preselected distribution, from moment-weighted
    tables and the same threshold sum as the normalization — the (k, l)
    grid is never iterated."""
    if p < 0 or q < 0:
        raise ValueError("moment exponents must be >= 0")
    presel = model.presel
    if isinstance(presel, Theoretical):
        shell = theory_shell_threshold(presel.sigma)
        tables = theory_tables(shell, model.gain, p, q, model.prec)
        return model.norm_sq * s_sum(tables, shell, switch=THEORY_STRATEGY_SWITCH)
    tables = precompute_tables(presel.sigma_prime, model.gain, presel.bs, p, q, model.prec)
    return model.norm_sq * s_sum(tables, presel.sigma_prime, switch=SPLITTER_STRATEGY_SWITCH)
