"""Dynamic-cutoff summation of the unimodal hypergeometric series A(n),
B(m), G(n), Gbar(m) and precomputation of their lookup tables.

Each series has terms that rise to a single peak and then decay
geometrically (ratio -> z or z*T^2 < 1), so summation scans from the
analytic start index, never stops while terms ascend, and stops once a
term falls below eps_rel relative to the peak.  All comparisons happen in
the log domain; the final reduction shifts by the peak and uses fsum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ComputationError
from .specfun import LOG_ZERO, digamma
from .terms import BeamSplitterParams, GainParams, log_f_i, log_f_j, log_sq_gamma_0j, log_sq_gamma_i0

# A dead scan this long past the last live term means the series support is
# exhausted (leading zeros happen only for degenerate R in {0,1} or g = 0).
_DEAD_SCAN = 8


@dataclass(frozen=True)
class PrecisionConfig:
    """eps_rel bounds the neglected tail relative to the series peak;
    max_terms is a hard safety stop for a single series scan."""

    eps_rel: float = 1e-15
    max_terms: int = 10_000_000

    def __post_init__(self) -> None:
        if not 0.0 < self.eps_rel < 1.0:
            raise ValueError(f"eps_rel must lie in (0, 1), got {self.eps_rel}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms}")

    @property
    def log_eps(self) -> float:
        return math.log(self.eps_rel)


@dataclass(frozen=True)
class SeriesResult:
    """One dynamically truncated series: value, log, and where the scan
    started, peaked and stopped (first <= peak <= last)."""

    log_value: float
    first_index: int
    peak_index: int
    last_index: int
    n_terms: int

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value != LOG_ZERO else 0.0


def sum_dynamic(log_term: Callable[[int], float], start: int,
                prec: PrecisionConfig) -> SeriesResult:
    """Two-phase scan of a unimodal term sequence from `start`.

    Phase one follows the ascent (no stopping test applies there); phase
    two stops at the first term below eps_rel * peak.  An exact-zero term
    after the peak ends the support; a run of exact zeros before any live
    term classifies the series as empty.
    """
    log_eps = prec.log_eps
    logs: list[float] = []
    peak = LOG_ZERO
    peak_index = start
    first_index = start
    i = start
    dead = 0
    while True:
        t = log_term(i)
        if t == LOG_ZERO:
            if peak == LOG_ZERO:
                dead += 1
                if dead > _DEAD_SCAN:
                    return SeriesResult(LOG_ZERO, start, start, start, 0)
                i += 1
                continue
            break
        if not logs:
            first_index = i
        logs.append(t)
        if t > peak:
            peak = t
            peak_index = i
        elif t - peak <= log_eps:
            break
        i += 1
        if len(logs) > prec.max_terms:
            raise ComputationError(
                f"series did not converge within {prec.max_terms} terms (start {start})")
    last_index = first_index + len(logs) - 1
    total = math.fsum(math.exp(t - peak) for t in logs)
    return SeriesResult(peak + math.log(total), first_index, peak_index, last_index, len(logs))


def sum_fixed(log_term: Callable[[int], float], start: int, count: int) -> SeriesResult:
    """Fixed-cutoff reference: sum exactly `count` terms from `start`."""
    logs = [log_term(start + k) for k in range(count)]
    live = [t for t in logs if t != LOG_ZERO]
    if not live:
        return SeriesResult(LOG_ZERO, start, start, start, 0)
    peak = max(live)
    peak_index = start + logs.index(peak)
    total = math.fsum(math.exp(t - peak) for t in live)
    return SeriesResult(peak + math.log(total), start, peak_index, start + count - 1, len(live))


def term_peak_index(n: int, gain: GainParams, bs: BeamSplitterParams) -> int:
    """Index of the largest f_i(n, i) term, within one index.

    Stationarity of log f_i in i reads
        psi0(2i+2-n) = ln T + [ln(z/4) + 4 psi0(2i+2) - 2 psi0(i+1)] / 2.
    log f_i is strictly concave in continuous i, so its derivative is
    monotone and the root is bisected; a fixed-point sweep instead stalls
    whenever sqrt(z)*T approaches 1 (small R at high gain).  Degenerate
    parameters (R in {0,1}, g = 0) return the scan start floor(n/2), which
    is also the lower clamp.  Optional accelerator and verification aid;
    the summation default is the sequential two-phase scan.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    floor_start = n // 2
    if bs.log_r == LOG_ZERO or bs.log_t == LOG_ZERO or gain.log_z == LOG_ZERO:
        return floor_start

    def slope(x: float) -> float:
        return (gain.log_z4 + 2.0 * bs.log_t + 4.0 * digamma(2.0 * x + 2.0)
                - 2.0 * digamma(x + 1.0) - 2.0 * digamma(2.0 * x + 2.0 - n))

    lo = float(floor_start)
    if slope(lo) <= 0.0:
        return floor_start
    hi = 2.0 * lo + 2.0
    while slope(hi) > 0.0:
        lo = hi
        hi *= 2.0
        if hi > 1e15:
            return int(hi)
    while hi - lo > 0.25:
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    a = max(math.floor(x), floor_start)
    b = a + 1
    return a if log_f_i(n, a, gain, bs) >= log_f_i(n, b, gain, bs) else b


def sum_A(n: int, gain: GainParams, bs: BeamSplitterParams,
          weight_exponent: int = 0,
          prec: PrecisionConfig = PrecisionConfig()) -> SeriesResult:
    """A(n) = sum_{i >= floor(n/2)} f_i(n, i), optionally (2i+1-n)^p-weighted."""
    return sum_dynamic(lambda i: log_f_i(n, i, gain, bs, weight_exponent), n // 2, prec)


def sum_B(m_occ: int, gain: GainParams, bs: BeamSplitterParams,
          weight_exponent: int = 0,
          prec: PrecisionConfig = PrecisionConfig()) -> SeriesResult:
    """B(m) = sum_{j >= floor((m+1)/2)} f_j(m, j), optionally (2j-m)^q-weighted."""
    return sum_dynamic(lambda j: log_f_j(m_occ, j, gain, bs, weight_exponent),
                       (m_occ + 1) // 2, prec)


def sum_G(n: int, gain: GainParams,
          prec: PrecisionConfig = PrecisionConfig()) -> SeriesResult:
    """G(n) = sum_{i >= n} C^2 gamma_i0^2 (lossless suffix mass, odd mode)."""
    return sum_dynamic(lambda i: gain.log_c2 + log_sq_gamma_i0(i, gain), n, prec)


def sum_Gbar(m_occ: int, gain: GainParams,
             prec: PrecisionConfig = PrecisionConfig()) -> SeriesResult:
    """Gbar(m) = sum_{j >= m} C^2 gamma_0j^2 (lossless suffix mass, even mode)."""
    return sum_dynamic(lambda j: gain.log_c2 + log_sq_gamma_0j(j, gain), m_occ, prec)


@dataclass(frozen=True)
class SeriesTables:
    """Contiguous A[0..N], B[0..M] in both linear and log form.

    Linear values feed final reductions; logs feed comparisons and the
    underflow-safe overlap path.  Entries beyond the arrays are below
    eps_rel relative to the significant range by construction.
    """

    a: np.ndarray
    a_log: np.ndarray
    b: np.ndarray
    b_log: np.ndarray
    max_needed: int

    @property
    def n_last(self) -> int:
        return len(self.a) - 1

    @property
    def m_last(self) -> int:
        return len(self.b) - 1


def _grow_table(entry: Callable[[int], float], max_needed: int, eps_rel: float,
                hard_limit: int) -> np.ndarray:
    """Evaluate entry(0..), keeping indices through max_needed
    unconditionally, then extend until three consecutive entries drop
    below eps_rel relative to the entry at max_needed (the preselection
    threshold the table will be cut at); the first sub-threshold entry is
    kept so the stored tail itself certifies the cutoff.  When the
    threshold entry is zero (threshold beyond the series support) the
    running maximum stands in; trailing exact zeros are trimmed."""
    values: list[float] = []
    ref = 0.0
    consecutive_small = 0
    n = 0
    while True:
        v = entry(n)
        values.append(v)
        ref = max(ref, v)
        if n >= max_needed:
            threshold = values[max_needed] if values[max_needed] > 0.0 else ref
            if (threshold > 0.0 and v < eps_rel * threshold
                    or threshold == 0.0 and n >= max(2 * max_needed, 64)):
                consecutive_small += 1
                if consecutive_small >= 3:
                    del values[-2:]
                    break
            else:
                consecutive_small = 0
        n += 1
        if n > hard_limit:
            raise ComputationError(f"table growth exceeded {hard_limit} entries")
    while len(values) > max_needed + 1 and values[-1] == 0.0:
        values.pop()
    return np.asarray(values, dtype=np.float64)


def precompute_tables(max_needed: int, gain: GainParams, bs: BeamSplitterParams,
                      p: int = 0, q: int = 0,
                      prec: PrecisionConfig = PrecisionConfig()) -> SeriesTables:
    """A- and B-tables for beam-splitter preselection sums, long enough
    that entries beyond them are negligible at eps_rel for any threshold
    up to max_needed."""
    if max_needed < 0:
        raise ValueError(f"max_needed must be >= 0, got {max_needed}")
    a = _grow_table(lambda n: sum_A(n, gain, bs, p, prec).value,
                    max_needed, prec.eps_rel, prec.max_terms)
    b = _grow_table(lambda m: sum_B(m, gain, bs, q, prec).value,
                    max_needed, prec.eps_rel, prec.max_terms)
    with np.errstate(divide="ignore"):
        return SeriesTables(a=a, a_log=np.log(a), b=b, b_log=np.log(b),
                            max_needed=max_needed)


def theory_tables(max_needed: int, gain: GainParams, p: int = 0, q: int = 0,
                  prec: PrecisionConfig = PrecisionConfig()) -> SeriesTables:
    """Single-term tables a[i] = C^2 gamma_i0^2 (2i+1)^p, b[j] = C^2
    gamma_0j^2 (2j)^q: the lossless analog feeding the same threshold sums
    (the pair (i, j) carries k = 2i+1, l = 2j photons)."""
    if max_needed < 0:
        raise ValueError(f"max_needed must be >= 0, got {max_needed}")

    def entry_a(i: int) -> float:
        v = math.exp(gain.log_c2 + log_sq_gamma_i0(i, gain))
        return v * (2 * i + 1) ** p if p else v

    def entry_b(j: int) -> float:
        v = math.exp(gain.log_c2 + log_sq_gamma_0j(j, gain))
        if not q:
            return v
        return 0.0 if j == 0 else v * (2 * j) ** q

    a = _grow_table(entry_a, max_needed, prec.eps_rel, prec.max_terms)
    b = _grow_table(entry_b, max_needed, prec.eps_rel, prec.max_terms)
    with np.errstate(divide="ignore"):
        return SeriesTables(a=a, a_log=np.log(a), b=b, b_log=np.log(b),
                            max_needed=max_needed)
