"""Arbitrary-precision reference values (mpmath) for testing the engine.

Everything here is deliberately written the slow, literal way: plain mpf
products of factorials, nested gated sums, no log-domain tricks, so that
agreement with the fast engine is meaningful.  Every truncated sum
certifies its own tail: if the last term is not vanishingly small
relative to the accumulated value, the function refuses rather than
returning an uncertified number.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp

from .errors import ComputationError


class OracleUncertifiedError(ComputationError):
    """A reference sum could not certify its truncation error."""


@dataclass(frozen=True)
class OracleConfig:
    working_digits: int = 60
    max_terms: int = 200_000

    def __post_init__(self) -> None:
        if self.working_digits < 15:
            raise ValueError("working_digits must be >= 15")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_ORACLE = OracleConfig()


@dataclass(frozen=True)
class OracleGain:
    """Exact-parameter squeezing state: C2 = cosh^2 g, z = tanh^2 g.

    Constructed under the oracle's working precision; the stored mpf
    values keep that precision wherever they are used later.
    """

    c2: mp.mpf
    z: mp.mpf

    @classmethod
    def from_mean(cls, m, cfg: OracleConfig = DEFAULT_ORACLE) -> "OracleGain":
        with mp.workdps(cfg.working_digits):
            m = mp.mpf(m)
            return cls(c2=1 + m, z=m / (1 + m))

    @classmethod
    def from_g(cls, g, cfg: OracleConfig = DEFAULT_ORACLE) -> "OracleGain":
        with mp.workdps(cfg.working_digits):
            g = mp.mpf(g)
            return cls(c2=mp.cosh(g) ** 2, z=mp.tanh(g) ** 2)

    @property
    def cosh_g(self) -> mp.mpf:
        return mp.sqrt(self.c2)


@lru_cache(maxsize=None)
def gamma_sq_i0(i: int, gain: OracleGain,
                cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    with mp.workdps(cfg.working_digits):
        return (gain.c2 ** -2 * (gain.z / 4) ** i
                * mp.factorial(2 * i + 1) / mp.factorial(i) ** 2)


@lru_cache(maxsize=None)
def gamma_sq_0j(j: int, gain: OracleGain,
                cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    with mp.workdps(cfg.working_digits):
        return (gain.c2 ** -2 * (gain.z / 4) ** j
                * mp.factorial(2 * j) / mp.factorial(j) ** 2)


def gamma_sq(i: int, j: int, gain: OracleGain,
             cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    with mp.workdps(cfg.working_digits):
        return (gain.c2 ** 2 * gamma_sq_i0(i, gain, cfg)
                * gamma_sq_0j(j, gain, cfg))


def f_i(n: int, i: int, gain: OracleGain, r, t,
        cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    if n < 0 or n > 2 * i + 1:
        return mp.mpf(0)
    with mp.workdps(cfg.working_digits):
        return (gain.c2 * gamma_sq_i0(i, gain, cfg) * mp.binomial(2 * i + 1, n)
                * mp.mpf(r) ** n * mp.mpf(t) ** (2 * i + 1 - n))


def f_j(m_occ: int, j: int, gain: OracleGain, r, t,
        cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    if m_occ < 0 or m_occ > 2 * j:
        return mp.mpf(0)
    with mp.workdps(cfg.working_digits):
        return (gain.c2 * gamma_sq_0j(j, gain, cfg) * mp.binomial(2 * j, m_occ)
                * mp.mpf(r) ** m_occ * mp.mpf(t) ** (2 * j - m_occ))


def _dynamic_sum(term_at, start: int, cfg: OracleConfig, what: str) -> mp.mpf:
    """Sum term_at(start), term_at(start+1), ... of a nonnegative series
    until the terms are past their peak and negligible against the total.

    Raises OracleUncertifiedError when cfg.max_terms indices did not
    suffice; a run of eight zero terms is accepted as an exhausted tail
    (the series here have no interior zeros otherwise).
    """
    with mp.workdps(cfg.working_digits):
        stop = mp.mpf(10) ** (-(cfg.working_digits + 5))
        total = mp.mpf(0)
        prev = mp.mpf(0)
        zero_run = 0
        idx = start
        for count in range(cfg.max_terms):
            term = term_at(idx)
            if term < 0:
                raise OracleUncertifiedError(
                    f"{what}: negative term {mp.nstr(term, 5)} at index {idx}")
            total += term
            if term == 0:
                zero_run += 1
                if zero_run >= 8:
                    return total
            else:
                zero_run = 0
                if count and term <= prev and term < total * stop:
                    return total
            prev = term
            idx += 1
        raise OracleUncertifiedError(
            f"{what}: tail not negligible after {cfg.max_terms} terms "
            f"(last {mp.nstr(prev, 5)} against {mp.nstr(total, 5)})")


@lru_cache(maxsize=None)
def sum_A(n: int, gain: OracleGain, r, t, weight: int = 0,
          cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    """A(n) = sum_i f_i(n, i), optionally weighted by (2i+1-n)^weight."""
    def term(i: int) -> mp.mpf:
        val = f_i(n, i, gain, r, t, cfg)
        if weight:
            val *= mp.mpf(2 * i + 1 - n) ** weight
        return val

    return _dynamic_sum(term, n // 2, cfg, f"sum_A({n})")


@lru_cache(maxsize=None)
def sum_B(m_occ: int, gain: OracleGain, r, t, weight: int = 0,
          cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    def term(j: int) -> mp.mpf:
        val = f_j(m_occ, j, gain, r, t, cfg)
        if weight:
            val *= mp.mpf(2 * j - m_occ) ** weight
        return val

    return _dynamic_sum(term, (m_occ + 1) // 2, cfg, f"sum_B({m_occ})")


@lru_cache(maxsize=None)
def sum_G(n: int, gain: OracleGain, weight: int = 0,
          cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    """G(n) = sum_{i >= n} C^2 gamma_sq_i0(i), with optional (2i+1)^weight."""
    def term(i: int) -> mp.mpf:
        val = gain.c2 * gamma_sq_i0(i, gain, cfg)
        if weight:
            val *= mp.mpf(2 * i + 1) ** weight
        return val

    return _dynamic_sum(term, n, cfg, f"sum_G({n})")


# ---------------------------------------------------------------------------
# closed-form cross-checks (Gaussian hypergeometric)
# ---------------------------------------------------------------------------


def _x_coeff(n: int, gain: OracleGain) -> mp.mpf:
    return (mp.factorial(2 * n + 1) / gain.c2 / mp.factorial(n) ** 2
            * (gain.z / 4) ** n)


def closed_A(n: int, gain: OracleGain, r, t,
             cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    """Hypergeometric closed form of A(n), even and odd branches."""
    with mp.workdps(cfg.working_digits):
        r = mp.mpf(r)
        t = mp.mpf(t)
        w = t * t * gain.z
        if n % 2 == 0:
            half = n // 2
            x = _x_coeff(half, gain)
            return (x * (2 * half + 1) * r ** (2 * half) * t
                    * mp.hyp2f1(half + mp.mpf(3) / 2, half + mp.mpf(3) / 2,
                                mp.mpf(3) / 2, w))
        half = (n + 1) // 2
        x = _x_coeff(half - 1, gain)
        return (x * r ** (2 * half - 1)
                * mp.hyp2f1(half + mp.mpf(1) / 2, half + mp.mpf(1) / 2,
                            mp.mpf(1) / 2, w))


def closed_B(m_occ: int, gain: OracleGain, r, t,
             cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    """Hypergeometric closed form of B(m)."""
    with mp.workdps(cfg.working_digits):
        r = mp.mpf(r)
        t = mp.mpf(t)
        w = t * t * gain.z
        if m_occ % 2 == 0:
            half = m_occ // 2
            y = (mp.factorial(2 * half) / gain.c2 / mp.factorial(half) ** 2
                 * (gain.z / 4) ** half)
            return (y * r ** (2 * half)
                    * mp.hyp2f1(half + mp.mpf(1) / 2, half + mp.mpf(1) / 2,
                                mp.mpf(1) / 2, w))
        half = (m_occ + 1) // 2
        y = (mp.factorial(2 * half) / gain.c2 / mp.factorial(half) ** 2
             * (gain.z / 4) ** half)
        return (y * 2 * half * r ** (2 * half - 1) * t
                * mp.hyp2f1(half + mp.mpf(1) / 2, half + mp.mpf(1) / 2,
                            mp.mpf(3) / 2, w))


def closed_G(n: int, gain: OracleGain,
             cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    with mp.workdps(cfg.working_digits):
        return _x_coeff(n, gain) * mp.hyp2f1(1, n + mp.mpf(3) / 2, n + 1,
                                             gain.z)


# ---------------------------------------------------------------------------
# gated distributions, literally
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def norm_inv_th(sigma: int, gain: OracleGain,
                cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    """sum of gamma_sq(i, j) over the literal photon gate
    2(i+j) + 1 >= sigma (no shell-index rewrite)."""
    def diagonal(s: int) -> mp.mpf:
        block = mp.mpf(0)
        for i in range(s + 1):
            block += gamma_sq(i, s - i, gain, cfg)
        return block

    first = 0
    while 2 * first + 1 < sigma:
        first += 1
    return _dynamic_sum(diagonal, first, cfg, f"norm_inv_th({sigma})")


def p_th(k: int, l: int, sigma: int, gain: OracleGain,
         cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    """Theoretical distribution at (k, l), literal gate k + l >= sigma."""
    if k < 0 or l < 0 or k % 2 == 0 or l % 2 == 1 or k + l < sigma:
        return mp.mpf(0)
    with mp.workdps(cfg.working_digits):
        return (gamma_sq((k - 1) // 2, l // 2, gain, cfg)
                / norm_inv_th(sigma, gain, cfg))


@lru_cache(maxsize=None)
def _chain_vectors(photons: int, even_mode: bool, sigma_prime: int,
                   gain: OracleGain, r, t, cfg: OracleConfig) -> tuple:
    """Reflected-count chain terms for one mode at a transmitted count.

    Terms are kept until they decay below the working precision relative
    to the largest term seen at or past the preselection boundary; like
    the engine scan, the walk never stops before reaching sigma_prime.
    """
    with mp.workdps(cfg.working_digits):
        out: list = []
        idx = photons % 2 if even_mode else (photons + 1) % 2
        ref = mp.mpf(0)
        eps = mp.mpf(10) ** (-(cfg.working_digits + 10))
        zero_run = 0
        for _ in range(cfg.max_terms):
            if even_mode:
                term = f_j(idx, (photons + idx) // 2, gain, r, t, cfg)
            else:
                term = f_i(idx, (photons + idx - 1) // 2, gain, r, t, cfg)
            out.append((idx, term))
            zero_run = zero_run + 1 if term == 0 else 0
            if zero_run >= 8:
                return tuple(out)
            if idx >= sigma_prime:
                if term > ref:
                    ref = term
                elif ref > 0 and term < ref * eps:
                    return tuple(out)
            idx += 2
        raise OracleUncertifiedError(
            f"chain({photons}): no decay within {cfg.max_terms} terms")


@lru_cache(maxsize=None)
def norm_inv_bs(sigma_prime: int, gain: OracleGain, r, t,
                cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    """sum_{n+m >= sigma'} A(n) B(m), summed gate-first by diagonals."""
    def diagonal(s: int) -> mp.mpf:
        block = mp.mpf(0)
        for n in range(s + 1):
            block += sum_A(n, gain, r, t, cfg=cfg) * sum_B(s - n, gain, r, t,
                                                           cfg=cfg)
        return block

    return _dynamic_sum(diagonal, sigma_prime, cfg, f"norm_inv_bs({sigma_prime})")


def p_bs_unnorm(k: int, l: int, sigma_prime: int, gain: OracleGain, r, t,
                cfg: OracleConfig = DEFAULT_ORACLE) -> mp.mpf:
    """Unnormalized beam-splitter distribution at transmitted (k, l):
    the double chain sum gated on reflected occupations.

    The gate n + m >= sigma' is applied through suffix sums of the
    even-mode chain, so every admitted product appears exactly once and
    nothing is ever subtracted.
    """
    if k < 0 or l < 0:
        return mp.mpf(0)
    with mp.workdps(cfg.working_digits):
        avec = _chain_vectors(k, False, sigma_prime, gain, r, t, cfg)
        bvec = _chain_vectors(l, True, sigma_prime, gain, r, t, cfg)
        ms = [m for m, _ in bvec]
        suffix = [mp.mpf(0)] * (len(bvec) + 1)
        for q in range(len(bvec) - 1, -1, -1):
            suffix[q] = suffix[q + 1] + bvec[q][1]
        total = mp.mpf(0)
        for n, ta in avec:
            if ta == 0:
                continue
            total += ta * suffix[bisect_left(ms, sigma_prime - n)]
        return total


def grid_indicators(edge: int, sigma: int, gain: OracleGain,
                    cfg: OracleConfig = DEFAULT_ORACLE) -> dict:
    """Grid-conditioned indicator reference on [0, edge)^2, theoretical
    preselection: total, means, variances, max."""
    with mp.workdps(cfg.working_digits):
        inv = norm_inv_th(sigma, gain, cfg)
        tot = mp.mpf(0)
        sk = mp.mpf(0)
        sl = mp.mpf(0)
        sk2 = mp.mpf(0)
        sl2 = mp.mpf(0)
        skl = mp.mpf(0)
        mx = mp.mpf(0)
        for k in range(1, edge, 2):
            for l in range(0, edge, 2):
                if k + l < sigma:
                    continue
                p = gamma_sq((k - 1) // 2, l // 2, gain, cfg) / inv
                tot += p
                sk += k * p
                sl += l * p
                sk2 += k * k * p
                sl2 += l * l * p
                skl += k * l * p
                if p > mx:
                    mx = p
        mean_k = sk / tot
        mean_l = sl / tot
        mean = mean_k + mean_l
        return {
            "total_prob": tot,
            "mean": mean,
            "mean_k": mean_k,
            "mean_l": mean_l,
            "variance": (sk2 + 2 * skl + sl2) / tot - mean ** 2,
            "variance_k": sk2 / tot - mean_k ** 2,
            "variance_l": sl2 / tot - mean_l ** 2,
            "max_p": mx,
        }


def exact_threshold_sums(a_values, b_values, sigmas) -> dict:
    """Exact S(sigma) = sum_{n+m >= sigma} a[n] b[m] for float64 tables.

    The float entries convert exactly to rationals (Fraction), so the
    returned sums carry no rounding at all: the reference both engine
    strategies must reproduce.
    """
    from fractions import Fraction

    a = [Fraction(float(v)) for v in a_values]
    b = [Fraction(float(v)) for v in b_values]
    total = sum(a) * sum(b)
    max_diag = len(a) + len(b) - 2
    out = {}
    block = Fraction(0)
    next_sigma = 0
    for sigma in sorted(sigmas):
        while next_sigma <= min(sigma - 1, max_diag):
            s = next_sigma
            diag = Fraction(0)
            for n in range(max(0, s - len(b) + 1), min(s, len(a) - 1) + 1):
                diag += a[n] * b[s - n]
            block += diag
            next_sigma += 1
        out[sigma] = total - block
    return out
