"""Log-domain special functions underlying every series evaluation.

Probabilities handled here span hundreds of orders of magnitude (factorials
of photon numbers up to 10^6 against squeezing factors z^i), so terms are
constructed as natural logarithms and only order-one quantities are ever
exponentiated.  LOG_ZERO marks an exact zero (a term killed by parity or an
out-of-range binomial), not a small number; helpers treat it as absorbing.
"""

from __future__ import annotations

import math
from typing import Iterable

LOG_ZERO = float("-inf")

_EULER_GAMMA = 0.5772156649015329

# Bernoulli-number coefficients B_2k/(2k) of the digamma asymptotic series.
_DIGAMMA_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
)

# B_2k coefficients of the trigamma asymptotic series.
_TRIGAMMA_COEFFS = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
)


def log_factorial(n: int) -> float:
    """ln(n!) for integer n >= 0, accurate to ~1e-15 relative up to n = 10^6."""
    if n < 0:
        raise ValueError(f"log_factorial of negative {n}")
    return math.lgamma(n + 1.0)


def log_binomial(n: int, k: int) -> float:
    """ln C(n,k); LOG_ZERO outside 0 <= k <= n."""
    if k < 0 or k > n:
        return LOG_ZERO
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k)


def digamma(x: float) -> float:
    """Digamma psi_0(x) for x > 0: recurrence shift to x >= 10, then the
    Bernoulli asymptotic series (error below 1e-15 at the shift point)."""
    if x <= 0.0:
        raise ValueError(f"digamma requires x > 0, got {x}")
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for c in _DIGAMMA_COEFFS:
        series += c * power
        power *= inv2
    return acc + math.log(x) - 0.5 / x - series


def trigamma(x: float) -> float:
    """Trigamma psi_1(x) for x > 0, same shift-plus-series scheme."""
    if x <= 0.0:
        raise ValueError(f"trigamma requires x > 0, got {x}")
    acc = 0.0
    while x < 10.0:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    power = inv2 * inv
    for c in _TRIGAMMA_COEFFS:
        series += c * power
        power *= inv2
    return acc + inv + 0.5 * inv2 + series


def inverse_digamma(y: float) -> float:
    """Solve digamma(x) = y for x > 0.

    Initial guess per Fackler (exp(y)+1/2 for y >= -2.22, else -1/(y+gamma)),
    sharpened by five Newton steps; the guess is already good to ~1e-2 so the
    iteration converges far past double precision.
    """
    if y >= 700.0:
        # digamma(x) ~ ln x: the preimage overflows float64.
        return math.inf
    if y >= -2.22:
        x = math.exp(y) + 0.5
    else:
        x = -1.0 / (y + _EULER_GAMMA)
    for _ in range(5):
        x -= (digamma(x) - y) / trigamma(x)
    return x


def accumulate_ascending(log_terms: Iterable[float]) -> float:
    """Log of the sum of exp(log_terms), shifted by the peak so nothing
    overflows; exact zeros (LOG_ZERO entries) contribute nothing.

    math.fsum makes the reduction exactly rounded, so the result does not
    depend on the order of the input despite the function's name (kept from
    the ascending-phase summation it implements).
    """
    terms = list(log_terms)
    if not terms:
        return LOG_ZERO
    peak = max(terms)
    if peak == LOG_ZERO:
        return LOG_ZERO
    if math.isnan(peak):
        raise ValueError("NaN log-term in accumulate_ascending")
    total = math.fsum(math.exp(t - peak) for t in terms)
    return peak + math.log(total)
