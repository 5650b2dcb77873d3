"""Grid evaluation kernels with selectable numba / numpy backends.

Every kernel exists twice: an @njit version compiled by numba and a pure
numpy version.  Which one runs is decided per call from the MQSVIS_BACKEND
environment variable ("auto", "numba", "numpy"); "auto" prefers numba when
it imported cleanly.  Both variants evaluate the same expressions in the
same order; results agree to a couple of ulp (not bitwise: compiled code
links libm's lgamma, the interpreter ships its own).  Within one backend
every kernel is deterministic.

All kernels return unnormalized log-probability grids; callers add the
log normalization afterwards.  Rows index the reflected photon count k of
the cloned mode, columns the count l of the orthogonal mode.  Negative
row or column indices (they occur in margin-extended grids used for
blurring) are valid inputs and produce empty (log-zero) entries.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


_BACKENDS = ("auto", "numba", "numpy")


def backend_name() -> str:
    """Resolve the active backend from MQSVIS_BACKEND."""
    choice = os.environ.get("MQSVIS_BACKEND", "auto").strip().lower()
    if choice not in _BACKENDS:
        raise ValueError(
            f"MQSVIS_BACKEND must be one of {_BACKENDS}, got {choice!r}"
        )
    if choice == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if choice == "numba" and not HAS_NUMBA:
        raise RuntimeError("MQSVIS_BACKEND=numba but numba is not importable")
    return choice


# ---------------------------------------------------------------------------
# log term values (scalar helpers shared by both backends)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _log_f_i_s(n, i, log_c2, log_z4, log_r, log_t):
    # weight of the cloned-mode chain term: i indexes the 2i+1 photon shell,
    # n of them reflected.
    if i < 0 or n < 0 or n > 2 * i + 1:
        return -np.inf
    acc = -log_c2
    if i > 0:
        if log_z4 == -np.inf:
            return -np.inf
        acc += i * log_z4
    acc += 2.0 * math.lgamma(2 * i + 2.0)
    acc -= 2.0 * math.lgamma(i + 1.0)
    acc -= math.lgamma(n + 1.0)
    acc -= math.lgamma(2 * i + 2.0 - n)
    if n > 0:
        if log_r == -np.inf:
            return -np.inf
        acc += n * log_r
    if 2 * i + 1 - n > 0:
        if log_t == -np.inf:
            return -np.inf
        acc += (2 * i + 1 - n) * log_t
    return acc


@njit(cache=True, nogil=True)
def _log_f_j_s(m, j, log_c2, log_z4, log_r, log_t):
    # orthogonal-mode chain term: shell of 2j photons, m reflected.
    if j < 0 or m < 0 or m > 2 * j:
        return -np.inf
    acc = -log_c2
    if j > 0:
        if log_z4 == -np.inf:
            return -np.inf
        acc += j * log_z4
    acc += 2.0 * math.lgamma(2 * j + 1.0)
    acc -= 2.0 * math.lgamma(j + 1.0)
    acc -= math.lgamma(m + 1.0)
    acc -= math.lgamma(2 * j + 1.0 - m)
    if m > 0:
        if log_r == -np.inf:
            return -np.inf
        acc += m * log_r
    if 2 * j - m > 0:
        if log_t == -np.inf:
            return -np.inf
        acc += (2 * j - m) * log_t
    return acc


# ---------------------------------------------------------------------------
# theoretical (R = 0) grids
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _th_log_grid_nb(k0, nk, l0, nl, s0, log_c2, log_z4):
    out = np.full((nk, nl), -np.inf)
    for a in range(nk):
        k = k0 + a
        if k < 0 or k % 2 == 0:
            continue
        i = (k - 1) // 2
        li = -2.0 * log_c2
        if i > 0:
            if log_z4 == -np.inf:
                continue
            li += i * log_z4
        li += math.lgamma(2 * i + 2.0) - 2.0 * math.lgamma(i + 1.0)
        for b in range(nl):
            l = l0 + b
            if l < 0 or l % 2 == 1:
                continue
            j = l // 2
            if i + j < s0:
                continue
            lj = -2.0 * log_c2
            if j > 0:
                if log_z4 == -np.inf:
                    continue
                lj += j * log_z4
            lj += math.lgamma(2 * j + 1.0) - 2.0 * math.lgamma(j + 1.0)
            out[a, b] = 2.0 * log_c2 + li + lj
    return out


def _th_log_grid_np(k0, nk, l0, nl, s0, log_c2, log_z4):
    # grouping of the additions mirrors the njit kernel; residual ulp-level
    # differences come from the two lgamma implementations, nothing else
    ks = k0 + np.arange(nk)
    ls = l0 + np.arange(nl)
    i = (ks - 1) // 2
    j = ls // 2
    with np.errstate(invalid="ignore"):
        row = (
            -2.0 * log_c2
            + np.where(i > 0, i, 0) * (log_z4 if log_z4 > -np.inf else 0.0)
        ) + (_lgamma_vec(2 * i + 2) - 2.0 * _lgamma_vec(i + 1))
        col = (
            -2.0 * log_c2
            + np.where(j > 0, j, 0) * (log_z4 if log_z4 > -np.inf else 0.0)
        ) + (_lgamma_vec(2 * j + 1) - 2.0 * _lgamma_vec(j + 1))
    if log_z4 == -np.inf:
        row = np.where(i > 0, -np.inf, row)
        col = np.where(j > 0, -np.inf, col)
    row = np.where((ks >= 0) & (ks % 2 == 1), row, -np.inf)
    col = np.where((ls >= 0) & (ls % 2 == 0), col, -np.inf)
    out = (2.0 * log_c2 + row[:, None]) + col[None, :]
    gate = i[:, None] + j[None, :] >= s0
    return np.where(gate, out, -np.inf)


def _lgamma_vec(values):
    arr = np.asarray(values, dtype=np.float64)
    out = np.empty_like(arr)
    flat_in = arr.ravel()
    flat_out = out.ravel()
    for idx in range(flat_in.size):
        v = flat_in[idx]
        flat_out[idx] = math.lgamma(v) if v > 0 else math.inf
    return out


# ---------------------------------------------------------------------------
# beam-splitter grids
# ---------------------------------------------------------------------------
#
# p(k, l) ∝ [Σ_{n'} a_k(n') b_l(m')]_{n'+m' ≥ σ'} where a_k(n') sums the
# cloned-mode chain at reflected count k with n' transmitted photons and
# b_l(m') the orthogonal chain.  Per row k the vector a_k(n') is scanned
# once (n' ≡ k+1 mod 2); per column l the vector b_l(m') likewise
# (m' ≡ l mod 2).  The gated double sum then reduces to a dot of a_k with
# suffix sums of b_l.


@njit(cache=True, nogil=True)
def _scan_fill_nb(buf, photons, even_mode, sigma_prime,
                  log_c2, log_z4, log_r, log_t, log_eps, max_terms):
    """Fill buf[t] with the log chain term at transmitted count t.

    Returns the dense length used (last live index + 1), 0 when every term
    is empty, or -1 when buf is too small for the scan.
    """
    buf[:] = -np.inf
    if even_mode:
        start = photons % 2
    else:
        start = (photons + 1) % 2
    idx = start
    dead = 0
    seen = False
    last = -1
    ref = -np.inf
    steps = 0
    while steps < max_terms:
        if idx >= buf.shape[0]:
            return -1
        if even_mode:
            t = _log_f_j_s(idx, (photons + idx) // 2,
                           log_c2, log_z4, log_r, log_t)
        else:
            t = _log_f_i_s(idx, (photons + idx - 1) // 2,
                           log_c2, log_z4, log_r, log_t)
        if t == -np.inf:
            if seen:
                dead += 1
                if dead >= 8:
                    break
            idx += 2
            steps += 1
            continue
        dead = 0
        seen = True
        buf[idx] = t
        last = idx
        if idx >= sigma_prime:
            # the stop reference only tracks terms at or past the gate
            # boundary; stopping against the global peak would truncate
            # the gated tail when sigma' sits far beyond it.
            if t >= ref:
                ref = t
            elif t - ref <= log_eps:
                break
        idx += 2
        steps += 1
    return last + 1


@njit(cache=True, nogil=True)
def _bs_log_grid_nb(k0, nk, l0, nl, sigma_prime,
                    log_c2, log_z4, log_r, log_t, log_eps, max_terms):
    out = np.full((nk, nl), -np.inf)
    cap = 4096
    # column chain vectors, their suffix sums and max shifts
    while True:
        sfx = np.zeros((nl, cap + 1))
        bmax = np.full(nl, -np.inf)
        blen = np.zeros(nl, dtype=np.int64)
        retry = False
        buf = np.empty(cap)
        for c in range(nl):
            l = l0 + c
            if l < 0:
                continue
            n = _scan_fill_nb(buf, l, True, sigma_prime,
                              log_c2, log_z4, log_r, log_t,
                              log_eps, max_terms)
            if n < 0:
                retry = True
                break
            blen[c] = n
            mx = -np.inf
            for t in range(n):
                if buf[t] > mx:
                    mx = buf[t]
            bmax[c] = mx
            if n == 0 or mx == -np.inf:
                blen[c] = 0
                continue
            acc = 0.0
            for t in range(n - 1, -1, -1):
                if buf[t] > -np.inf:
                    acc += math.exp(buf[t] - mx)
                sfx[c, t] = acc
        if retry:
            cap *= 2
            continue
        abuf = np.empty(cap)
        for r in range(nk):
            k = k0 + r
            if k < 0:
                continue
            na = _scan_fill_nb(abuf, k, False, sigma_prime,
                               log_c2, log_z4, log_r, log_t,
                               log_eps, max_terms)
            if na < 0:
                retry = True
                break
            if na == 0:
                continue
            amax = -np.inf
            for t in range(na):
                if abuf[t] > amax:
                    amax = abuf[t]
            if amax == -np.inf:
                continue
            ash = np.zeros(na)
            for t in range(na):
                if abuf[t] > -np.inf:
                    ash[t] = math.exp(abuf[t] - amax)
            for c in range(nl):
                n = blen[c]
                if n == 0:
                    continue
                total = 0.0
                for t in range(na):
                    if ash[t] == 0.0:
                        continue
                    m_floor = sigma_prime - t
                    if m_floor < 0:
                        m_floor = 0
                    if m_floor >= n:
                        continue
                    total += ash[t] * sfx[c, m_floor]
                if total > 0.0:
                    out[r, c] = amax + bmax[c] + math.log(total)
        if not retry:
            break
        cap *= 2
    return out


def _bs_log_grid_np(k0, nk, l0, nl, sigma_prime, gain, bs, prec):
    from .preselect import reflected_log_vector

    cols = []
    maxlen = 1
    for c in range(nl):
        l = l0 + c
        vec = reflected_log_vector(l, True, gain, bs, sigma_prime,
                                   prec) if l >= 0 else np.empty(0)
        cols.append(vec)
        maxlen = max(maxlen, vec.size)
    bmax = np.full(nl, -np.inf)
    sfx = np.zeros((nl, maxlen + 1))
    for c, vec in enumerate(cols):
        if vec.size == 0:
            continue
        mx = vec.max()
        if mx == -np.inf:
            continue
        bmax[c] = mx
        lin = np.exp(vec - mx, where=vec > -np.inf,
                     out=np.zeros(vec.size))
        sfx[c, :vec.size] = np.cumsum(lin[::-1])[::-1]
    out = np.full((nk, nl), -np.inf)
    for r in range(nk):
        k = k0 + r
        if k < 0:
            continue
        avec = reflected_log_vector(k, False, gain, bs, sigma_prime, prec)
        if avec.size == 0:
            continue
        amax = avec.max()
        if amax == -np.inf:
            continue
        ash = np.exp(avec - amax, where=avec > -np.inf,
                     out=np.zeros(avec.size))
        t_idx = np.clip(sigma_prime - np.arange(avec.size), 0, maxlen)
        gathered = sfx[:, t_idx]
        totals = np.einsum("ca,a->c", gathered, ash)
        mask = totals > 0.0
        with np.errstate(divide="ignore"):
            out[r, mask] = amax + bmax[mask] + np.log(totals[mask])
    return out


# ---------------------------------------------------------------------------
# Weierstrass blur
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _blur_block_nb(ext, w, nk, nl, prefactor):
    width = w.shape[0]
    tmp = np.zeros((nk, ext.shape[1]))
    for a in range(nk):
        for d in range(width):
            wd = w[d]
            if wd == 0.0:
                continue
            for b in range(ext.shape[1]):
                tmp[a, b] += wd * ext[a + d, b]
    out = np.zeros((nk, nl))
    for a in range(nk):
        for b in range(nl):
            acc = 0.0
            for d in range(width):
                acc += w[d] * tmp[a, b + d]
            out[a, b] = prefactor * acc
    return out


def _blur_block_np(ext, w, nk, nl, prefactor):
    width = w.shape[0]
    tmp = np.zeros((nk, ext.shape[1]))
    for d in range(width):
        tmp += w[d] * ext[d:d + nk, :]
    out = np.zeros((nk, nl))
    for d in range(width):
        out += w[d] * tmp[:, d:d + nl]
    return prefactor * out


# ---------------------------------------------------------------------------
# public dispatchers
# ---------------------------------------------------------------------------


def th_log_grid(k0, nk, l0, nl, s0, gain):
    """Unnormalized log p(k, l) for the lossless gated superposition."""
    if backend_name() == "numba":
        return _th_log_grid_nb(k0, nk, l0, nl, s0,
                               gain.log_c2, gain.log_z4)
    return _th_log_grid_np(k0, nk, l0, nl, s0, gain.log_c2, gain.log_z4)


def bs_log_grid(k0, nk, l0, nl, sigma_prime, gain, bs, prec):
    """Unnormalized log p(k, l) for the tapped (beam splitter) output."""
    if backend_name() == "numba":
        return _bs_log_grid_nb(k0, nk, l0, nl, sigma_prime,
                               gain.log_c2, gain.log_z4,
                               bs.log_r, bs.log_t,
                               prec.log_eps, prec.max_terms)
    return _bs_log_grid_np(k0, nk, l0, nl, sigma_prime, gain, bs, prec)


def blur_block(ext, w, nk, nl, prefactor):
    """Separable Gaussian blur of a margin-extended linear grid.

    ext has shape (nk + len(w) - 1, nl + len(w) - 1); the result is the
    (nk, nl) core.  No renormalization is applied.
    """
    ext = np.ascontiguousarray(ext, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if ext.shape != (nk + w.size - 1, nl + w.size - 1):
        raise ValueError("extended grid shape does not match the window")
    if backend_name() == "numba":
        return _blur_block_nb(ext, w, nk, nl, prefactor)
    return _blur_block_np(ext, w, nk, nl, prefactor)
