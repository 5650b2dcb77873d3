"""Tiled quantum indicators: distinguishability, blurred visibility, moments.

A work item covers a tile of the (k, l) photon-number plane together with
its mirror tile (the orthogonal macro-state's distribution is the mirror
image p_orth(k, l) = p(l, k), so computing both orientations in one item
halves the evaluations).  Each tile yields a TilePartial of plain sums
that gather() later reduces to an IndicatorReport; partials from an
off-diagonal item carry the sums of both tiles of the pair.

Means and variances are grid-conditioned: normalized by the probability
actually captured on the covered grid, not by 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ComputationError
from .kernels import blur_block, bs_log_grid, th_log_grid
from .preselect import BeamSplitter, ModelConfig, Theoretical, theory_shell_threshold
from .specfun import LOG_ZERO

DEFAULT_THREE_SIGMA = (1.0, 1.5, 15.0, 150.0)


def three_sigma_label(three_sigma: float) -> str:
    """Key suffix for a blur radius: 1, 1.5, 15, 150 style."""
    return f"{three_sigma:g}"


@dataclass(frozen=True)
class TileSpec:
    """Tile (x, y) of edge `size` covering [x*size, (x+1)*size) x
    [y*size, (y+1)*size); evaluation extends `margin` all around for
    blurring (indices below zero carry no probability)."""

    x: int
    y: int
    size: int
    margin: int = 0

    def __post_init__(self) -> None:
        if self.x < 0 or self.y < 0:
            raise ValueError(f"tile coordinates must be >= 0, got ({self.x}, {self.y})")
        if self.size <= 0:
            raise ValueError(f"tile size must be positive, got {self.size}")
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")

    @property
    def k0(self) -> int:
        return self.x * self.size

    @property
    def l0(self) -> int:
        return self.y * self.size


@dataclass
class TilePartial:
    """Additive per-item sums; off-diagonal items include the mirror tile."""

    prob_sum: float = 0.0
    overlap_sum: float = 0.0
    blur_overlap_sums: dict = field(default_factory=dict)
    sum_k: float = 0.0
    sum_l: float = 0.0
    sum_k2: float = 0.0
    sum_l2: float = 0.0
    sum_kl: float = 0.0
    max_p: float = 0.0


@dataclass
class IndicatorReport:
    total_prob: float
    visibility_overlap: float
    visibility_blurred: dict
    mean: float
    mean_k: float
    mean_l: float
    variance: float
    variance_k: float
    variance_l: float
    max_p: float


def model_log_grid(model: ModelConfig, k0: int, nk: int, l0: int, nl: int,
                   workers: int = 1) -> np.ndarray:
    """Normalized log p on [k0, k0+nk) x [l0, l0+nl); LOG_ZERO off support.

    With workers > 1 the rows are split into contiguous blocks evaluated
    on a thread pool; every row is computed by exactly one block with the
    same per-row accumulation order, so the result is bit-identical for
    any worker count.
    """
    if workers > 1 and nk > 1:
        from concurrent.futures import ThreadPoolExecutor

        blocks = min(workers, nk)
        bounds = [(b * nk) // blocks for b in range(blocks + 1)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda se: model_log_grid(model, k0 + se[0], se[1] - se[0],
                                          l0, nl),
                ((s, e) for s, e in zip(bounds, bounds[1:]) if e > s)))
        return np.vstack(parts)
    presel = model.presel
    if isinstance(presel, Theoretical):
        raw = th_log_grid(k0, nk, l0, nl,
                          theory_shell_threshold(presel.sigma), model.gain)
    else:
        raw = bs_log_grid(k0, nk, l0, nl, presel.sigma_prime,
                          model.gain, presel.bs, model.prec)
    return raw + model.log_norm_sq


def _linear(log_grid: np.ndarray) -> np.ndarray:
    out = np.zeros_like(log_grid)
    finite = log_grid > LOG_ZERO
    np.exp(log_grid, where=finite, out=out)
    return out


def blur_weierstrass(ext: np.ndarray, sigma_bar: float, margin: int) -> np.ndarray:
    """Finite-window Gaussian blur of a margin-extended linear grid.

    The kernel is exp(-(p^2+q^2)/(2 sigma_bar^2)) / (2 pi sigma_bar^2)
    truncated at |p|, |q| <= 3 sigma_bar, applied without renormalization;
    the returned grid is the core with the margin stripped.
    """
    if sigma_bar <= 0.0:
        raise ValueError(f"sigma_bar must be positive, got {sigma_bar}")
    window = math.floor(3.0 * sigma_bar)
    if margin < math.ceil(3.0 * sigma_bar):
        raise ComputationError(
            f"blur window 3*sigma_bar={3.0 * sigma_bar:g} needs margin >= "
            f"{math.ceil(3.0 * sigma_bar)}, tile has {margin}")
    nk = ext.shape[0] - 2 * margin
    nl = ext.shape[1] - 2 * margin
    if nk <= 0 or nl <= 0:
        raise ValueError("extended grid smaller than its margins")
    d = np.arange(-window, window + 1, dtype=np.float64)
    w = np.exp(-d * d / (2.0 * sigma_bar * sigma_bar))
    prefactor = 1.0 / (2.0 * math.pi * sigma_bar * sigma_bar)
    off = margin - window
    trimmed = ext[off:off + nk + 2 * window, off:off + nl + 2 * window]
    return blur_block(trimmed, w, nk, nl, prefactor)


def _overlap_log(core1: np.ndarray, core2t: np.ndarray) -> float:
    """Bhattacharyya contribution sum sqrt(p1 p2) via half-log sums."""
    both = (core1 > LOG_ZERO) & (core2t > LOG_ZERO)
    if not both.any():
        return 0.0
    return float(np.sum(np.exp(0.5 * (core1[both] + core2t[both]))))


def _moment_block(grid: np.ndarray, k0: int, l0: int) -> tuple:
    ks = (k0 + np.arange(grid.shape[0], dtype=np.float64))[:, None]
    ls = (l0 + np.arange(grid.shape[1], dtype=np.float64))[None, :]
    sk = float(np.sum(grid * ks))
    sl = float(np.sum(grid * ls))
    sk2 = float(np.sum(grid * ks * ks))
    sl2 = float(np.sum(grid * ls * ls))
    skl = float(np.sum(grid * ks * ls))
    return sk, sl, sk2, sl2, skl


def compute_tile(spec: TileSpec, model: ModelConfig,
                 three_sigmas: tuple = (), workers: int = 1) -> tuple:
    """Evaluate a tile work item.

    Returns (partial, grid, mirror_grid): `grid` is p over the tile's own
    region, `mirror_grid` p over the mirrored region (rows at the tile's
    column offset); for diagonal tiles the two are the same grid.  The
    partial carries combined sums of both regions (the weight-2 rule for
    off-diagonal tiles, written out as two explicit region contributions).
    """
    size = spec.size
    w = spec.margin
    n_ext = size + 2 * w
    ext1 = model_log_grid(model, spec.k0 - w, n_ext, spec.l0 - w, n_ext,
                          workers)
    diagonal = spec.x == spec.y
    # the mirror grid covers the mirrored region; on the diagonal that is
    # the region itself (the orthogonal state's values are its transpose,
    # taken where the overlap is formed)
    ext2 = ext1 if diagonal else model_log_grid(
        model, spec.l0 - w, n_ext, spec.k0 - w, n_ext, workers)

    core1 = ext1[w:w + size, w:w + size]
    core2 = ext2[w:w + size, w:w + size]
    grid = _linear(core1)
    mirror_grid = _linear(core2)

    partial = TilePartial()
    regions = [(grid, spec.k0, spec.l0)]
    if not diagonal:
        regions.append((mirror_grid, spec.l0, spec.k0))
    for reg, rk0, rl0 in regions:
        partial.prob_sum += float(np.sum(reg))
        sk, sl, sk2, sl2, skl = _moment_block(reg, rk0, rl0)
        partial.sum_k += sk
        partial.sum_l += sl
        partial.sum_k2 += sk2
        partial.sum_l2 += sl2
        partial.sum_kl += skl
        partial.max_p = max(partial.max_p, float(reg.max()) if reg.size else 0.0)

    weight = 1.0 if diagonal else 2.0
    partial.overlap_sum = weight * _overlap_log(core1, core2.T)

    if three_sigmas:
        lin1 = _linear(ext1)
        lin2 = lin1 if diagonal else _linear(ext2)
        for ts in three_sigmas:
            sigma_bar = ts / 3.0
            b1 = blur_weierstrass(lin1, sigma_bar, w)
            b2 = blur_weierstrass(lin2, sigma_bar, w)
            ov = float(np.sum(np.sqrt(b1 * b2.T)))
            partial.blur_overlap_sums[three_sigma_label(ts)] = weight * ov
    return partial, grid, mirror_grid


def find_cutoff_KL(model: ModelConfig, eps: float) -> int:
    """Photon-number cutoff K with p(K, 0) below eps.

    The probe walks the k axis from the approximate end of the central
    bulge, 30m for beam-splitter preselection and 20m for theoretical
    (odd k there, the even axis is empty), in strides of 100.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    from .preselect import p_bs, p_th

    mean = model.gain.mean
    if isinstance(model.presel, BeamSplitter):
        k = max(int(math.ceil(30.0 * mean)), 1)
        probe = p_bs
    else:
        k = max(int(math.ceil(20.0 * mean)), 1)
        if k % 2 == 0:
            k += 1
        probe = p_th
    while probe(k, 0, model) >= eps:
        k += 100
    return k


def gather(partials: list, model: ModelConfig = None) -> IndicatorReport:
    """Reduce tile partials to the final indicators.

    Visibilities are one minus the summed overlap contributions; means
    and variances are conditioned on the probability captured by the
    covered grid.  Pure function of the partial values: any ordering of
    the same partials reduces identically (exact compensated sums).
    """
    total = math.fsum(p.prob_sum for p in partials)
    if total <= 0.0:
        raise ComputationError(
            "covered grid captured zero probability; moments are undefined")
    overlap = math.fsum(p.overlap_sum for p in partials)
    blur_labels: list = []
    for p in partials:
        for key in p.blur_overlap_sums:
            if key not in blur_labels:
                blur_labels.append(key)
    vis_blur = {}
    for key in blur_labels:
        ov = math.fsum(p.blur_overlap_sums.get(key, 0.0) for p in partials)
        vis_blur[key] = 1.0 - ov
    sum_k = math.fsum(p.sum_k for p in partials)
    sum_l = math.fsum(p.sum_l for p in partials)
    sum_k2 = math.fsum(p.sum_k2 for p in partials)
    sum_l2 = math.fsum(p.sum_l2 for p in partials)
    sum_kl = math.fsum(p.sum_kl for p in partials)
    mean_k = sum_k / total
    mean_l = sum_l / total
    mean = mean_k + mean_l
    variance_k = sum_k2 / total - mean_k * mean_k
    variance_l = sum_l2 / total - mean_l * mean_l
    variance = (sum_k2 + 2.0 * sum_kl + sum_l2) / total - mean * mean
    return IndicatorReport(
        total_prob=total,
        visibility_overlap=1.0 - overlap,
        visibility_blurred=vis_blur,
        mean=mean,
        mean_k=mean_k,
        mean_l=mean_l,
        variance=variance,
        variance_k=variance_k,
        variance_l=variance_l,
        max_p=max((p.max_p for p in partials), default=0.0),
    )
