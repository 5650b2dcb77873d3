"""Tile scheduling, partial/plot file formats and the gather-side discovery.

Work items pair each off-diagonal tile with its mirror (the mirror grid is
the transpose, so one evaluation serves both orientations); partial files
are plain `key=value` text with 17 significant digits, which roundtrips
binary64 exactly, and are named `M{m}_Dth{Dth}_r{R}-{x},{y}.txt` with the
parameters spelled exactly as they were given on the command line.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ComputationError, MissingTileError
from .indicators import (
    IndicatorReport,
    TilePartial,
    TileSpec,
    compute_tile,
    gather,
)
from .preselect import ModelConfig

_PARTIAL_KEYS = ("prob_sum", "overlap_sum", "sum_k", "sum_l",
                 "sum_k2", "sum_l2", "sum_kl", "max_p")
_BLUR_PREFIX = "blur_overlap_3sigma_"


@dataclass(frozen=True)
class TileManifest:
    """Grid layout plus the command-line parameter spellings.

    The numeric values drive the computation; the verbatim strings drive
    the file names (the session writes `r0`, not `r0.0`).
    """

    grid_side: int
    tile_size: int
    m_str: str
    dth_str: str
    r_str: str

    def __post_init__(self) -> None:
        if self.grid_side <= 0:
            raise ValueError(f"grid_side must be positive, got {self.grid_side}")
        if self.tile_size <= 0:
            raise ValueError(f"tile_size must be positive, got {self.tile_size}")
        float(self.m_str)
        int(self.dth_str)
        float(self.r_str)

    @classmethod
    def from_values(cls, grid_side: int, tile_size: int, m, dth: int, r) -> "TileManifest":
        return cls(grid_side, tile_size, f"{m:g}", str(int(dth)), f"{r:g}")

    @property
    def m(self) -> float:
        return float(self.m_str)

    @property
    def dth(self) -> int:
        return int(self.dth_str)

    @property
    def r(self) -> float:
        return float(self.r_str)

    @property
    def edge(self) -> int:
        return self.grid_side * self.tile_size

    def partial_name(self, x: int, y: int) -> str:
        return f"M{self.m_str}_Dth{self.dth_str}_r{self.r_str}-{x},{y}.txt"


def schedule_tiles(manifest: TileManifest) -> list:
    """Work items (x, y) with x >= y, lexicographic; each mirror pair once."""
    return [(x, y) for x in range(manifest.grid_side) for y in range(x + 1)]


def format_partial(partial: TilePartial) -> str:
    lines = [f"prob_sum={partial.prob_sum:.17g}",
             f"overlap_sum={partial.overlap_sum:.17g}"]
    for label, value in partial.blur_overlap_sums.items():
        lines.append(f"{_BLUR_PREFIX}{label}={value:.17g}")
    for key in ("sum_k", "sum_l", "sum_k2", "sum_l2", "sum_kl", "max_p"):
        lines.append(f"{key}={getattr(partial, key):.17g}")
    return "\n".join(lines) + "\n"


def parse_partial(text: str, source: str = "<partial>") -> TilePartial:
    partial = TilePartial()
    seen = set()
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if "=" not in line:
            raise ComputationError(f"{source}: malformed partial line {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        try:
            number = float(value)
        except ValueError as exc:
            raise ComputationError(
                f"{source}: unparseable value in line {line!r}") from exc
        if key.startswith(_BLUR_PREFIX):
            partial.blur_overlap_sums[key[len(_BLUR_PREFIX):]] = number
        elif key in _PARTIAL_KEYS:
            setattr(partial, key, number)
        else:
            raise ComputationError(f"{source}: unknown partial key {key!r}")
        if key in seen:
            raise ComputationError(f"{source}: duplicate partial key {key!r}")
        seen.add(key)
    if "prob_sum" not in seen:
        raise ComputationError(f"{source}: partial lacks prob_sum")
    return partial


def write_partial(partial: TilePartial, manifest: TileManifest,
                  x: int, y: int, directory: str = ".") -> str:
    path = os.path.join(directory, manifest.partial_name(x, y))
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(format_partial(partial))
    except OSError as exc:
        raise ComputationError(f"cannot write partial {path}: {exc}") from exc
    return path


def read_partial(path: str) -> TilePartial:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ComputationError(f"cannot read partial {path}: {exc}") from exc
    return parse_partial(text, source=path)


def write_plot(grid: np.ndarray, k0: int, l0: int, path: str,
               plotstep: int) -> None:
    """TAB-separated `k l p` rows at absolute multiples of plotstep,
    row-major over the tile."""
    if plotstep < 1:
        raise ValueError(f"plotstep must be >= 1, got {plotstep}")
    try:
        with open(path, "w", newline="\n") as fh:
            k_start = -(-k0 // plotstep) * plotstep
            l_start = -(-l0 // plotstep) * plotstep
            for k in range(k_start, k0 + grid.shape[0], plotstep):
                for l in range(l_start, l0 + grid.shape[1], plotstep):
                    fh.write(f"{k}\t{l}\t{grid[k - k0, l - l0]:.17g}\n")
    except OSError as exc:
        raise ComputationError(f"cannot write plot {path}: {exc}") from exc


def run_grid(model: ModelConfig, manifest: TileManifest, workers: int = 1,
             three_sigmas: tuple = ()) -> list:
    """Compute every work item, farming them over a thread pool.

    Returns partials in schedule order regardless of completion order, so
    results are independent of the worker count.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    margin = blur_margin(three_sigmas)

    def job(item):
        x, y = item
        spec = TileSpec(x, y, manifest.tile_size, margin)
        partial, _, _ = compute_tile(spec, model, three_sigmas)
        return partial

    items = schedule_tiles(manifest)
    if workers == 1:
        return [job(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, items))


def blur_margin(three_sigmas: tuple) -> int:
    """Evaluation margin covering the widest requested blur window."""
    if not three_sigmas:
        return 0
    return max(math.ceil(ts) for ts in three_sigmas)


def discover_and_gather(manifest: TileManifest, directory: str = ".",
                        model: ModelConfig = None) -> IndicatorReport:
    """Read the partial of every scheduled work item and reduce.

    Either orientation of an off-diagonal pair is accepted (the item's
    sums cover both tiles no matter which coordinate spelling named the
    file).  A hole in the coverage is an error naming the tile.
    """
    partials = []
    for x, y in schedule_tiles(manifest):
        candidates = [manifest.partial_name(x, y)]
        if x != y:
            candidates.append(manifest.partial_name(y, x))
        for name in candidates:
            path = os.path.join(directory, name)
            if os.path.exists(path):
                partials.append(read_partial(path))
                break
        else:
            raise MissingTileError(
                f"no partial for tile ({x},{y}): expected "
                + " or ".join(candidates))
    return gather(partials, model)
