"""Photon-number statistics of preselected macroscopic superposition states.

The library evaluates joint photon-number distributions p(k, l) of the
two orthogonally polarized output modes of a phase-covariant amplifier,
under either a projective photon-number gate (theoretical preselection)
or a beam-splitter tap gate, entirely in the log domain with dynamically
truncated series.  On top of the distributions it computes normalizations,
photon-number moments, Bhattacharyya-overlap visibility and its blurred
(finite detector resolution) variants, organized as independent tiles of
the (k, l) plane for parallel runs.
"""

from .errors import (
    ComputationError,
    DegeneratePreselectionError,
    MissingTileError,
    TableRangeError,
)
from .indicators import (
    DEFAULT_THREE_SIGMA,
    IndicatorReport,
    TilePartial,
    TileSpec,
    blur_weierstrass,
    compute_tile,
    find_cutoff_KL,
    gather,
    model_log_grid,
)
from .kernels import HAS_NUMBA, backend_name
from .preselect import (
    BeamSplitter,
    ModelConfig,
    Theoretical,
    build_model,
    log_p,
    log_p_bs,
    log_p_th,
    moment_sum,
    norm_bs,
    norm_th,
    p_bs,
    p_th,
    s_sum,
)
from .series import (
    PrecisionConfig,
    SeriesTables,
    precompute_tables,
    sum_A,
    sum_B,
    sum_G,
    sum_dynamic,
    sum_fixed,
    term_peak_index,
    theory_tables,
)
from .terms import (
    BeamSplitterParams,
    GainParams,
    gain_from_g,
    gain_from_mean,
    log_f_i,
    log_f_j,
    log_sq_gamma,
    log_sq_gamma_0j,
    log_sq_gamma_i0,
    splitter_from_reflectivity,
)
from .tiling import (
    TileManifest,
    discover_and_gather,
    format_partial,
    parse_partial,
    read_partial,
    run_grid,
    schedule_tiles,
    write_partial,
    write_plot,
)

__version__ = "1.0.0"

__all__ = [
    "BeamSplitter",
    "BeamSplitterParams",
    "ComputationError",
    "DEFAULT_THREE_SIGMA",
    "DegeneratePreselectionError",
    "GainParams",
    "HAS_NUMBA",
    "IndicatorReport",
    "MissingTileError",
    "ModelConfig",
    "PrecisionConfig",
    "SeriesTables",
    "TableRangeError",
    "Theoretical",
    "TileManifest",
    "TilePartial",
    "TileSpec",
    "backend_name",
    "blur_weierstrass",
    "build_model",
    "compute_tile",
    "discover_and_gather",
    "find_cutoff_KL",
    "format_partial",
    "gain_from_g",
    "gain_from_mean",
    "gather",
    "log_f_i",
    "log_f_j",
    "log_p",
    "log_p_bs",
    "log_p_th",
    "log_sq_gamma",
    "log_sq_gamma_0j",
    "log_sq_gamma_i0",
    "model_log_grid",
    "moment_sum",
    "norm_bs",
    "norm_th",
    "p_bs",
    "p_th",
    "parse_partial",
    "precompute_tables",
    "read_partial",
    "run_grid",
    "s_sum",
    "schedule_tiles",
    "splitter_from_reflectivity",
    "sum_A",
    "sum_B",
    "sum_G",
    "sum_dynamic",
    "sum_fixed",
    "term_peak_index",
    "theory_tables",
    "write_partial",
    "write_plot",
    "__version__",
]
