"""Command-line frontend: norm, tile and gather subcommands.

The three subcommands mirror the original program suite and compose
through the shell: norm prints the squared normalization that tile takes
as its N2 argument, tile prints a partial-result block to standard
output (callers redirect it to the conventional M{m}_Dth{Dth}_r{R}-{x},{y}.txt
name), and gather reads those files back and prints the indicator report.

Exit codes: 0 success, 1 computation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import ComputationError
from .indicators import DEFAULT_THREE_SIGMA, compute_tile, TileSpec
from .preselect import (
    BeamSplitter,
    ModelConfig,
    Theoretical,
    build_model,
    norm_th,
)
from .series import PrecisionConfig
from .terms import gain_from_mean, splitter_from_reflectivity
from .tiling import (
    TileManifest,
    blur_margin,
    discover_and_gather,
    format_partial,
    write_plot,
)


def _nonneg_float(text: str) -> str:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if value < 0.0:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 0")
    return text


def _nonneg_int(text: str) -> str:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 0")
    return text


def _reflectivity(text: str) -> str:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"reflectivity must be in [0, 1], got {text!r}")
    return text


def _pos_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"{text!r} must be > 0")
    return value


def _pos_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 1")
    return value


def resolve_threads(flag_value) -> int:
    """Worker count: --threads flag, then MQSVIS_THREADS, then
    OMP_NUM_THREADS, then 1.  Unparseable environment values are skipped."""
    if flag_value is not None:
        return flag_value
    for var in ("MQSVIS_THREADS", "OMP_NUM_THREADS"):
        raw = os.environ.get(var)
        if not raw:
            continue
        try:
            n = int(raw)
        except ValueError:
            continue
        if n >= 1:
            return n
    return 1


def _model_for(m_str: str, dth_str: str, r_str: str, norm_sq: float,
               eps_rel: float) -> ModelConfig:
    gain = gain_from_mean(float(m_str))
    r = float(r_str)
    if r == 0.0:
        presel = Theoretical(int(dth_str))
    else:
        presel = BeamSplitter(int(dth_str), splitter_from_reflectivity(r))
    return ModelConfig(gain=gain, presel=presel,
                       prec=PrecisionConfig(eps_rel=eps_rel), norm_sq=norm_sq)


def cmd_norm(args) -> int:
    gain = gain_from_mean(float(args.m))
    nsq = norm_th(gain, int(args.dth),
                  PrecisionConfig(eps_rel=args.precision),
                  strategy=args.strategy)
    print(f"{nsq:.17g}")
    return 0


def cmd_tile(args) -> int:
    model = _model_for(args.m, args.dth, args.r, args.n2, args.precision)
    theory = isinstance(model.presel, Theoretical)
    if args.blur:
        blur_on = True
    elif args.no_blur:
        blur_on = False
    else:
        blur_on = theory
    three_sigmas = DEFAULT_THREE_SIGMA if blur_on else ()
    spec = TileSpec(int(args.tilex), int(args.tiley), args.tilesize,
                    blur_margin(three_sigmas))
    workers = resolve_threads(args.threads)
    partial, grid, mirror_grid = compute_tile(spec, model, three_sigmas,
                                              workers)
    write_plot(grid, spec.k0, spec.l0, args.plotfname1, args.plotstep)
    write_plot(mirror_grid, spec.l0, spec.k0, args.plotfname2, args.plotstep)
    sys.stdout.write(format_partial(partial))
    return 0


def cmd_gather(args) -> int:
    manifest = TileManifest(grid_side=args.tiles, tile_size=1,
                            m_str=args.m, dth_str=args.dth, r_str=args.r)
    report = discover_and_gather(manifest, directory=args.directory)
    lines = [
        f"total probability sum={report.total_prob:.15g}",
        "simple visibility computed from the overlap="
        f"{report.visibility_overlap:.3f}",
    ]
    for label in sorted(report.visibility_blurred, key=float):
        lines.append(f"visibility with Gaussian blur (3sigma={label})="
                     f"{report.visibility_blurred[label]:.3f}")
    lines += [
        f"mean={report.mean:.3f}",
        f"mean k={report.mean_k:.3f}",
        f"mean l={report.mean_l:.3f}",
        f"variance={report.variance:.3f}",
        f"variance k={report.variance_k:.3f}",
        f"variance l={report.variance_l:.3f}",
        f"maximal value={report.max_p:.15g}",
    ]
    print("\n".join(lines))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mqsvis",
        description="Photon-number distributions and visibility of "
                    "preselected macroscopic superposition states.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_norm = sub.add_parser("norm", help="print the squared normalization")
    p_norm.add_argument("m", type=_nonneg_float, help="mean photon parameter")
    p_norm.add_argument("dth", type=_nonneg_int, help="preselection threshold")
    p_norm.add_argument("--precision", type=_pos_float, default=1e-15,
                        metavar="EPS", help="relative series cutoff")
    p_norm.add_argument("--strategy", choices=("auto", "tail", "complement"),
                        default="auto", help="threshold-sum evaluation strategy")
    p_norm.set_defaults(func=cmd_norm)

    p_tile = sub.add_parser("tile", help="compute one tile work item")
    p_tile.add_argument("m", type=_nonneg_float)
    p_tile.add_argument("dth", type=_nonneg_int)
    p_tile.add_argument("r", type=_reflectivity,
                        help="tap reflectivity; 0 selects the theoretical mode")
    p_tile.add_argument("n2", type=_pos_float,
                        help="squared normalization (output of norm)")
    p_tile.add_argument("tilesize", type=_pos_int)
    p_tile.add_argument("tilex", type=_nonneg_int)
    p_tile.add_argument("tiley", type=_nonneg_int)
    p_tile.add_argument("plotstep", type=_pos_int)
    p_tile.add_argument("plotfname1", help="distribution plot of this tile")
    p_tile.add_argument("plotfname2", help="plot of the mirror tile")
    p_tile.add_argument("--precision", type=_pos_float, default=1e-15,
                        metavar="EPS")
    p_tile.add_argument("--threads", type=_pos_int, default=None)
    blur_group = p_tile.add_mutually_exclusive_group()
    blur_group.add_argument("--blur", action="store_true",
                            help="force detector blur on")
    blur_group.add_argument("--no-blur", action="store_true",
                            help="force detector blur off")
    p_tile.set_defaults(func=cmd_tile)

    p_gather = sub.add_parser("gather", help="reduce tile partials to a report")
    p_gather.add_argument("m", type=_nonneg_float)
    p_gather.add_argument("dth", type=_nonneg_int)
    p_gather.add_argument("r", type=_reflectivity)
    p_gather.add_argument("tiles", type=_pos_int,
                          help="tiles per row/column")
    p_gather.add_argument("--directory", default=".",
                          help="where the partial files live")
    p_gather.set_defaults(func=cmd_gather)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ComputationError as exc:
        print(f"mqsvis: error: {exc}", file=sys.stderr)
        return 1


def _shim(subcommand: str) -> int:
    return main([subcommand] + sys.argv[1:])


def main_norm() -> int:
    return _shim("norm")


def main_tile() -> int:
    return _shim("tile")


def main_gather() -> int:
    return _shim("gather")
