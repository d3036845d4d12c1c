"""Command-line experiment harness.

Subcommands:
    pipeline          simulate -> estimate -> reconstruct -> score
    sweep-pixel-size  both models across rescaled scenes (pixel_sweep.csv)
    analyze-error     planar phase-error sweep (error_sweep.csv)
    assemble-matrix   prebuild the measurement-matrix cache

Common flags: --config (JSON file), --out, --seed, --model.  Errors exit
nonzero with a one-line JSON description on stderr.
"""

import argparse
import json
import logging
import sys

from . import __version__, pipeline
from .config import ExperimentConfig
from .errors import IsacimgError


def _add_common(parser):
    parser.add_argument("--config", help="JSON experiment config (defaults used if omitted)")
    parser.add_argument("--out", help="output directory (overrides config out_dir)")
    parser.add_argument("--seed", type=int, help="override config seed")
    parser.add_argument(
        "--model", choices=["integral", "conventional"], help="override propagation model"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isacimg",
        description="Pixel-integral computational imaging experiments",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="run one experiment end to end")
    _add_common(p)
    p.add_argument(
        "--dump-matrices",
        action="store_true",
        help="also write Y/S/H blocks and A under <out>/matrices",
    )

    p = sub.add_parser("sweep-pixel-size", help="MD/FA for both models across pixel sizes")
    _add_common(p)
    p.add_argument(
        "--sizes",
        default="0.001,0.01,0.1,1.0",
        help="comma-separated pixel sizes in metres",
    )

    p = sub.add_parser("analyze-error", help="planar phase-error proportion sweep")
    _add_common(p)
    p.add_argument(
        "--proportions",
        default=",".join(f"{0.1 * i:.1f}" for i in range(1, 11)),
        help="comma-separated scatterer proportions in (0, 1]",
    )

    p = sub.add_parser("assemble-matrix", help="prebuild the measurement-matrix cache")
    _add_common(p)
    return parser


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.model is not None:
        overrides["model"] = args.model
    if args.out is not None:
        overrides["out_dir"] = args.out
    if overrides:
        cfg = ExperimentConfig({**cfg.data, **overrides})
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _load_config(args)
        out_dir = args.out or cfg.data["out_dir"]
        if args.command == "pipeline":
            result = pipeline.run_pipeline(cfg, out_dir, dump_matrices=args.dump_matrices)
            print(
                json.dumps(
                    {"md": result["md"], "fa": result["fa"], "out_dir": out_dir}, sort_keys=True
                )
            )
        elif args.command == "sweep-pixel-size":
            sizes = [float(s) for s in args.sizes.split(",") if s]
            pipeline.sweep_pixel_size(cfg, sizes, out_dir)
            print(json.dumps({"rows": 2 * len(sizes), "out_dir": out_dir}, sort_keys=True))
        elif args.command == "analyze-error":
            proportions = [float(s) for s in args.proportions.split(",") if s]
            pipeline.analyze_error(cfg, proportions, out_dir)
            print(json.dumps({"rows": len(proportions), "out_dir": out_dir}, sort_keys=True))
        elif args.command == "assemble-matrix":
            channels = pipeline.assemble_matrix(cfg, out_dir)
            print(
                json.dumps(
                    {"shape": list(channels.a.shape), "out_dir": out_dir}, sort_keys=True
                )
            )
    except (IsacimgError, ValueError, OSError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
