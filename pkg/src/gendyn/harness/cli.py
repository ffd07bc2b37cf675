"""``gendyn`` command line: theory, simulate, shrink, transfer, reproduce.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence.
"""
from __future__ import annotations

import argparse
import sys

from ..errors import Divergence, GendynError, UnknownFigure
from .config import ExperimentConfig, load_config
from .recipes import RECIPES
from .runner import run

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gendyn", description="Generalization dynamics of deep linear students.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="theoretical learning curves")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="train one seeded student by gradient descent")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("shrink", help="singular-value shrinkage of a data matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--aspect", type=float, required=True)
    p.add_argument("--margin", type=float, default=0.02)
    p.add_argument("--estimate-scale", action="store_true", help="fit the noise scale from the bulk")
    p.add_argument("--out", required=True)
    p.add_argument("--report", required=True)

    p = sub.add_parser("transfer", help="transfer benefit between two rank-1 tasks")
    p.add_argument("--snr-a", type=float, required=True)
    p.add_argument("--snr-b", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--grid", action="store_true", help="sweep q and snr_b on a 5x5 grid")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("reproduce", help="regenerate the data behind one figure")
    p.add_argument("figure_id", help=", ".join(RECIPES))
    p.add_argument("--outdir", required=True)
    p.add_argument("--no-plot", action="store_true")
    return ap


def _config(args) -> tuple[ExperimentConfig, str]:
    if args.command == "theory":
        return load_config(args.config, kind="theory_curve"), args.out
    if args.command == "simulate":
        return load_config(args.config, kind="simulate", seed=args.seed), args.out
    if args.command == "shrink":
        return ExperimentConfig(kind="shrink", input=args.input, aspect=args.aspect, margin=args.margin,
                                report=args.report, estimate_scale=args.estimate_scale), args.out
    if args.command == "transfer":
        return ExperimentConfig(kind="transfer", snr_a=args.snr_a, snr_b=args.snr_b, q=args.q, grid=args.grid,
                                n_seeds=args.seeds, seed=args.seed), args.out
    return ExperimentConfig(kind="reproduce", figure=args.figure_id, output_dir=args.outdir,
                            plot=not args.no_plot), args.outdir


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg, out = _config(args)
        man = run(cfg, out)
    except Divergence as exc:
        print(f"gendyn: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (GendynError, UnknownFigure, ValueError, KeyError, OSError) as exc:
        print(f"gendyn {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in man.outputs:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
