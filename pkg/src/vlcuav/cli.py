"""Command-line entry point.

Subcommands: altitude, sweep, train, eval, baseline <scan|greedy|aco>,
compare, dump-traj.  Exit codes: 0 success, 2 configuration error,
3 runtime failure.  The output directory comes from --out, the VLCUAV_OUTDIR
environment variable, or the config's output_dir, in that order.
"""

from __future__ import annotations

import argparse
import sys

from . import harness
from .config import load_config
from .errors import ConfigError, VlcUavError

BASELINE_NAMES = {"scan": "scan", "greedy": "greedy-rrt", "aco": "aco-rrt"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vlcuav", description=__doc__)
    parser.add_argument("-c", "--config", required=True, help="JSON experiment config")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY.PATH=VALUE",
        help="override a config value (repeatable)",
    )
    parser.add_argument("--out", default=None, help="output directory override")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("altitude", help="print closed-form optimum and grid oracle as CSV")
    sub.add_parser("sweep", help="planner distance vs altitude grid")

    train = sub.add_parser("train", help="run the training loop")
    train.add_argument("--resume", default=None, help="checkpoint to continue from")

    ev = sub.add_parser("eval", help="noise-free rollouts of a checkpoint")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--episodes", type=int, default=1)

    base = sub.add_parser("baseline", help="run one benchmark planner")
    base.add_argument("planner", choices=sorted(BASELINE_NAMES))
    base.add_argument("--seed", type=int, default=0)

    comp = sub.add_parser("compare", help="distance vs GU count for all algorithms")
    comp.add_argument("--checkpoint", default=None)

    dump = sub.add_parser("dump-traj", help="dump one greedy trajectory with GU radii")
    dump.add_argument("--checkpoint", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, overrides=args.set)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "altitude":
            header, rows = harness.altitude_report(cfg)
            print(",".join(header))
            for row in rows:
                print(",".join(harness._fmt(v) for v in row))
            return 0

        out_dir = harness.resolve_out_dir(cfg, args.out)
        if args.command == "sweep":
            path = harness.run_altitude_sweep(cfg, out_dir)
            print(path)
        elif args.command == "train":
            result = harness.run_training(cfg, out_dir, resume=args.resume)
            print(result.convergence_csv)
            print(result.checkpoint)
            target = (
                f"target reached at episode {result.first_target_episode}"
                if result.first_target_episode is not None
                else "target not reached"
            )
            print(f"episodes={result.episodes_run} {target}")
        elif args.command == "eval":
            path = harness.run_eval(cfg, args.checkpoint, args.episodes, out_dir)
            print(path)
        elif args.command == "baseline":
            path = harness.run_baseline(cfg, BASELINE_NAMES[args.planner], args.seed, out_dir)
            print(path)
        elif args.command == "compare":
            path = harness.run_comparison(cfg, out_dir, checkpoint=args.checkpoint)
            print(path)
        elif args.command == "dump-traj":
            traj, gus = harness.dump_trajectory(cfg, args.checkpoint, out_dir)
            print(traj)
            print(gus)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except VlcUavError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
