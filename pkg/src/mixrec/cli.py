"""Command-line entry point.

Exit codes: 0 ok, 1 usage/parse/validation error, 3 not certified,
4 recovery degeneracy (rank collapse or exhausted probe draws).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as mio
from .errors import MixrecError, ProbeExhausted, RankCollapse
from .experiments import FULL_GRID, SweepConfig, build_spec, run_sweep, write_outputs
from .identifiability import certify
from .metrics import component_error, pi_error
from .model import binomial_counterexample, empirical_tensor, joint_tensor
from .recovery import recover_all

EXIT_OK, EXIT_ERROR, EXIT_NOT_CERTIFIED, EXIT_DEGENERATE = 0, 1, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _grid(text: str) -> tuple:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mixrec", description="Identifiability checks and spectral recovery for mixtures of product PMFs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("identify", help="certify identifiability of a model JSON")
    s.add_argument("--model", required=True)

    s = sub.add_parser("recover", help="recover components from a joint tensor JSON or dataset file")
    s.add_argument("--joint", required=True, help="tensor JSON, or a binary dataset (.mxds)")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--truth", help="model JSON used to align and score the result")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("simulate", help="Monte-Carlo error sweep over sample sizes")
    s.add_argument("--model", required=True, help="ci, bmm or a model JSON path")
    s.add_argument("--m", type=int, default=3)
    s.add_argument("--d", type=int, default=5)
    s.add_argument("--n-grid", type=_grid, default=(14, 20), metavar="LO:HI")
    s.add_argument("--reps", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--full-grid", action="store_true", help=f"use n = 2^{FULL_GRID[0]}..2^{FULL_GRID[1]}")
    s.add_argument("--out", required=True)

    s = sub.add_parser("export", help="write a built-in model, its exact joint, or a sample")
    s.add_argument("--model", required=True, help="ci, bmm, binomial or a model JSON path")
    s.add_argument("--m", type=int, default=3)
    s.add_argument("--d", type=int, default=5)
    s.add_argument("--c", type=float, default=0.1, help="step for the binomial construction")
    s.add_argument("--what", choices=("model", "joint", "sample"), default="model")
    s.add_argument("--n", type=int, default=1000, help="sample size for --what sample")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    return p


def _cmd_identify(args) -> int:
    spec = mio.load_model(args.model)
    report = certify(spec)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK if report.certified else EXIT_NOT_CERTIFIED


def _load_joint(path: str):
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == mio.MAGIC:
        return empirical_tensor(mio.load_dataset(path))
    return mio.load_tensor(path)


def _cmd_recover(args) -> int:
    t = _load_joint(args.joint)
    truth = mio.load_model(args.truth) if args.truth else None
    try:
        res = recover_all(t, args.m, seed=args.seed, truth=truth)
    except (RankCollapse, ProbeExhausted) as exc:
        print(f"mixrec: recovery degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    out = res.to_dict()
    if truth is not None:
        out["component_errors"] = {str(j): component_error(res, truth, j) for j in sorted(res.components_hat)}
        out["pi_error"] = pi_error(res, truth)
    mio.dump_json(out, args.out)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    grid = FULL_GRID if args.full_grid else args.n_grid
    config = SweepConfig(args.model, args.m, args.d, tuple(grid), args.reps, args.seed, args.out,
                         scaled=not args.full_grid)
    rows = run_sweep(config)
    summary = write_outputs(rows, config)
    print(json.dumps({k: summary[k] for k in ("comp_err_slope", "comp_err_monotone", "statuses")}, sort_keys=True))
    return EXIT_OK


def _cmd_export(args) -> int:
    if args.model == "binomial":
        spec = binomial_counterexample(args.m, args.c)[0]
    else:
        spec = build_spec(args.model, args.m, args.d)
    if args.what == "model":
        mio.save_model(spec, args.out)
    elif args.what == "joint":
        mio.save_tensor(joint_tensor(spec), args.out)
    else:
        from .model import sample

        mio.save_dataset(sample(spec, args.n, args.seed), args.out)
    return EXIT_OK


COMMANDS = {"identify": _cmd_identify, "recover": _cmd_recover, "simulate": _cmd_simulate, "export": _cmd_export}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (MixrecError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"mixrec: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
