"""Command-line entry point: ``rsvrc {simulate,run,compare,plot,check}``.

Exit codes: 0 success, 1 usage error, 2 solver failure, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields

from ..errors import ContractViolation, DomainError, InvariantViolation, SolverFailure, UsageError
from .data import PROBLEMS, save_dataset, write_dataset_csv
from .experiment import ALGORITHMS, ExperimentConfig, compare_algorithms, make_dataset, run_experiment
from .plotting import X_AXES, emit_svg_plot

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_INVARIANT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


def _add_experiment_flags(p, required_run: bool):
    p.add_argument("--config", help="JSON file whose keys match experiment config fields")
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--dim", type=int, help="p for student_t, d for sphere_classifier")
    p.add_argument("--N", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--tau2", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--S", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--b-g", dest="b_g", type=int)
    p.add_argument("--b-h", dest="b_h", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--with-replacement", dest="with_replacement", type=_bool)
    p.add_argument("--record-every", dest="record_every", type=int)
    p.add_argument("--L-H-estimate", dest="L_H_estimate", type=float)
    p.add_argument("--max-inner-iter", dest="max_inner_iter", type=int)
    p.add_argument("--crc-iters", dest="crc_iters", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--random-init", dest="random_init", action="store_const", const=True)
    p.add_argument("--no-timing", dest="timing", action="store_const", const=False,
                   help="write zero seconds so output files are bitwise reproducible")
    p.add_argument("--seed", type=int, required=required_run)
    p.add_argument("--out-dir", dest="out_dir", required=required_run)
    p.add_argument("--replicates", type=int, required=required_run)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rsvrc", description="Variance-reduced cubic Newton on manifolds: experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("--problem", choices=PROBLEMS, required=True)
    p.add_argument("--dim", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--tau2", type=float)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--out", required=True, help=".npz output path")
    p.add_argument("--csv", help="also write the samples as CSV")

    p = sub.add_parser("run", help="run replicated experiments")
    _add_experiment_flags(p, True)
    p.add_argument("--algorithm", choices=ALGORITHMS)

    p = sub.add_parser("compare", help="run rsvrc and crc on the same data")
    _add_experiment_flags(p, True)

    p = sub.add_parser("plot", help="SVG plot from an aggregate CSV")
    p.add_argument("--aggregate", required=True)
    p.add_argument("--metric", required=True)
    p.add_argument("--x-axis", dest="x_axis", default="so_calls", choices=X_AXES)
    p.add_argument("--out", required=True)

    p = sub.add_parser("check", help="run the diagnostics suite")
    p.add_argument("--problem", choices=PROBLEMS + ("all",), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", type=int, default=10)
    return parser


_CONFIG_FIELDS = {f.name for f in fields(ExperimentConfig)}


def config_from_args(args, **forced) -> ExperimentConfig:
    over = {k: v for k, v in vars(args).items() if k in _CONFIG_FIELDS and v is not None and k != "config"}
    over.update(forced)
    if args.config:
        try:
            return ExperimentConfig.from_file(args.config, **over)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        except ValueError as exc:
            raise UsageError(f"bad config file: {exc}") from exc
    return ExperimentConfig.from_dict(over)


def _cmd_simulate(args):
    cfg = ExperimentConfig.from_dict({k: getattr(args, k) for k in ("problem", "dim", "N", "nu", "tau2", "seed")
                                      if getattr(args, k) is not None})
    ds = make_dataset(cfg, args.replicate)
    save_dataset(ds, args.out)
    if args.csv:
        write_dataset_csv(ds, args.csv)
    print(f"wrote {ds.problem} dataset with {ds.n} samples to {args.out}")
    return EXIT_OK


def _cmd_run(args):
    cfg = config_from_args(args)
    res = run_experiment(cfg)
    with open(os.path.join(cfg.out_dir, "summary.txt")) as fh:
        print(fh.read().strip())
    for r in res.failures:
        print(f"replicate {r.replicate} failed: {r.message}", file=sys.stderr)
    return EXIT_SOLVER if res.failures else EXIT_OK


def _cmd_compare(args):
    a = config_from_args(args, algorithm="rsvrc")
    b = config_from_args(args, algorithm="crc")
    ra, rb, pairs = compare_algorithms(a, b, a.out_dir)
    for res in (ra, rb):
        with open(os.path.join(res.config.out_dir, "summary.txt")) as fh:
            print(fh.read().strip())
    wins = sum(p["rsvrc_fewer_to_0.001"] for p in pairs)
    print(f"rsvrc needed fewer SO calls to |grad|<=1e-3 in {wins}/{len(pairs)} replicates")
    return EXIT_SOLVER if (ra.failures or rb.failures) else EXIT_OK


def _cmd_plot(args):
    emit_svg_plot(args.aggregate, args.metric, args.out, args.x_axis)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_check(args):
    from .checks import run_checks

    problems = PROBLEMS if args.problem == "all" else (args.problem,)
    ok = True
    for prob in problems:
        print(f"[{prob}]")
        for c in run_checks(prob, args.seed, args.points):
            print("  " + c.line())
            ok &= c.passed
    if not ok:
        raise InvariantViolation("diagnostics suite reported failures")
    return EXIT_OK


COMMANDS = {"simulate": _cmd_simulate, "run": _cmd_run, "compare": _cmd_compare, "plot": _cmd_plot,
            "check": _cmd_check}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, ContractViolation) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverFailure, DomainError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
