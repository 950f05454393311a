"""Command-line entry point: ``covsteer {solve,sweep,simulate,check-grad}``.

Exit status: 0 on success, 1 on solver failure (reason on stderr), 2 on
configuration errors.
"""

import argparse
import logging
import sys

from .config import load_config
from .errors import ConfigError, CovSteerError
from .experiment import run_gradient_check, run_lambda_sweep, run_reproduction, write_artifacts

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2

SUBCOMMANDS = {
    "solve": "run the proximal gradient solver; write trace.csv and result.json",
    "sweep": "solve once per sweep.lambda_values entry; write sweep.csv",
    "simulate": "solve, then sample trajectories with and without U and write PCA scatter data",
    "check-grad": "compare the adjoint gradient with central finite differences at the initial U",
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="TOML configuration file")
    common.add_argument("--out", default="./out", metavar="DIR", help="output directory (default: ./out)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. solver.lambda=0.3 (repeatable)")
    common.add_argument("--jobs", type=int, default=1, metavar="N", help="parallel solves for sweep (default: 1)")
    common.add_argument("--seed", type=int, default=None, metavar="S", help="override sampling.rng_seed")
    common.add_argument("-v", "--verbose", action="store_true", help="log every iteration")

    parser = argparse.ArgumentParser(
        prog="covsteer",
        description="Sparse structural covariance steering for discrete-time linear systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")
    for name, text in SUBCOMMANDS.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _run(args):
    config = load_config(args.config, args.overrides, args.seed)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")

    if args.command == "check-grad":
        audit = run_gradient_check(config)
        write_artifacts(audit.files, args.out)
        verdict = "PASS" if audit.passed else "FAIL"
        print(f"max relative deviation {audit.max_rel_deviation:.3e} (tolerance {audit.tolerance:g}): {verdict}")
        return EXIT_OK if audit.passed else EXIT_SOLVER

    if args.command == "sweep":
        rows, files = run_lambda_sweep(config, jobs=args.jobs)
        write_artifacts(files, args.out)
        for r in rows:
            print(f"lambda={r.lam:g} nnz={r.nnz} J={r.j:.6g} {r.status}")
        failed = [r for r in rows if r.status.startswith("error") or r.status == "stalled_unstable"]
        for r in failed:
            print(f"solve at lambda={r.lam:g} failed: {r.status}", file=sys.stderr)
        return EXIT_SOLVER if failed else EXIT_OK

    rep = run_reproduction(config, sample=args.command == "simulate")
    write_artifacts(rep.files, args.out)
    res = rep.result
    print(f"status={res.status.value} J={res.j_final:.6g} nnz={res.nnz} "
          f"l1={res.l1_norm:.6g} budget_satisfied={str(res.budget_satisfied).lower()}")
    if not rep.ok:
        print(f"solver stopped: {res.status.value}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"covsteer: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CovSteerError as exc:
        print(f"covsteer: solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
