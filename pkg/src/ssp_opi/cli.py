"""Command-line driver.

    ssp-opi gen   --kind chain|random|grid ... [-o FILE]
    ssp-opi solve INSTANCE [-o FILE]
    ssp-opi run   [INSTANCE | --kind ...] --method mc|td [--lambda L] ...

Exit codes: 0 success, 1 io/parse error, 2 model assumption violated,
3 convergence or tolerance failure, 4 bad flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .diagnostics import summarize_run, write_csv, write_summary
from .dp import (
    DIRECT_SOLVE_LIMIT,
    contraction_certificate,
    exact_policy_iteration,
    greedy_policy,
    value_iteration,
)
from .exceptions import (
    ImproperPolicy,
    MaxIterExceeded,
    NotAllProper,
    ParseError,
    TruncatedSample,
    ValidationError,
)
from .instances import InstanceSpec, gen_chain, gen_gridworld, gen_random_proper, load_mdp, save_mdp
from .mdp import check_all_policies_proper
from .opi import OpiConfig, StepSchedule, run_opi

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_IO, EXIT_MODEL, EXIT_CONVERGENCE, EXIT_FLAGS = 0, 1, 2, 3, 4
AGREEMENT_TOL = 1e-8


class FlagError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FLAGS, f"{self.prog}: error: {message}\n")


def _gamma(text):
    try:
        a, b, p = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected a,b,p") from None
    return a, b, p


def _generator_flags(parser, required):
    g = parser.add_argument_group("instance generator")
    g.add_argument("--kind", choices=("chain", "random", "grid"), required=required)
    g.add_argument("--length", type=int, help="chain length")
    g.add_argument("--cost", type=float, default=1.0, help="step cost for chain and grid")
    g.add_argument("--n", type=int, default=5, help="states of a random instance")
    g.add_argument("--actions", type=int, default=3, help="actions per state of a random instance")
    g.add_argument("--eta", type=float, default=0.05, help="minimum termination probability")
    g.add_argument("--cost-lo", type=float, default=0.5)
    g.add_argument("--cost-hi", type=float, default=1.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--rows", type=int)
    g.add_argument("--cols", type=int)
    g.add_argument("--slip", type=float, default=0.1)


def build_parser():
    parser = _Parser(prog="ssp-opi", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate an instance file")
    _generator_flags(gen, required=True)
    gen.add_argument("-o", "--output", help="instance file (default: stdout)")

    solve = sub.add_parser("solve", help="solve an instance exactly")
    solve.add_argument("instance")
    solve.add_argument("-o", "--output", help="solution file (default: stdout)")
    solve.add_argument("--tol", type=float, default=1e-10, help="value iteration tolerance")

    run = sub.add_parser("run", help="run optimistic policy iteration")
    run.add_argument("instance", nargs="?")
    _generator_flags(run, required=False)
    run.add_argument("--method", choices=("mc", "td"), default="mc")
    run.add_argument("--lambda", dest="lam", type=float)
    run.add_argument("--iters", type=int, default=1000)
    run.add_argument("--run-seed", type=int, default=None,
                     help="simulation seed when --seed is used for the generator")
    run.add_argument("--gamma", type=_gamma, default=(1.0, 0.0, 1.0), help="step sizes a/(b+t+1)^p as a,b,p")
    run.add_argument("--record-every", type=int, default=100)
    run.add_argument("--cutoff", type=int, default=10**6)
    run.add_argument("--tol", type=float, help="fail with exit 3 unless the final error is at most TOL")
    run.add_argument("--tail-fraction", type=float, default=0.1)
    run.add_argument("--csv", default="run.csv", help="per-record CSV log ('-' for stdout)")
    run.add_argument("--summary", default="summary.json", help="JSON summary path")
    return parser


def _generate(args):
    if args.kind == "chain":
        if args.length is None:
            raise FlagError("--kind chain requires --length")
        return gen_chain(args.length, args.cost)
    if args.kind == "grid":
        if args.rows is None or args.cols is None:
            raise FlagError("--kind grid requires --rows and --cols")
        try:
            return gen_gridworld(args.rows, args.cols, args.slip, args.cost)
        except ValueError as exc:
            raise FlagError(str(exc)) from exc
    try:
        spec = InstanceSpec(kind="random_proper", n=args.n, actions_per_state=args.actions,
                            min_term_prob=args.eta, cost_lo=args.cost_lo, cost_hi=args.cost_hi,
                            seed=args.seed)
        return gen_random_proper(spec)
    except ValueError as exc:
        raise FlagError(str(exc)) from exc


def _describe(mdp):
    ok, _ = check_all_policies_proper(mdp)
    counts = ",".join(str(len(a)) for a in mdp.actions)
    return f"n={mdp.n} actions=[{counts}] all_proper={'true' if ok else 'false'}"


def _solve(mdp, tol=1e-10):
    """Both exact solvers plus the certificate; raises on disagreement."""
    ok, witness = check_all_policies_proper(mdp)
    if not ok:
        raise NotAllProper(f"trap states {sorted(witness[0])} admit an improper policy", witness)
    vi = value_iteration(mdp, tol=tol)
    if mdp.n > DIRECT_SOLVE_LIMIT:
        mu, J, pi_iters = greedy_policy(mdp, vi.value), vi.value, None
    else:
        mu, J, pi_iters = exact_policy_iteration(mdp)
        gap = float(np.max(np.abs(J - vi.value)))
        if gap > AGREEMENT_TOL:
            raise MaxIterExceeded(f"value and policy iteration disagree by {gap:.3e}")
    cert = contraction_certificate(mdp)
    return {
        "J_star": [float(v) for v in J],
        "policy": list(mu.choice),
        "iterations": {"value_iteration": vi.iterations, "policy_iteration": pi_iters},
        "residual": vi.residual,
        "contraction": {"xi": [float(x) for x in cert.xi], "beta": cert.beta},
    }


def _write_json(doc, path):
    if path in (None, "-"):
        json.dump(doc, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")


def cmd_gen(args):
    mdp = _generate(args)
    if args.output:
        save_mdp(mdp, args.output)
        print(_describe(mdp))
    else:
        _write_json(mdp.to_dict(), None)
        print(_describe(mdp), file=sys.stderr)
    return EXIT_OK


def cmd_solve(args):
    mdp = load_mdp(args.instance)
    doc = _solve(mdp, args.tol)
    _write_json(doc, args.output)
    return EXIT_OK


def cmd_run(args):
    if (args.instance is None) == (args.kind is None):
        raise FlagError("give exactly one instance source: a file or --kind generator flags")
    a, b, p = args.gamma
    seed = args.run_seed if args.run_seed is not None else args.seed
    try:
        config = OpiConfig(
            method=args.method,
            lam=args.lam,
            schedule=StepSchedule(a, b, p),
            iterations=args.iters,
            seed=seed,
            cutoff=args.cutoff,
            record_every=args.record_every,
        )
    except ValueError as exc:
        raise FlagError(str(exc)) from exc
    if not 0.0 < args.tail_fraction <= 1.0:
        raise FlagError("--tail-fraction must lie in (0, 1]")

    mdp = load_mdp(args.instance) if args.instance else _generate(args)
    oracle = None
    if mdp.n <= DIRECT_SOLVE_LIMIT:
        oracle = np.array(_solve(mdp)["J_star"])
    log = run_opi(mdp, config, oracle=oracle)

    if args.csv == "-":
        write_csv(log, sys.stdout)
    else:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            write_csv(log, fh)
    with open(args.summary, "w", encoding="utf-8") as fh:
        write_summary(log, fh, args.tail_fraction)

    summary = summarize_run(log, args.tail_fraction)
    print(
        f"final_error={summary.final_error} max_tail_ct={summary.max_tail_ct!r} "
        f"policy_switches={summary.policy_switch_count} max_sup_J={summary.max_sup_J!r}",
        file=sys.stderr if args.csv == "-" else sys.stdout,
    )
    if args.tol is not None:
        if summary.final_error is None or summary.final_error > args.tol:
            print(f"final error {summary.final_error} exceeds --tol {args.tol}", file=sys.stderr)
            return EXIT_CONVERGENCE
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "run": cmd_run}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except FlagError as exc:
        print(f"ssp-opi: error: {exc}", file=sys.stderr)
        return EXIT_FLAGS
    except (NotAllProper, ImproperPolicy, TruncatedSample) as exc:
        print(f"ssp-opi: model assumption violated: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except MaxIterExceeded as exc:
        print(f"ssp-opi: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (OSError, ParseError, ValidationError) as exc:
        print(f"ssp-opi: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
