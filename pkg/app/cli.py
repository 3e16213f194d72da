"""Command-line surface: gen | expect | solve | verify | bench | sat.

Exit codes: 0 success, 1 semantic negative (not a CE, UNSAT, no convergence),
2 input or resource error.
"""

import argparse
import csv
import io
import json
import logging
import sys
import time

from app.equilibrium import (
    MixtureTrace,
    decode_distribution,
    encode_mixture,
    encode_report,
    solve_ce_explicit,
    solve_ce_mixture,
    verify_ce,
)
from app.errors import ConvergenceError, GameInputError, ToolkitError
from app.expectation import brute_expectation, expected_utility
from app.game_core import (
    ProductDistribution,
    aggregator_from_tag,
    decode_game,
    encode_explicit,
    encode_game,
    formula_from_dict,
    monte_carlo_expectation,
    random_game,
    random_product_distribution,
)
from app.hardness import decide_sat_via_expectation, parse_dimacs
from app.utils import get_setting, setup_logging

logger = logging.getLogger("polymatrix_ce.cli")

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2

BENCH_COLUMNS = ["n", "m", "agg", "fast_s", "brute_s", "abs_diff"]


class _ArgumentParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting so main() owns the exit code"""

    def error(self, message):
        raise GameInputError(message)


def format_value(value):
    return f"{value:.12g}"


def _int_list(text):
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise GameInputError(f"expected comma-separated integers, got '{text}'")


def _float_list(text):
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise GameInputError(f"expected comma-separated numbers, got '{text}'")


def _read_bytes(path):
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as e:
        raise GameInputError(f"cannot read {path}: {e}")


def _write_bytes(path, data):
    if path is None or path == "-":
        sys.stdout.write(data.decode("utf-8"))
        return
    try:
        with open(path, "wb") as f:
            f.write(data)
        logger.info(f"Wrote {len(data)} bytes to {path}")
    except OSError as e:
        raise GameInputError(f"cannot write {path}: {e}")


def _aggregator(args, n):
    """Aggregator from --agg/--coeffs/--formula, sorted-linear coefficients zero-padded to n-1"""
    coeffs = None
    if args.coeffs is not None:
        coeffs = _float_list(args.coeffs)
        if len(coeffs) > n - 1:
            raise GameInputError(f"{len(coeffs)} coefficients given but only {n - 1} opponents")
        coeffs = coeffs + [0.0] * (n - 1 - len(coeffs))
    formula = None
    if getattr(args, "formula", None) is not None:
        try:
            formula = formula_from_dict(json.loads(_read_bytes(args.formula)))
        except json.JSONDecodeError as e:
            raise GameInputError(f"formula file is not JSON: {e}")
    return aggregator_from_tag(args.agg, coeffs, formula)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args):
    counts = _int_list(args.counts) if args.counts else [2] * args.n
    game = random_game(args.n, counts, args.low, args.high, _aggregator(args, args.n), args.seed)
    _write_bytes(args.out, encode_game(game))
    return EXIT_OK


def cmd_expect(args):
    game = decode_game(_read_bytes(args.game))
    if args.uniform:
        x = ProductDistribution.uniform(game.strategy_counts)
    elif args.dist:
        x = decode_distribution(_read_bytes(args.dist), game.strategy_counts)
        if not isinstance(x, ProductDistribution):
            raise GameInputError("expect needs a product distribution file ('marginals')")
    else:
        raise GameInputError("pass --dist or --uniform")

    if args.method == "fast":
        value = expected_utility(game, args.player, x)
    elif args.method == "brute":
        value = brute_expectation(game, args.player, x)
    else:
        value = monte_carlo_expectation(game, args.player, x, args.samples, args.seed)
    print(format_value(value))
    return EXIT_OK


def cmd_solve(args):
    game = decode_game(_read_bytes(args.game))
    eps = get_setting("default_eps") if args.eps is None else args.eps
    if args.backend == "explicit":
        solution = solve_ce_explicit(game)
        data = encode_explicit(solution)
        components = len(solution.atoms)
    else:
        trace = MixtureTrace()
        try:
            solution = solve_ce_mixture(game, eps, args.max_rounds, trace=trace)
        except ConvergenceError as e:
            logger.error(f"Mixture solver did not converge: {e}")
            print(f"no convergence: {e}")
            return EXIT_NEGATIVE
        data = encode_mixture(solution)
        components = len(solution.components)

    verification = verify_ce(game, solution, eps)
    _write_bytes(args.out, data)
    print(f"components {components}")
    if args.backend == "mixture" and trace.fallback:
        print(f"fallback explicit after {len(trace.rounds)} rounds")
    elif args.backend == "mixture":
        print(f"rounds {trace.accepted_round}")
    print(f"max_violation {format_value(verification.report.max_violation)}")
    return EXIT_OK if verification.is_ce else EXIT_NEGATIVE


def cmd_verify(args):
    game = decode_game(_read_bytes(args.game))
    dist = decode_distribution(_read_bytes(args.dist), game.strategy_counts)
    eps = get_setting("default_eps") if args.eps is None else args.eps
    verification = verify_ce(game, dist, eps)
    report = verification.report
    if args.report:
        _write_bytes(args.report, encode_report(report))

    print(f"max_violation {format_value(report.max_violation)}")
    if verification.is_ce:
        print("is_ce true")
        return EXIT_OK
    p, i, j = report.witness
    print("is_ce false")
    print(f"witness p={p} i={i} j={j} g={format_value(report[p, i, j])}")
    return EXIT_NEGATIVE


def bench_records(ns, ms, agg_args, seeds, guard):
    """One record per (n, m, seed) in sorted order"""
    records = []
    for n in sorted(ns):
        aggregator = _aggregator(agg_args, n)
        for m in sorted(ms):
            for seed in sorted(seeds):
                game = random_game(n, [m] * n, 0.0, 1.0, aggregator, seed)
                x = random_product_distribution(game.strategy_counts, seed)

                start = time.perf_counter()
                fast = expected_utility(game, 0, x)
                fast_s = time.perf_counter() - start

                brute_s = abs_diff = None
                if game.profile_count <= guard:
                    start = time.perf_counter()
                    brute = brute_expectation(game, 0, x, guard=guard)
                    brute_s = time.perf_counter() - start
                    abs_diff = abs(fast - brute)
                logger.debug(f"bench n={n} m={m} seed={seed}: fast {fast_s:.4f}s brute {brute_s}")
                records.append({
                    "n": n, "m": m, "agg": aggregator.tag,
                    "fast_s": fast_s, "brute_s": brute_s, "abs_diff": abs_diff,
                })
    return records


def cmd_bench(args):
    if args.agg == "boolean_formula":
        raise GameInputError("bench supports sum, max, min and sorted_linear")
    guard = get_setting("enumeration_guard") if args.guard is None else args.guard
    records = bench_records(_int_list(args.n), _int_list(args.m), args, _int_list(args.seeds), guard)

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow({k: ("" if v is None else v) for k, v in record.items()})
    _write_bytes(args.csv, buffer.getvalue().encode("utf-8"))
    return EXIT_OK


def cmd_sat(args):
    try:
        text = _read_bytes(args.cnf).decode("utf-8")
    except UnicodeDecodeError as e:
        raise GameInputError(f"DIMACS file is not UTF-8: {e}")
    decision = decide_sat_via_expectation(parse_dimacs(text))
    print(f"{'SAT' if decision.satisfiable else 'UNSAT'} {format_value(decision.expectation)}")
    return EXIT_OK if decision.satisfiable else EXIT_NEGATIVE


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_aggregator_flags(parser, with_formula=True):
    parser.add_argument("--agg", default="max",
                        choices=["sum", "max", "min", "sorted_linear", "boolean_formula"])
    parser.add_argument("--coeffs", help="sorted_linear leading coefficients, comma-separated")
    if with_formula:
        parser.add_argument("--formula", help="JSON file holding a boolean formula AST")


def build_parser():
    parser = _ArgumentParser(prog="polymatrix-ce", description="Polymatrix expected utility and CE toolkit")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--no-log-file", action="store_true", help="log to stderr only")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    gen = sub.add_parser("gen", help="generate a random game file")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--counts", help="strategy counts, comma-separated (default 2 each)")
    _add_aggregator_flags(gen)
    gen.add_argument("--low", type=float, default=0.0)
    gen.add_argument("--high", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out")
    gen.set_defaults(handler=cmd_gen)

    expect = sub.add_parser("expect", help="expected utility of one player")
    expect.add_argument("--game", required=True)
    expect.add_argument("--player", type=int, default=0)
    expect.add_argument("--dist")
    expect.add_argument("--uniform", action="store_true")
    expect.add_argument("--method", default="fast", choices=["fast", "brute", "mc"])
    expect.add_argument("--samples", type=int, default=100_000)
    expect.add_argument("--seed", type=int, default=0)
    expect.set_defaults(handler=cmd_expect)

    solve = sub.add_parser("solve", help="compute a correlated equilibrium")
    solve.add_argument("--game", required=True)
    solve.add_argument("--backend", default="mixture", choices=["explicit", "mixture"])
    solve.add_argument("--eps", type=float)
    solve.add_argument("--max-rounds", type=int)
    solve.add_argument("--out")
    solve.set_defaults(handler=cmd_solve)

    verify = sub.add_parser("verify", help="check a distribution against the CE constraints")
    verify.add_argument("--game", required=True)
    verify.add_argument("--dist", required=True)
    verify.add_argument("--eps", type=float)
    verify.add_argument("--report", help="write the regret report JSON here")
    verify.set_defaults(handler=cmd_verify)

    bench = sub.add_parser("bench", help="time the fast path against enumeration")
    bench.add_argument("--n", default="2,3", help="player counts, comma-separated")
    bench.add_argument("--m", default="2", help="strategy counts, comma-separated")
    _add_aggregator_flags(bench, with_formula=False)
    bench.add_argument("--seeds", default="0")
    bench.add_argument("--guard", type=int)
    bench.add_argument("--csv")
    bench.set_defaults(handler=cmd_bench)

    sat = sub.add_parser("sat", help="decide a DIMACS CNF through the expectation reduction")
    sat.add_argument("cnf")
    sat.set_defaults(handler=cmd_sat)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except GameInputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR

    setup_logging(args.log_level, log_file=not args.no_log_file)
    logger.debug(f"Running {args.command} with {vars(args)}")
    try:
        return args.handler(args)
    except ToolkitError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
