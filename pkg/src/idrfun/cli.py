"""Command line front end.

Exit codes: 0 when every run converged, 2 when some run stopped at maxit,
3 on an unrecovered IDR breakdown, 1 for usage or input errors.
"""
from __future__ import annotations

import argparse
import sys

from .bench import CSV_HEADER, ExperimentConfig, MatrixSource, run_experiment
from .bilinear import SolveOptions
from .linalg import InvalidInputError
from .matfun import ScalarFunction, cos_scaled, exp_scaled, polynomial
from .matrices import ParseError
from .selftest import run_selftest

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MAXIT = 2
EXIT_BREAKDOWN = 3


class _Parser(argparse.ArgumentParser):
    """argparse parser that exits with status 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_matrix_spec(text: str) -> MatrixSource:
    """Parse grcar:N[:K], lap1d:N, or mm:PATH."""
    kind, sep, rest = text.partition(":")
    if not sep or not rest:
        raise InvalidInputError(f"malformed matrix spec {text!r}")
    if kind == "grcar":
        parts = rest.split(":")
        if len(parts) not in (1, 2):
            raise InvalidInputError(f"malformed matrix spec {text!r}")
        try:
            n = int(parts[0])
            k = int(parts[1]) if len(parts) == 2 else 3
        except ValueError as exc:
            raise InvalidInputError(f"malformed matrix spec {text!r}") from exc
        return MatrixSource("grcar", n=n, k=k)
    if kind == "lap1d":
        try:
            return MatrixSource("lap1d", n=int(rest))
        except ValueError as exc:
            raise InvalidInputError(f"malformed matrix spec {text!r}") from exc
    if kind == "mm":
        return MatrixSource("mm", path=rest)
    raise InvalidInputError(f"unknown matrix kind {kind!r}")


def parse_function_spec(text: str) -> ScalarFunction:
    """Parse exp, cos, or poly:c0,c1,..."""
    if text == "exp":
        return exp_scaled(1.0)
    if text == "cos":
        return cos_scaled(1.0)
    if text.startswith("poly:"):
        body = text[len("poly:") :]
        try:
            coeffs = [float(c) for c in body.split(",") if c != ""]
        except ValueError as exc:
            raise InvalidInputError(f"malformed coefficient list {body!r}") from exc
        if not coeffs:
            raise InvalidInputError("poly needs at least one coefficient")
        return polynomial(coeffs)
    raise InvalidInputError(f"unknown function {text!r}")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--matrix", required=True, help="grcar:N[:K] | lap1d:N | mm:PATH")
    parser.add_argument("--function", required=True, help="exp | cos | poly:c0,c1,...")
    parser.add_argument(
        "--h",
        action="append",
        type=float,
        default=None,
        help="scale parameter; repeat the flag for several values",
    )
    parser.add_argument("--s", type=int, default=6, help="IDR shadow dimension")
    parser.add_argument("--tol", type=float, default=1e-8, help="relative stopping tolerance")
    parser.add_argument("--maxit", type=int, default=300, help="largest basis size")
    parser.add_argument(
        "--method", choices=("idr", "arnoldi", "both"), default="idr"
    )
    parser.add_argument("--t0", choices=("zero", "h11"), default="h11")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--check-every", type=int, default=1, help="steps between estimate checks")
    parser.add_argument(
        "--exact", choices=("dense", "none"), default="none",
        help="dense adds the true relative error column",
    )
    parser.add_argument("--out", default="", metavar="PATH.csv", help="write per-step CSV here")


def _build_config(args) -> ExperimentConfig:
    source = parse_matrix_spec(args.matrix)
    function = parse_function_spec(args.function)
    h_values = args.h
    if function.kind in ("exp_scaled", "cos_scaled"):
        if not h_values:
            raise InvalidInputError("--h is required for exp and cos")
    elif not h_values:
        h_values = [0.0]  # placeholder column for polynomial runs
    opts = SolveOptions(
        s=args.s,
        tol=args.tol,
        maxit=args.maxit,
        method=args.method,
        t0_rule=args.t0,
        seed=args.seed,
        check_every=args.check_every,
    )
    return ExperimentConfig(
        source=source,
        function=function,
        h_values=tuple(h_values),
        opts=opts,
        compute_exact=args.exact == "dense",
        output_path=args.out,
    )


def _exit_code(summaries) -> int:
    terminations = {s.report.termination for s in summaries}
    if "idr_breakdown" in terminations:
        return EXIT_BREAKDOWN
    if "maxit" in terminations:
        return EXIT_MAXIT
    return EXIT_OK


def _print_summaries(summaries) -> None:
    for s in summaries:
        rep = s.report
        line = (
            f"method={s.method} h={s.h:g} converged={'yes' if rep.converged else 'no'}"
            f" termination={rep.termination} iter={rep.iterations} m={rep.m_final}"
            f" F={rep.final_value:.15e}"
        )
        if rep.steps:
            line += f" xi_rel={rep.steps[-1].xi_rel:.3e}"
            if rep.steps[-1].xi_true_rel is not None:
                line += f" xi_true_rel={rep.steps[-1].xi_true_rel:.3e}"
        line += f" cpu={rep.cpu_seconds:.3f}s"
        print(line)


def _cmd_solve(args) -> int:
    config = _build_config(args)
    _, summaries = run_experiment(config)
    _print_summaries(summaries)
    return _exit_code(summaries)


def _cmd_bench(args) -> int:
    config = _build_config(args)
    rows, summaries = run_experiment(config)
    print(CSV_HEADER)
    for row in rows:
        print(row.format())
    _print_summaries(summaries)
    if config.output_path:
        print(f"wrote {len(rows)} rows to {config.output_path}")
    return _exit_code(summaries)


def _cmd_selftest(_args) -> int:
    return EXIT_OK if run_selftest(verbose=True) else EXIT_USAGE


def build_parser() -> _Parser:
    parser = _Parser(prog="idrfun", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p_solve = sub.add_parser("solve", help="approximate u^T f(A) v and print a summary")
    _add_run_flags(p_solve)
    p_solve.set_defaults(func=_cmd_solve)
    p_bench = sub.add_parser("bench", help="run the experiment grid and emit per-step CSV")
    _add_run_flags(p_bench)
    p_bench.set_defaults(func=_cmd_bench)
    p_self = sub.add_parser("selftest", help="run built-in consistency checks")
    p_self.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, ParseError) as exc:
        print(f"idrfun: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"idrfun: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
