"""
Command Line Entry Point

Subcommands:
    solve   run the predictor-corrector method on a problem file
    gen     write a strictly feasible random instance
    verify  run the barrier property suites

Exit codes: 0 success, 2 bad input, 3 iteration limit, 4 numerical
failure, 5 verification failure.
"""

import argparse
import re
import sys
from typing import List, Optional, Sequence

from pydantic import ValidationError

from ..core import get_settings, load_config_file
from ..core.exceptions import DimensionMismatch, McoptError, ParseError, RankDeficientA, VerificationFailure
from ..core.log import configure_logging, get_logger
from ..optimization.cones import ConeSpec
from ..optimization.initialization import choose_w_start
from ..optimization.model import SolverConfig, duality_gap, random_instance
from ..optimization.solver import SolveStatus, solve
from ..optimization.verification import FAMILIES, ensure_passed, run_suite, summary_frame
from .problem_io import load_problem_file, require_strict_start, write_problem, write_solution, write_trace_csv

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ITER_LIMIT = 3
EXIT_NUMERICAL = 4
EXIT_VERIFY = 5

_TOKEN = re.compile(r"^(nonneg|lorentz|psd):(\d+)(?:x(\d+))?$")


def parse_cone_tokens(text: str) -> List[ConeSpec]:
    """
    Expand a ``kind:dim[xCOUNT]`` list such as ``nonneg:4,lorentz:3x2,psd:2``.

    ``nonneg:k`` is k unit blocks, ``lorentz:d`` one cone of total
    dimension d and ``psd:p`` one cone of order p.
    """
    cones: List[ConeSpec] = []
    for raw in text.split(","):
        token = raw.strip().lower()
        match = _TOKEN.match(token)
        if not match:
            raise ParseError(f"bad cone token '{raw}' (expected kind:dim[xCOUNT])", field="cones")
        kind, dim, count = match.group(1), int(match.group(2)), int(match.group(3) or 1)
        if dim < 1 or count < 1:
            raise ParseError(f"cone token '{raw}' needs positive dim and count", field="cones")
        if kind == "nonneg":
            block = [ConeSpec.nonneg()] * dim
        elif kind == "lorentz":
            if dim < 2:
                raise ParseError(f"lorentz dim is the total dimension n+1 >= 2 in '{raw}'", field="cones")
            block = [ConeSpec.lorentz(dim - 1)]
        else:
            block = [ConeSpec.psd(dim)]
        cones.extend(block * count)
    return cones


def build_solver_config(args: argparse.Namespace) -> SolverConfig:
    """Command-line flags over the config file over settings and environment."""
    file_values = load_config_file(args.config).get("solver", {})
    flags = {
        "eps": args.eps,
        "beta1": args.beta1,
        "beta2": args.beta2,
        "max_outer_iters": args.max_iters,
        "verbose": args.verbose or None,
    }
    overrides = {**file_values, **{k: v for k, v in flags.items() if v is not None}}
    return SolverConfig.from_settings(**overrides)


def cmd_solve(args: argparse.Namespace) -> int:
    problem, start = load_problem_file(args.problem)
    u = require_strict_start(problem, start)
    cfg = build_solver_config(args)

    print(f"📂 Problem: {args.problem}")
    print(f"   🔷 Blocks: {problem.n_blocks}  m: {problem.m}  nu: {problem.nu_total}")
    w = choose_w_start(problem, u, cfg.bisection_tol)
    result = solve(problem, u, w, cfg)

    if args.trace:
        write_trace_csv(args.trace, result.trace)
        print(f"   📝 Trace written to {args.trace}")
    if args.out:
        write_solution(args.out, problem, result)
        print(f"   💾 Solution written to {args.out}")

    gap = duality_gap(problem, result.iterate)
    icon = "✅" if result.status is SolveStatus.CONVERGED else "❌"
    print(f"{icon} Status: {result.status.value}")
    print(f"   🔁 Iterations: {result.iterations} "
          f"({result.predictor_steps} predictor, {result.corrector_steps} corrector)")
    print(f"   📉 Gap: {gap:.6e}  v0: {result.controls.v0:.6e}")
    print(f"   🎯 Objective: {problem.objective(result.iterate.x):.12g}")
    if result.message:
        print(f"   ⚠️  {result.message}")

    if result.status is SolveStatus.ITER_LIMIT:
        return EXIT_ITER_LIMIT
    if result.status is SolveStatus.NUMERICAL_FAILURE:
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    cones = parse_cone_tokens(args.cones)
    problem, start = random_instance(args.seed, args.m, cones, centering=args.centering)
    write_problem(args.out, problem, start)
    print(f"✅ Instance written to {args.out}")
    print(f"   🔷 Blocks: {problem.n_blocks}  m: {problem.m}  nu: {problem.nu_total}  seed: {args.seed}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    settings = get_settings()
    file_values = load_config_file(args.config).get("verification", {})
    seed = args.seed if args.seed is not None else settings.seed
    samples = args.samples or file_values.get("samples") or settings.verify_samples
    family = args.family or file_values.get("family", "all")

    print(f"🔍 Verifying family '{family}' with {samples} samples (seed {seed})")
    results = run_suite(family, samples, seed, checks=args.check)
    frame = summary_frame(results)
    if args.csv:
        frame.to_csv(args.csv, index=False, float_format="%.6e")
        print(f"   📝 Summary written to {args.csv}")

    failed = frame[~frame["passed"]] if not frame.empty else frame
    for row in failed.itertuples(index=False):
        print(f"❌ {row.check} on {row.cone}: worst {row.worst:.3e} > {row.tolerance:.1e}")
    ensure_passed(results)
    print(f"✅ All {len(results)} checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcopt",
        description="Multiconic parabolic target-space interior-point solver",
    )
    parser.add_argument("--config", default=None, help="JSON defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="Solve a problem file")
    p_solve.add_argument("problem")
    p_solve.add_argument("--eps", type=float, default=None)
    p_solve.add_argument("--beta1", type=float, default=None)
    p_solve.add_argument("--beta2", type=float, default=None)
    p_solve.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p_solve.add_argument("--trace", default=None, help="Trace CSV output path")
    p_solve.add_argument("--out", default=None, help="Solution JSON output path")
    p_solve.add_argument("--verbose", action="store_true")
    p_solve.set_defaults(handler=cmd_solve)

    p_gen = sub.add_parser("gen", help="Generate a random strictly feasible instance")
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--m", type=int, required=True)
    p_gen.add_argument("--cones", required=True, help="e.g. nonneg:4,lorentz:3,psd:2")
    p_gen.add_argument("--centering", choices=["none", "per_cone", "global"], default="none")
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(handler=cmd_gen)

    p_verify = sub.add_parser("verify", help="Run the barrier property suites")
    p_verify.add_argument("--family", choices=sorted(FAMILIES) + ["all"], default=None)
    p_verify.add_argument("--samples", type=int, default=None)
    p_verify.add_argument("--seed", type=int, default=None)
    p_verify.add_argument("--check", action="append", default=None, help="Run only the named check")
    p_verify.add_argument("--csv", default=None, help="Summary CSV output path")
    p_verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    configure_logging(settings.log_level, settings.log_json)
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ParseError, RankDeficientA, DimensionMismatch) as e:
        where = f" [{e.field}]" if isinstance(e, ParseError) and e.field else ""
        line = f" (line {e.line})" if isinstance(e, ParseError) and e.line else ""
        print(f"❌ Input error{where}{line}: {str(e)}")
        return EXIT_INPUT
    except (ValidationError, ValueError) as e:
        print(f"❌ Invalid parameters: {str(e)}")
        return EXIT_INPUT
    except VerificationFailure as e:
        print(f"❌ {str(e)}")
        return EXIT_VERIFY
    except McoptError as e:
        logger.error("command_failed", command=args.command, error=str(e))
        print(f"❌ Numerical failure: {type(e).__name__}: {str(e)}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
