"""Command-line front end.

Exit codes: 0 success, 1 usage or validation error, 2 infeasible request.
"""

from __future__ import annotations

import argparse
import math
import secrets
import sys

from . import reports
from .analytic import UNREACHABLE, analytic_point, lambda0, lambda1
from .optimizer import (
    DEFAULT_M_MAX,
    DEFAULT_N_MAX,
    GridSpec,
    InfeasibleError,
    NRow,
    QRow,
    optimize,
    plan_bitstring,
    sweep_N,
    sweep_q,
)
from .protocol import Kind, ProtocolParams, Variant, run_ensemble, run_exact
from .quantum import ConfigurationError

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2
DEFAULT_SEED = 20201
DEFAULT_TRIALS = 100_000


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s!r}")
    return v


def _float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {s!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {s!r}")
    return v


def probability(s: str) -> float:
    v = _float(s)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {s!r}")
    return v


def target_probability(s: str) -> float:
    v = _float(s)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {s!r}")
    return v


def nonneg_float(s: str) -> float:
    v = _float(s)
    if v < 0.0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {s!r}")
    return v


def bit(s: str) -> int:
    if s not in ("0", "1"):
        raise argparse.ArgumentTypeError(f"must be 0 or 1, got {s!r}")
    return int(s)


def bit_string(s: str) -> str:
    if set(s) - {"0", "1"}:
        raise argparse.ArgumentTypeError(f"may only contain 0 and 1, got {s!r}")
    return s


def seed(s: str):
    if s == "random":
        return secrets.randbits(63)
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer or 'random', got {s!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"must lie in [0, 2**64), got {s!r}")
    return v


def _output_flags(p: argparse.ArgumentParser, default_format: str = "json") -> None:
    p.add_argument("--format", choices=("json", "csv"), default=default_format)
    p.add_argument("--out", metavar="PATH", help="write here instead of stdout (atomic replace)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zenolink", description="Counterfactual communication simulator and resource optimizer.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="evaluate the closed-form success and resource model at one (M, N)")
    p.add_argument("--m", type=positive_int, required=True)
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--q", type=probability, required=True, help="probability that the sent bit is 0")
    p.add_argument("--p", type=target_probability, help="target end-to-end success probability")
    p.add_argument("--tc", type=nonneg_float, help="round-trip time in seconds")
    _output_flags(p)

    p = sub.add_parser("simulate", help="exact distribution plus a seeded Monte Carlo ensemble")
    p.add_argument("--kind", choices=[k.value for k in Kind], default=Kind.NESTED.value)
    p.add_argument("--m", type=positive_int, default=1, help="outer cycles (nested only)")
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--bit", type=bit, required=True)
    p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.ORIGINAL.value)
    p.add_argument("--trials", type=positive_int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=seed, default=DEFAULT_SEED, help="integer, or 'random' for fresh entropy")
    _output_flags(p)

    p = sub.add_parser("optimize", help="minimize M*N*x over the (M, N) grid")
    p.add_argument("--q", type=probability, required=True)
    p.add_argument("--p", type=target_probability, required=True)
    p.add_argument("--m-max", type=positive_int, default=DEFAULT_M_MAX)
    p.add_argument("--n-max", type=positive_int, default=DEFAULT_N_MAX)
    p.add_argument("--tc", type=nonneg_float)
    p.add_argument("--grid", action="store_true", help="CSV: emit every grid cell instead of the summary row")
    _output_flags(p)

    p = sub.add_parser("sweep", help="CSV curves: rate and time vs N, or optimal cost vs q")
    p.add_argument("--axis", choices=("N", "q"), required=True)
    p.add_argument("--from", dest="start", type=_float, required=True)
    p.add_argument("--to", dest="stop", type=_float, required=True)
    p.add_argument("--step", type=_float, default=1.0)
    p.add_argument("--q", type=probability, default=0.5, help="source probability (N axis)")
    p.add_argument("--m", type=positive_int, default=2, help="outer cycles (N axis)")
    p.add_argument("--p", type=target_probability, default=0.975, help="target success (q axis)")
    p.add_argument("--m-max", type=positive_int, default=DEFAULT_M_MAX)
    p.add_argument("--n-max", type=positive_int, default=DEFAULT_N_MAX)
    _output_flags(p, default_format="csv")

    p = sub.add_parser("plan", help="trial, channel-use and time budget for a bit string")
    p.add_argument("--bits", type=bit_string, required=True)
    p.add_argument("--p", type=target_probability, required=True)
    p.add_argument("--m", type=positive_int, required=True)
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--tc", type=nonneg_float, default=1.0)
    _output_flags(p)
    return parser


def _emit(args, text: str) -> None:
    if args.out:
        reports.write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _range(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise ConfigurationError("--step must be positive")
    if stop < start:
        raise ConfigurationError("--to must not be below --from")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def cmd_analyze(args) -> int:
    pt = analytic_point(args.m, args.n, args.q, args.p, args.tc)
    row = pt.as_dict()
    cols = ["M", "N", "q", "lambda0", "lambda1", "lambda", "eta", "T_over_Tc", "delta"]
    if args.p is not None:
        cols += ["P", "x", "zeta"]
    else:
        for k in ("P", "x", "zeta"):
            row.pop(k)
    if args.tc is not None:
        cols += ["T_c", "T"]
    else:
        row.pop("T_c")
    if args.format == "csv":
        _emit(args, reports.to_csv([row], cols))
    else:
        _emit(args, reports.to_json("analyze", {"point": {k: row[k] for k in cols}}))
    if args.p is not None and pt.zeta is UNREACHABLE:
        print(
            f"zenolink: (M={args.m}, N={args.n}) cannot reach P={args.p} for q={args.q} "
            f"(lambda0={pt.lambda0:.6g}, lambda1={pt.lambda1:.6g})",
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = ProtocolParams(Kind(args.kind), args.n, args.bit, args.m, Variant(args.variant))
    exact = run_exact(params)
    stats = run_ensemble(params, args.trials, args.seed)
    rows = stats.comparison(exact)
    if args.format == "csv":
        _emit(args, reports.to_csv(rows, ["event", "erasure_known_by", "exact", "empirical", "stderr", "z"]))
        return EXIT_OK
    payload = {
        "params": params.as_dict(),
        "trials": stats.trials,
        "seed": args.seed,
        "exact": exact.as_dict(),
        "events": rows,
        "epsilon_hat": stats.epsilon_hat,
        "success_frequency": stats.successes / stats.trials,
        "f_histogram": {str(k): v for k, v in sorted(stats.f_hist.items())},
        "f_histogram_success": {str(k): v for k, v in sorted(stats.f_hist_success.items())},
        "expected_f_success": exact.f_success,
        "success_channel_visits": stats.success_channel_visits,
        "successes": stats.successes,
    }
    if params.kind is Kind.NESTED:
        analytic = lambda0(params.M) if params.bit == 0 else lambda1(params.M, params.N)
        payload["analytic"] = {
            "lambda_bit": analytic,
            "exact_correct_detector": exact.success,
            "exact_survival": exact.survival,
            "exact_bit_error": exact.bit_error,
            "gap_correct_detector": analytic - exact.success,
            "gap_survival": analytic - exact.survival,
        }
    _emit(args, reports.to_json("simulate", payload))
    return EXIT_OK


def cmd_optimize(args) -> int:
    result = optimize(GridSpec(args.q, args.p, args.m_max, args.n_max, args.tc))
    if args.format == "csv":
        if args.grid:
            rows = [p.as_dict() for p in result.grid]
            cols = ["M", "N", "q", "lambda0", "lambda1", "lambda", "eta", "T_over_Tc", "delta", "P", "x", "zeta"]
            _emit(args, reports.to_csv(rows, cols))
        else:
            summary = result.summary()
            _emit(args, reports.to_csv([summary], list(summary)))
    else:
        _emit(args, reports.to_json("optimize", {"result": result.as_dict()}))
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.axis == "N":
        if args.start != int(args.start) or args.stop != int(args.stop) or args.step != int(args.step):
            raise ConfigurationError("--from, --to and --step must be integers on the N axis")
        if args.start < 1:
            raise ConfigurationError("--from must be at least 1 on the N axis")
        values = [int(v) for v in _range(args.start, args.stop, args.step)]
        rows, cols = [r.as_row() for r in sweep_N(args.q, args.m, values)], NRow.COLUMNS
    else:
        values = _range(args.start, args.stop, args.step)
        if values[0] < 0.0 or values[-1] > 1.0:
            raise ConfigurationError("--from/--to must lie in [0, 1] on the q axis")
        rows, cols = [r.as_row() for r in sweep_q(args.p, values, args.m_max, args.n_max)], QRow.COLUMNS
    if args.format == "csv":
        _emit(args, reports.to_csv(rows, cols))
    else:
        _emit(args, reports.to_json("sweep", {"axis": args.axis, "columns": list(cols), "rows": rows}))
    return EXIT_OK


def cmd_plan(args) -> int:
    plan = plan_bitstring(args.bits, args.p, args.m, args.n, args.tc)
    rows = [
        {
            "position": i,
            "bit": b.bit,
            "lambda": b.lam,
            "x": b.x,
            "expected_trials": b.expected_trials,
            "worst_channel_uses": b.worst_channel_uses,
            "expected_channel_uses": b.expected_channel_uses,
            "worst_time": b.worst_time,
            "expected_time": b.expected_time,
        }
        for i, b in enumerate(plan.bits)
    ]
    if args.format == "csv":
        cols = ["position", "bit", "lambda", "x", "expected_trials", "worst_channel_uses",
                "expected_channel_uses", "worst_time", "expected_time"]
        _emit(args, reports.to_csv(rows, cols))
    else:
        payload = {
            "M": plan.M,
            "N": plan.N,
            "P": plan.P,
            "T_c": plan.T_c,
            "bits": rows,
            "totals": plan.totals(),
            "requires_modified_variant": plan.requires_modified_variant,
        }
        _emit(args, reports.to_json("plan", payload))
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "plan": cmd_plan,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InfeasibleError as exc:
        print(f"zenolink: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConfigurationError as exc:
        print(f"zenolink: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
