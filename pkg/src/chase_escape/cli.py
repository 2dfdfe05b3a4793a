"""Command-line front end: simulate | exact | limits | sweep | verify.

Tabular output is CSV (header line, no quoting) or JSON (one object with
``rows`` and ``summary``).  Floats are written with ``repr`` so they parse
back to the same double.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import secrets
import sys

from . import limits
from .montecarlo import (
    SWEEP_COLUMNS,
    EnsembleConfig,
    Sampler,
    default_workers,
    run_replicas,
    sweep,
    verify_suite,
)
from .process import EXACT_MAX_N, ProcessParams, exact_absorption_law

EXIT_USAGE = 2
EXIT_RUNTIME = 1
MAX_EXIT = 125


class UsageError(Exception):
    """Bad flag values detected after parsing; exits with status 2."""


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "item"):  # numpy scalar
        return _cell(value.item())
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if hasattr(value, "item"):
        return _json_value(value.item())
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def write_table(rows: list[dict], columns, fmt: str, out, summary: dict | None = None) -> None:
    if fmt == "json":
        doc = {"rows": [_json_value({c: r.get(c) for c in columns}) for r in rows],
               "summary": _json_value(summary or {})}
        json.dump(doc, out, indent=1, allow_nan=False)
        out.write("\n")
        return
    writer = csv.writer(out, quoting=csv.QUOTE_NONE, escapechar="\\", lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in columns])


def read_csv(text: str) -> list[dict]:
    """Parse CSV written by :func:`write_table`; numbers come back as int or float."""
    def conv(v: str):
        if v == "":
            return None
        for kind in (int, float):
            try:
                return kind(v)
            except ValueError:
                pass
        return v

    reader = csv.reader(io.StringIO(text), quoting=csv.QUOTE_NONE, escapechar="\\")
    header = next(reader)
    return [dict(zip(header, map(conv, line))) for line in reader]


def _params(args) -> ProcessParams:
    try:
        return ProcessParams(args.n, args.lam)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _seed(args) -> int:
    if args.seed is None:
        seed = secrets.randbits(64)
        print(f"seed: {seed}", file=sys.stderr)
        return seed
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be in [0, 2**64)")
    return args.seed


def _workers(args) -> int:
    if args.workers is not None:
        if args.workers < 1:
            raise UsageError("--workers must be positive")
        return args.workers
    try:
        return default_workers()
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _positive(name: str, value: int) -> int:
    if value < 1:
        raise UsageError(f"{name} must be positive")
    return value


SIMULATE_COLUMNS = ("lambda", "n", "replica", "final_s", "final_i", "final_r", "cause", "jumps", "time")


def cmd_simulate(args, out) -> int:
    params = _params(args)
    cfg = EnsembleConfig(params, _positive("--replicas", args.replicas), Sampler(args.sampler),
                         _seed(args), _workers(args))
    summary = run_replicas(cfg)
    rows = []
    for k in range(summary.replicas):
        s, i, r = int(summary.s[k]), int(summary.i[k]), int(summary.r[k])
        t = float(summary.time[k])
        rows.append({
            "lambda": params.lam, "n": params.n, "replica": k,
            "final_s": s, "final_i": i, "final_r": r,
            "cause": "SusceptibleExtinct" if s == 0 else "InfectedExtinct",
            "jumps": int(summary.jumps[k]), "time": None if math.isnan(t) else t,
        })
    write_table(rows, SIMULATE_COLUMNS, args.format, out, summary.to_dict())
    if args.figure:
        from .plotting import plot_ensemble

        plot_ensemble(summary, args.figure)
    return 0


def cmd_exact(args, out) -> int:
    params = _params(args)
    if params.n > EXACT_MAX_N:
        raise UsageError(f"--n must be at most {EXACT_MAX_N} for the exact law")
    law = exact_absorption_law(params)
    rows = [{"s": st.s, "i": st.i, "r": st.r, "probability": p} for st, p in law.support]
    summary = {"lambda": params.lam, "n": params.n, "extinction_probability": law.extinction_probability}
    if args.format == "json":
        write_table(rows, ("s", "i", "r", "probability"), "json", out, summary)
    else:
        write_table(rows, ("s", "i", "r", "probability"), "csv", out)
        out.write(f"extinction_probability,,,{law.extinction_probability!r}\n")
    return 0


_LIMIT_OPS = {
    "powered-exp": {"cdf", "pdf", "quantile", "moment"},
    "compound": {"cdf", "pdf", "quantile", "moment"},
    "critical-r": {"cdf", "quantile"},
    "critical-i": {"cdf", "quantile"},
    "geometric": {"cdf", "pdf", "quantile"},
    "positive-geometric": {"cdf", "pdf", "quantile"},
}


def cmd_limits(args, out) -> int:
    if args.op not in _LIMIT_OPS[args.law]:
        raise UsageError(f"--op {args.op} is not available for --law {args.law}")
    try:
        law = limits.make_law(args.law, args.lam)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.op == "moment":
        if args.s is None:
            raise UsageError("--op moment needs --s")
        try:
            if args.law == "compound":
                value = limits.compound_exponential_moment(args.s, args.lam)
            else:
                # E[Exp(1)**(lam s)]
                if args.s <= -1.0 / args.lam:
                    raise ValueError(f"moment of order {args.s} does not exist")
                value = math.gamma(1.0 + args.lam * args.s)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        at = args.s
    else:
        if args.at is None:
            raise UsageError(f"--op {args.op} needs --at")
        at = args.at
        try:
            if args.op == "cdf":
                value = float(law.cdf(at))
            elif args.op == "quantile":
                value = float(law.quantile(at))
            elif law.discrete:
                value = law.pmf(at) if float(at).is_integer() and at >= law.offset else 0.0
            else:
                value = float(law.pdf(at))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    row = {"law": args.law, "lambda": args.lam, "op": args.op, "at": at, "value": value}
    write_table([row], ("law", "lambda", "op", "at", "value"), args.format, out)
    return 0


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    vals = _float_list(text)
    if any(not v.is_integer() for v in vals):
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return [int(v) for v in vals]


def cmd_sweep(args, out) -> int:
    if not args.lambda_list or not args.n_list:
        raise UsageError("--lambda-list and --n-list must be nonempty")
    template = EnsembleConfig(ProcessParams(1, 1.0), _positive("--replicas", args.replicas),
                              Sampler(args.sampler), _seed(args), _workers(args))
    grid = [(lam, n) for lam in args.lambda_list for n in args.n_list]
    rows = sweep(grid, template)
    write_table(rows, SWEEP_COLUMNS, args.format, out,
                {"points": len(rows), "failed_points": sum(bool(r["error"]) for r in rows)})
    if args.figure:
        from .plotting import plot_sweep

        plot_sweep(rows, args.figure)
    return 1 if any(r["error"] for r in rows) else 0


VERIFY_COLUMNS = ("name", "measured", "exact", "target", "tolerance", "passed", "detail")


def cmd_verify(args, out) -> int:
    report = verify_suite(args.level, _seed(args), _workers(args))
    doc = report.to_dict()
    rows = []
    for c in doc["checks"]:
        row = dict(c)
        row["detail"] = row["detail"].replace(",", ";")
        row["target"] = row["target"].replace(",", ";")
        row["tolerance"] = row["tolerance"].replace(",", ";")
        rows.append(row)
    write_table(rows, VERIFY_COLUMNS, args.format, out,
                {"level": doc["level"], "seed": doc["seed"], "failures": doc["failures"]})
    if args.figure:
        from .plotting import plot_verify

        plot_verify(doc, args.figure)
    return min(report.failures, MAX_EXIT)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chase-escape", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common_output(p):
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", default="-", help="output path, '-' for stdout")

    def ensemble_flags(p):
        p.add_argument("--replicas", type=int, default=1000)
        p.add_argument("--sampler", choices=[s.value for s in Sampler], default="jump")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: $CHASE_ESCAPE_THREADS or 1)")
        p.add_argument("--figure", default=None, help="also write a PNG figure to this path")

    p = sub.add_parser("simulate", help="sample absorbed states")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    ensemble_flags(p)
    common_output(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("exact", help="exact absorbed-state law by dynamic programming")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    common_output(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("limits", help="evaluate a limit law")
    p.add_argument("--law", choices=limits.LAW_NAMES, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--op", choices=("cdf", "pdf", "quantile", "moment"), default="cdf")
    p.add_argument("--at", type=float, default=None)
    p.add_argument("--s", type=float, default=None, help="moment order")
    common_output(p)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("sweep", help="ensemble summaries over a (lambda, n) grid")
    p.add_argument("--lambda-list", type=_float_list, required=True)
    p.add_argument("--n-list", type=_int_list, required=True)
    ensemble_flags(p)
    common_output(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--figure", default=None)
    common_output(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad flags
    try:
        if args.out == "-":
            return args.func(args, sys.stdout)
        buf = io.StringIO()
        code = args.func(args, buf)
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
        return code
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"{parser.prog}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
