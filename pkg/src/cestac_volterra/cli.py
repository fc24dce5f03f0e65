"""Command-line front end.

Exit status: 0 when a stopping rule fired, 2 when ``--max-n`` was reached,
3 when the run stopped on an unstable system, 64 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import secrets
import sys
from dataclasses import asdict, replace
from typing import Sequence

from .collocation import GRIDS, ProblemError, validate_problem
from .controller import (
    DEFAULT_MAX_N,
    FpaAbsolute,
    FpaCorrection,
    FpaDiscrepancy,
    IterationRecord,
    Measure,
    RunReport,
    SaSuccessive,
    run,
)
from .problems import EXAMPLE_IDS, ProblemFileError, builtin_example, load_problem
from .quadrature import DEFAULT_PANELS, QuadConfig
from .sa import SaConfig

EXIT_OK, EXIT_MAX_N, EXIT_UNSTABLE, EXIT_USAGE = 0, 2, 3, 64

HEADERS = ("n", "approximate solution", "difference of two term", "absolute error")
_RULES = {"fpa-abs": FpaAbsolute, "fpa-corr": FpaCorrection, "fpa-disc": FpaDiscrepancy}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cestac-volterra", description="Taylor-collocation solver with stochastic-arithmetic stopping.")
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--example", type=int, choices=EXAMPLE_IDS, help="built-in problem")
    src.add_argument("--problem", metavar="FILE", help="problem file")
    ap.add_argument("--mode", choices=("sa", *_RULES), default="sa")
    ap.add_argument("--eps", type=float, help="tolerance for the floating-point modes")
    ap.add_argument("--sweep-eps", metavar="LIST", help="comma-separated tolerances; report iterations per value")
    ap.add_argument("--point", type=float, help="query point r* (overrides the problem)")
    ap.add_argument("--center", type=float, help="Taylor center (overrides the problem)")
    ap.add_argument("--max-n", type=int, default=DEFAULT_MAX_N)
    ap.add_argument("--panels", type=int, default=DEFAULT_PANELS)
    ap.add_argument("--samples", type=int, default=3, help="stochastic samples per value")
    ap.add_argument("--tau", type=float, default=4.303, help="Student-t quantile")
    ap.add_argument("--seed", type=int, help="RNG seed (drawn from the OS when omitted)")
    ap.add_argument("--format", choices=("table", "csv", "jsonl"), default="table")
    ap.add_argument("--grid", choices=GRIDS, default="default")
    return ap


def _parse_eps_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--sweep-eps: not a list of numbers: {text!r}") from None
    if not values or any(not v > 0 for v in values):
        raise UsageError("--sweep-eps needs positive tolerances")
    return values


def _check_flags(args: argparse.Namespace) -> None:
    if args.mode == "sa":
        if args.eps is not None or args.sweep_eps is not None:
            raise UsageError("--eps and --sweep-eps apply to the floating-point modes only")
    elif args.sweep_eps is None and args.eps is None:
        raise UsageError(f"--mode {args.mode} needs --eps or --sweep-eps")
    elif args.sweep_eps is not None and args.eps is not None:
        raise UsageError("give either --eps or --sweep-eps, not both")
    if args.eps is not None and not args.eps > 0:
        raise UsageError("--eps must be positive")
    if args.max_n < 1:
        raise UsageError("--max-n must be >= 1")
    if args.panels < 2 or args.panels % 2:
        raise UsageError("--panels must be an even integer >= 2")
    if args.samples < 2:
        raise UsageError("--samples must be >= 2")
    if not args.tau > 0:
        raise UsageError("--tau must be positive")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be an unsigned 64-bit integer")


# --------------------------------------------------------------------------
# output


def _measure_fields(prefix: str, m: Measure | None) -> dict:
    if m is None:
        return {f"{prefix}": None, f"{prefix}_sigma": None, f"{prefix}_ncsd": None, f"{prefix}_text": None}
    return {f"{prefix}": m.mean, f"{prefix}_sigma": m.sigma, f"{prefix}_ncsd": m.ncsd, f"{prefix}_text": m.text}


def _flat(rec: IterationRecord) -> dict:
    row = {"n": rec.n}
    row.update(_measure_fields("v_n", rec.v_n))
    row.update(_measure_fields("diff", rec.diff))
    row.update(_measure_fields("err", rec.err))
    row["residual"] = rec.residual
    return row


def _summary(report: RunReport, label: str) -> dict:
    return {
        "problem": label,
        "mode": report.mode,
        "point": report.point,
        "seed": report.seed,
        "optimal_n": report.optimal_n,
        "optimal_value": report.optimal_value.text if report.optimal_value else None,
        "stop_reason": report.stop_reason,
        "instability_log": report.instability_log,
    }


def render_table(report: RunReport, label: str) -> str:
    rows = [[str(r.n), r.v_n.text, r.diff.text if r.diff else "", r.err.text if r.err else ""] for r in report.records]
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(HEADERS)]
    rule = "-" * (sum(widths) + 3 * (len(widths) - 1))
    out = [f"# {label}", f"# mode={report.mode} point={report.point!r}" + (f" seed={report.seed}" if report.seed is not None else "")]
    if report.mode == "sa" and any(r.err for r in report.records):
        out.append("# absolute error is shown for comparison only; the stop does not use it")
    out += [rule, "   ".join(h.ljust(w) for h, w in zip(HEADERS, widths)), rule]
    out += ["   ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    out.append(rule)
    out.append(f"# stop: {report.stop_reason}; optimal n={report.optimal_n}")
    out += [f"# instability: {msg}" for msg in report.instability_log]
    return "\n".join(out) + "\n"


def render_csv(report: RunReport) -> str:
    buf = io.StringIO()
    rows = [_flat(r) for r in report.records]
    fields = list(rows[0]) if rows else ["n"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def render_jsonl(report: RunReport, label: str) -> str:
    lines = [json.dumps({"record": asdict(r)}, sort_keys=True) for r in report.records]
    lines.append(json.dumps({"summary": _summary(report, label)}, sort_keys=True))
    return "\n".join(lines) + "\n"


def render(report: RunReport, label: str, fmt: str) -> str:
    if fmt == "csv":
        return render_csv(report)
    if fmt == "jsonl":
        return render_jsonl(report, label)
    return render_table(report, label)


def render_sweep(results: list[tuple[float, RunReport]], fmt: str) -> str:
    rows = [(eps, rep.optimal_n, rep.stop_reason) for eps, rep in results]
    if fmt == "jsonl":
        return "".join(json.dumps({"epsilon": e, "n": n, "stop_reason": s}) + "\n" for e, n, s in rows)
    if fmt == "csv":
        return "epsilon,n,stop_reason\n" + "".join(f"{e!r},{n},{s}\n" for e, n, s in rows)
    out = ["epsilon      n    stop"]
    out += [f"{e:<12.3g} {n:<4d} {s}" for e, n, s in rows]
    return "\n".join(out) + "\n"


def _exit_code(report: RunReport) -> int:
    if report.stop_reason.startswith("unstable"):
        return EXIT_UNSTABLE
    if report.stop_reason == "max_n reached":
        return EXIT_MAX_N
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _check_flags(args)
        sweep = _parse_eps_list(args.sweep_eps) if args.sweep_eps else None
    except UsageError as exc:
        print(f"cestac-volterra: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        problem = builtin_example(args.example) if args.example is not None else load_problem(args.problem)
        if args.center is not None:
            problem = replace(problem, c=args.center)
        if args.point is not None:
            problem = replace(problem, point=args.point)
        validate_problem(problem)
    except (ProblemFileError, ProblemError, OSError) as exc:
        print(f"cestac-volterra: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    quad = QuadConfig(panels=args.panels, singular_weight=problem.weight)
    if args.mode == "sa":
        seed = args.seed if args.seed is not None else secrets.randbits(63)
        sa = SaConfig(l=args.samples, tau=args.tau, rng_seed=seed)
        try:
            report = run(problem, SaSuccessive(), max_n=args.max_n, quad=quad, sa=sa, grid=args.grid)
        except ValueError as exc:
            print(f"cestac-volterra: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        sys.stdout.write(render(report, problem.label, args.format))
        return _exit_code(report)

    try:
        rule_type = _RULES[args.mode]
        if sweep is not None:
            results = [
                (eps, run(problem, rule_type(eps), max_n=args.max_n, quad=quad, grid=args.grid)) for eps in sweep
            ]
            sys.stdout.write(render_sweep(results, args.format))
            codes = [_exit_code(rep) for _, rep in results]
            return max(codes)
        report = run(problem, rule_type(args.eps), max_n=args.max_n, quad=quad, grid=args.grid)
    except ValueError as exc:
        print(f"cestac-volterra: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(render(report, problem.label, args.format))
    return _exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
