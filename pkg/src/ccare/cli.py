"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 malformed input or usage,
3 failed precondition, 4 solver failure, 5 no convergence.
"""

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import model
from .errors import (CcareError, DimensionMismatch, ParseError,
                     PreconditionFailed, UnknownExample)
from .iteration import (IterationConfig, Variant, check_preconditions,
                        compare_run, format_report, initial_iterates, run,
                        shift_sweep, trace_csv, write_atomic)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_SOLVER = 4
EXIT_NOT_CONVERGED = 5

_ALIASES = {"example1": "ivanov_example1"}


class UsageError(Exception):
    pass


def _fail(code, message):
    print(f"error: {message}", file=sys.stderr)
    return code


def load_problem_arg(spec):
    """A problem file path, or the name of a bundled example."""
    if os.path.exists(spec):
        return model.load_problem(spec)
    name = _ALIASES.get(spec, spec)
    if name in model.bundled_examples():
        return model.bundled_problem(name)
    raise ParseError(f"no such file or bundled example: {spec}")


def _floats(text, what):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad {what}: {text!r}") from None
    if not vals:
        raise UsageError(f"empty {what}")
    return vals


def parse_rho(text, N):
    """``auto``, ``auto:<margin>``, a scalar, or a comma list of N values.

    Returns ``(shifts, margin)`` with exactly one of them not None.
    """
    text = text.strip()
    if text == "auto":
        return None, model.DEFAULT_MARGIN
    if text.startswith("auto:"):
        try:
            margin = float(text[5:])
        except ValueError:
            raise UsageError(f"bad auto margin: {text!r}") from None
        if not margin > 0.0:
            raise UsageError("auto margin must be positive")
        return None, margin
    vals = _floats(text, "shift list")
    if len(vals) == 1:
        vals = vals * N
    if len(vals) != N:
        raise UsageError(f"expected {N} shifts, got {len(vals)}")
    if any(v < 0 or not np.isfinite(v) for v in vals):
        raise UsageError("shifts must be finite and nonnegative")
    return tuple(vals), None


def parse_init(text, p):
    """``zero``, ``identity:<c>`` or ``file:<path>``."""
    if text == "zero":
        return 0.0
    if text.startswith("identity:"):
        c = _floats(text[9:], "identity scale")
        if len(c) != 1 or c[0] < 0:
            raise UsageError("identity scale must be one nonnegative number")
        return c[0]
    if text.startswith("file:"):
        path = text[5:]
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ParseError(str(exc), field="init") from None
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, field="init", line=exc.lineno) from None
        if isinstance(data, dict):
            data = data.get("X")
        if not isinstance(data, list) or len(data) != p.N:
            raise ParseError(f"init file must hold {p.N} matrices", field="init")
        mats = [model._read_matrix(M, f"init[{i}]") for i, M in enumerate(data)]
        for i, M in enumerate(mats):
            if M.shape != (p.n, p.n):
                raise ParseError(f"expected {p.n}x{p.n}", field=f"init[{i}]")
        try:
            return initial_iterates(p, mats)
        except (DimensionMismatch, ValueError) as exc:
            if isinstance(exc, PreconditionFailed):
                raise
            raise ParseError(str(exc), field="init") from None
    raise UsageError(f"bad --init value {text!r}; use zero, identity:<c> or file:<path>")


def _config(args, p, rho=True, **extra):
    kw = dict(tol=args.tol, max_iter=args.max_iter, initial=parse_init(args.init, p))
    if rho:
        shifts, margin = parse_rho(args.rho, p.N)
        kw.update(shifts=shifts, shift_margin=margin or model.DEFAULT_MARGIN)
    kw.update(extra)
    try:
        return IterationConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_validate(args):
    p = load_problem_arg(args.problem)
    violations = model.validate(p)
    failed = False
    for v in violations:
        print(v)
        failed |= v.severity == "error"
    if failed:
        return EXIT_INVALID
    shifts, margin = parse_rho(args.rho, p.N)
    rho = shifts if shifts is not None else model.auto_shifts(p, margin)
    print("shifts: " + " ".join(repr(r) for r in rho))
    try:
        check_preconditions(p, rho)
    except PreconditionFailed as exc:
        print(f"error: {exc}")
        return EXIT_INVALID
    print("ok")
    return EXIT_OK


def cmd_solve(args):
    p = load_problem_arg(args.problem)
    cfg = _config(args, p, variant=Variant(args.variant))
    rep = run(p, cfg)
    out = _outdir(args)
    write_atomic(os.path.join(out, "report.txt"), format_report(rep))
    write_atomic(os.path.join(out, "trace.csv"), trace_csv(rep))
    print(f"{rep.variant}: converged={str(rep.converged).lower()} "
          f"iterations={rep.iterations} residual={rep.final_residual:.3e}")
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def ordering_csv(result):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sweep", "mode", "relation"])
    for c in result.pairs:
        w.writerow([c.sweep, c.mode, c.order.relation.value])
    return buf.getvalue()


def cmd_compare(args):
    p = load_problem_arg(args.problem)
    res = compare_run(p, _config(args, p))
    out = _outdir(args)
    for rep in (res.regular, res.accelerated):
        write_atomic(os.path.join(out, f"report_{rep.variant}.txt"), format_report(rep))
        write_atomic(os.path.join(out, f"trace_{rep.variant}.csv"), trace_csv(rep))
    write_atomic(os.path.join(out, "ordering.csv"), ordering_csv(res))
    for rep in (res.regular, res.accelerated):
        print(f"{rep.variant}: converged={str(rep.converged).lower()} "
              f"iterations={rep.iterations} residual={rep.final_residual:.3e}")
    expected = res.expected.value if res.expected else "Equal"
    print(f"ordering: expected {expected}, conforming {sum(map(res.conforms, res.pairs))}"
          f"/{len(res.pairs)}")
    both = res.regular.converged and res.accelerated.converged
    return EXIT_OK if both else EXIT_NOT_CONVERGED


def parse_rho_list(text, N):
    items = [t for t in text.split(";") if t.strip()]
    if not items:
        raise UsageError("empty shift list")
    out = []
    for item in items:
        shifts, _ = parse_rho(item, N)
        if shifts is None:
            raise UsageError("sweep needs explicit shift values, not auto")
        out.append(shifts)
    return out


def _fmt_rho(rho):
    if len(set(rho)) == 1:
        return repr(rho[0])
    return " ".join(repr(r) for r in rho)


def cmd_sweep(args):
    p = load_problem_arg(args.problem)
    shifts = parse_rho_list(args.rho, p.N)
    cfg = _config(args, p, rho=False)
    variants = (Variant.REGULAR, Variant.ACCELERATED) if args.variant == "both" \
        else (Variant(args.variant),)
    rows = shift_sweep(p, cfg, shifts, variants)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rho", "variant", "iterations", "residual", "converged"])
    for r in rows:
        w.writerow([_fmt_rho(r.shift), r.variant.value,
                    "" if r.iterations is None else r.iterations,
                    "" if r.final_residual is None else f"{r.final_residual:.6e}",
                    str(r.converged).lower()])
        status = r.error or f"{r.iterations} iterations, residual {r.final_residual:.2e}"
        print(f"rho={_fmt_rho(r.shift)} {r.variant.value}: {status}")
    write_atomic(os.path.join(_outdir(args), "sweep.csv"), buf.getvalue())
    if any(r.error for r in rows):
        return EXIT_SOLVER
    return EXIT_OK if all(r.converged for r in rows) else EXIT_NOT_CONVERGED


def cmd_example(args):
    text = model.bundled_text(_ALIASES.get(args.name, args.name))
    path = os.path.join(_outdir(args), f"{_ALIASES.get(args.name, args.name)}.json")
    write_atomic(path, text)
    print(path)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ccare",
        description="Riccati iterations for continuous coupled algebraic Riccati equations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(sp, variant=True, rho_help="auto[:margin] or comma list"):
        sp.add_argument("problem", help="problem file or bundled example name")
        if variant:
            sp.add_argument("--variant", choices=["regular", "accelerated"],
                            default="accelerated")
        sp.add_argument("--init", default="zero", help="zero | identity:<c> | file:<path>")
        sp.add_argument("--rho", default="auto", help=rho_help)
        sp.add_argument("--tol", type=float, default=1e-8)
        sp.add_argument("--max-iter", type=int, default=500)
        sp.add_argument("--out", default=".", help="output directory")

    sp = sub.add_parser("validate", help="check problem data and PBH preconditions")
    sp.add_argument("problem")
    sp.add_argument("--rho", default="auto")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("solve", help="run one iteration variant")
    solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("compare", help="run both variants and compare iterates")
    solver_flags(sp, variant=False)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("sweep", help="iteration counts over several shift vectors")
    solver_flags(sp, variant=False, rho_help="';'-separated shift vectors, e.g. 1.5;1.1;1.01")
    sp.add_argument("--variant", choices=["regular", "accelerated", "both"], default="both")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("example", help="write a bundled problem file")
    sp.add_argument("name")
    sp.add_argument("--out", default=".", help="output directory")
    sp.set_defaults(func=cmd_example)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_PARSE
    try:
        return args.func(args)
    except (ParseError, UnknownExample, UsageError) as exc:
        return _fail(EXIT_PARSE, exc)
    except PreconditionFailed as exc:
        return _fail(EXIT_PRECONDITION, exc)
    except CcareError as exc:
        return _fail(EXIT_SOLVER, exc)
    except (OSError, ValueError) as exc:
        return _fail(EXIT_PARSE, exc)
    except Exception as exc:  # noqa: BLE001 - every path must map to a documented code
        return _fail(EXIT_SOLVER, f"unexpected failure: {exc!r}")


if __name__ == "__main__":
    sys.exit(main())
