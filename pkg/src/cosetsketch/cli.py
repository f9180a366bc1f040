"""``lattice-sketch``: build, merge and decode sketches, run the verification
suites and print space experiments.

Exit codes: 0 success, 1 a verification suite failed, 2 usage error,
3 malformed input, 4 kernel fingerprint mismatch, 5 enumeration budget refused.
With ``--json`` every failure prints ``{"status": "error", "code", "reason"}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction

from . import __version__
from . import budget as _budget
from .battery import battery_names, resolve_kernel
from .decode import estimate, worst_case_err_zero
from .lattice import bits, coset_count, kernel_document, quotient_shape, saturate
from .sketch import (
    MergeError, SketchError, compile_kernel, init, load_state, merge, process_stream, read_stream,
    serialize,
)
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_MALFORMED = 3
EXIT_FINGERPRINT = 4
EXIT_BUDGET = 5

DEFAULT_MS = "1,2,4,8"


class CliError(Exception):
    def __init__(self, code, reason):
        super().__init__(reason)
        self.code = code
        self.reason = reason


def _emit(text: str, out_path=None) -> None:
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _kernel(args):
    return resolve_kernel(args.kernel, getattr(args, "n", None))


# -- sketch ----------------------------------------------------------------------

def cmd_build(args):
    spec = compile_kernel(_kernel(args))
    records = read_stream(args.stream, spec.n)
    data = serialize(process_stream(spec, init(spec), records))
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode())
    return EXIT_OK


def cmd_merge(args):
    spec = compile_kernel(_kernel(args))
    states = [load_state(p, spec) for p in args.states]
    acc = states[0]
    for s in states[1:]:
        acc = merge(spec, acc, s)
    data = serialize(acc)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode())
    return EXIT_OK


def cmd_estimate(args):
    spec = compile_kernel(_kernel(args))
    s = load_state(args.state, spec)
    h = estimate(spec, s, saturated=args.saturate)
    if args.coord is not None:
        if not 1 <= args.coord <= spec.n:
            raise CliError(EXIT_MALFORMED, f"--coord must be in [1, {spec.n}]")
        value = h[args.coord - 1]
        print(json.dumps({"status": "ok", "coord": args.coord, "estimate": value}) if args.json else value)
    else:
        print(json.dumps({"status": "ok", "estimate": list(h)}) if args.json else json.dumps(list(h)))
    return EXIT_OK


def cmd_kernel(args):
    M = _kernel(args)
    shape = quotient_shape(M)
    doc = dict(kernel_document(M), rank=M.rank, free_rank=shape.free_rank,
               torsion=list(shape.torsion), saturated=saturate(M) == M,
               fingerprint=compile_kernel(M).fingerprint)
    print(json.dumps(doc))
    return EXIT_OK


# -- verify ------------------------------------------------------------------------

def cmd_verify(args):
    params = dict(n=args.n, m=args.m, trials=args.trials, seed=args.seed, kernel=args.kernel,
                  automaton=args.automaton, length=args.len, eps=args.eps, window=args.window,
                  samples=args.samples)
    res = run_suite(args.suite, **params)
    if args.json:
        print(json.dumps(dict(res.as_dict(), status="ok" if res.passed else "error",
                              reason=None if res.passed else "verification failed"), default=str))
    else:
        print(f"{res.name}: {'PASS' if res.passed else 'FAIL'} ({res.cases} cases)")
        for note in res.notes:
            print(f"  {note}")
        for skip in res.skipped:
            print(f"  skipped: {skip}")
        for fail in res.failures[:10]:
            print(f"  counterexample: {json.dumps(fail, default=str)}")
        if len(res.failures) > 10:
            print(f"  ... {len(res.failures) - 10} more")
    return EXIT_OK if res.passed else EXIT_VERIFY


# -- experiment --------------------------------------------------------------------

FIELDS = ["kernel", "n", "r", "eps_hat", "rank_bound", "in_window", "m", "coset_bits", "lower_bits", "status"]


def _window_abstract(eps, n) -> bool:
    # 1/(24 sqrt n) <= eps <= 1/32, compared exactly
    return eps > 0 and eps * eps * 576 * n >= 1 and eps <= Fraction(1, 32)


def experiment_rows(n, kernels, ms, eps_radius=None):
    radius = eps_radius if eps_radius is not None else max(ms)
    rows = []
    for name in kernels:
        base = {"kernel": name, "n": n}
        try:
            M = resolve_kernel(name, n)
            eps = worst_case_err_zero(saturate(M), radius)
            base.update(r=M.rank, eps_hat=str(eps),
                        rank_bound="inf" if eps == 0 else str(1 / (72 * eps * eps)),
                        in_window=_window_abstract(eps, n))
        except _budget.BudgetExceeded as exc:
            rows.append(dict(base, status=f"budget: {exc}"))
            continue
        for m in ms:
            row = dict(base, m=m)
            try:
                row["coset_bits"] = f"{bits(coset_count(M, m)):.6f}"
                row["lower_bits"] = f"{(M.n - M.rank) * math.log2(2 * m + 1):.6f}"
                row["status"] = "ok"
            except _budget.BudgetExceeded as exc:
                row["status"] = f"budget: {exc}"
            rows.append(row)
    return rows


def cmd_experiment(args):
    kernels = args.kernels.split(",") if args.kernels else battery_names(args.n)
    ms = [int(v) for v in args.ms.split(",")]
    if any(m < 0 for m in ms):
        raise CliError(EXIT_MALFORMED, "box radii must be nonnegative")
    rows = experiment_rows(args.n, kernels, ms, args.eps_radius)
    if args.format == "json":
        text = json.dumps(rows, indent=1) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in FIELDS})
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lattice-sketch", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--json", action="store_true", help="machine-readable output and errors")
    p.add_argument("--budget", type=int, help=f"enumeration budget (overrides {_budget.ENV_VAR})")
    sub = p.add_subparsers(dest="command", required=True)

    sk = sub.add_parser("sketch", help="build, merge and decode sketch states")
    sks = sk.add_subparsers(dest="action", required=True)

    def kernel_args(q, required=True):
        q.add_argument("--kernel", required=required, help="kernel JSON file or generator name")
        q.add_argument("--n", type=int, help="ambient dimension for named generators")

    b = sks.add_parser("build")
    kernel_args(b)
    b.add_argument("--stream", required=True)
    b.add_argument("--out")
    b.set_defaults(func=cmd_build)

    mg = sks.add_parser("merge")
    mg.add_argument("states", nargs="+")
    kernel_args(mg)
    mg.add_argument("--out")
    mg.set_defaults(func=cmd_merge)

    e = sks.add_parser("estimate")
    e.add_argument("state")
    kernel_args(e)
    e.add_argument("--coord", type=int, help="print only this 1-based coordinate")
    e.add_argument("--saturate", action="store_true", help="decode over the saturated kernel")
    e.set_defaults(func=cmd_estimate)

    k = sub.add_parser("kernel", help="show a kernel in canonical form")
    kernel_args(k)
    k.set_defaults(func=cmd_kernel)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=sorted(SUITES))
    v.add_argument("--n", type=int)
    v.add_argument("--m", type=int)
    v.add_argument("--trials", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--kernel")
    v.add_argument("--automaton", help="automaton JSON file or name such as clamped:3")
    v.add_argument("--len", type=int, help="stream length bound for output restriction")
    v.add_argument("--eps", help="epsilon as a fraction, e.g. 1/8")
    v.add_argument("--window", choices=["standard", "strict"])
    v.add_argument("--samples", type=int)
    v.set_defaults(func=cmd_verify)

    x = sub.add_parser("experiment", help="coset-count bits against the rank bound")
    x.add_argument("--n", type=int, default=3)
    x.add_argument("--kernels", help="comma-separated generator names or files (default: battery)")
    x.add_argument("--m", dest="ms", default=DEFAULT_MS, help="comma-separated box radii")
    x.add_argument("--eps-radius", type=int, help="box radius for the measured epsilon (default: largest m)")
    x.add_argument("--format", choices=["csv", "json"], default="csv")
    x.add_argument("--out")
    x.set_defaults(func=cmd_experiment)
    return p


def _fail(args_json: bool, code: int, reason: str) -> int:
    if args_json:
        print(json.dumps({"status": "error", "code": code, "reason": reason}))
    else:
        print(f"error: {reason}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    saved = os.environ.get(_budget.ENV_VAR)
    if args.budget is not None:
        if args.budget <= 0:
            return _fail(args.json, EXIT_USAGE, "--budget must be positive")
        os.environ[_budget.ENV_VAR] = str(args.budget)
    try:
        return _dispatch(args)
    finally:
        if saved is None:
            os.environ.pop(_budget.ENV_VAR, None)
        else:
            os.environ[_budget.ENV_VAR] = saved


def _dispatch(args) -> int:
    try:
        return args.func(args)
    except CliError as exc:
        return _fail(args.json, exc.code, exc.reason)
    except MergeError as exc:
        return _fail(args.json, EXIT_FINGERPRINT, str(exc))
    except _budget.BudgetExceeded as exc:
        return _fail(args.json, EXIT_BUDGET, str(exc))
    except (SketchError, ValueError, KeyError, OSError) as exc:
        return _fail(args.json, EXIT_MALFORMED, str(exc))


if __name__ == "__main__":
    sys.exit(main())
