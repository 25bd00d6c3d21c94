"""Command-line front end: ``compute``, ``verify`` and ``bench``.

Exit codes: 0 success, 1 failed check, 2 invalid input, 3 near-pole abort.
Standard output carries only the serialized records, one per line.
"""

import argparse
import csv
import io
import json
import math
import sys
import time

from . import checks
from .algebra import partition_oracle
from .determinant import partition_determinant
from .exceptions import DomainError, InvalidNomeError, NearPoleError, ValidationError
from .fbasis import partition_fbasis
from .model import load_params, params_to_json, random_params, validate

__all__ = ["main", "main_exit", "build_parser", "dumps", "ORACLE_CAP"]

EXIT_OK, EXIT_VERIFY, EXIT_VALIDATION, EXIT_POLE = 0, 1, 2, 3

#: Largest ``N`` for the dense operator routes.
ORACLE_CAP = 12

METHODS = {"oracle": partition_oracle, "fbasis": partition_fbasis,
           "determinant": partition_determinant}


class UsageError(Exception):
    """Invalid command-line input (maps to exit code 2)."""


# ---------------------------------------------------------------------------
# serialization

def _encode(obj):
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format(obj, ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, complex):
        return _encode([obj.real, obj.imag])
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if hasattr(obj, "item"):
        return _encode(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    """JSON text with every float written to 17 significant digits."""
    return _encode(obj)


def _emit_records(records, fmt, out):
    if fmt == "json":
        for rec in records:
            out.write(dumps(rec) + "\n")
        return
    if not records:
        return
    fields = []
    for rec in records:
        fields.extend(k for k in rec if k not in fields)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow({k: _csv_cell(v) for k, v in rec.items()})
    out.write(buf.getvalue())


def _csv_cell(v):
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (dict, list, tuple, complex)):
        return dumps(v)
    return v


# ---------------------------------------------------------------------------
# argument parsing

def _tolerance(text):
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected name=float, got {text!r}")
    try:
        return name, float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad tolerance value in {text!r}") from exc


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", metavar="FILE", help="JSON parameter file")
    common.add_argument("--n", type=int, default=None, help="number of sites")
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("--p-mag", type=float, default=0.1, help="modulus of the random nome")
    common.add_argument("--method", choices=[*METHODS, "all"], default="determinant")
    common.add_argument("--format", choices=["json", "csv"], default="json", dest="fmt")
    common.add_argument("--check", action="append", default=[], metavar="NAME",
                        help="run only this check (repeatable)")
    common.add_argument("--tol", action="append", default=[], type=_tolerance,
                        metavar="NAME=FLOAT", help="override a check threshold")
    common.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="reflsos", description="Partition function of the elliptic SOS model "
                                    "with a reflecting end.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("compute", parents=[common], help="evaluate Z")
    sub.add_parser("verify", parents=[common], help="run the identity checks")
    sub.add_parser("bench", parents=[common], help="time oracle against determinant")
    return parser


# ---------------------------------------------------------------------------
# subcommands

def _load(args):
    """Parameters from ``--params`` or random generation; random spec or None."""
    if args.params:
        try:
            params = load_params(args.params)
        except OSError as exc:
            raise UsageError(f"cannot read {args.params}: {exc}") from exc
        return validate(params), None
    n = 2 if args.n is None else args.n
    if n < 1:
        raise UsageError(f"--n must be >= 1, got {n}")
    spec = {"n_sites": n, "seed": args.seed, "p_mag": args.p_mag}
    return random_params(n, args.seed, args.p_mag), spec


def run_compute(args, out):
    params, spec = _load(args)
    methods = list(METHODS) if args.method == "all" else [args.method]
    n = params.n_sites
    if n > ORACLE_CAP and any(m in ("oracle", "fbasis") for m in methods):
        raise UsageError(f"oracle and fbasis are capped at N <= {ORACLE_CAP}, got N = {n}")
    results = {m: METHODS[m](params) for m in methods}
    records = []
    if spec is not None:
        records.append({"params": params_to_json(params), **spec})
    oracle = results.get("oracle")
    for m in methods:
        rec = results[m].to_dict()
        if oracle is not None and m != "oracle":
            rec["residual_vs_oracle"] = _relative(results[m], oracle)
        records.append(rec)
    if args.fmt == "csv" and spec is not None:
        head = records.pop(0)
        for rec in records:
            rec.update({k: head[k] for k in ("n_sites", "seed", "p_mag")})
            rec["params"] = head["params"]
    _emit_records(records, args.fmt, out)
    return EXIT_OK


def _relative(res, ref):
    if res.log_value is not None and ref.log_value is not None and (
            res.value is None or ref.value is None):
        # Both magnitudes overflow; compare in logarithmic form.
        d = res.log_value - ref.log_value
        d = complex(d.real, math.remainder(d.imag, 2 * math.pi))
        return abs(d)
    a, b = res.value, ref.value
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def run_verify(args, out):
    if args.params:
        print("note: verify draws its own parameter sets; --params is ignored",
              file=sys.stderr)
    n_max = 4 if args.n is None else args.n
    if n_max < 1:
        raise UsageError(f"--n must be >= 1, got {n_max}")
    cfg = checks.VerifyConfig(n_max=n_max, seeds=tuple(range(args.seed, args.seed + 20)),
                              p_magnitude=args.p_mag, tolerances=dict(args.tol),
                              inject_fault=args.inject_fault)
    names = args.check or None
    try:
        results = checks.run_checks(cfg, names)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    _emit_records([r.to_dict() for r in results], args.fmt, out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def _best_time(fn, params, budget=0.2, repeats=3):
    """Minimum of up to ``repeats`` runs while the total stays under ``budget``."""
    best, spent, result = math.inf, 0.0, None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(params)
        t = time.perf_counter() - start
        best, spent = min(best, t), spent + t
        if spent > budget:
            break
    return best, result


def bench_rows(n_max, seed=0, p_mag=0.1, notes=None):
    """Timing rows for ``N = 1 .. 2 n_max``; the oracle runs for ``N <= min(n_max, cap)``."""
    rows = []
    oracle_max = min(n_max, ORACLE_CAP)
    if n_max > ORACLE_CAP and notes is not None:
        notes.append(f"oracle rows omitted for N > {ORACLE_CAP}")
    for n in range(1, 2 * n_max + 1):
        params = random_params(n, seed, p_mag)
        t_det, det = _best_time(partition_determinant, params)
        row = {"N": n, "t_oracle_s": None, "t_det_s": t_det, "rel_diff": None}
        if n <= oracle_max:
            t_or, orc = _best_time(partition_oracle, params)
            row["t_oracle_s"] = t_or
            row["rel_diff"] = _relative(det, orc)
        rows.append(row)
    return rows


def run_bench(args, out):
    if args.params:
        print("note: bench draws its own parameter sets; --params is ignored", file=sys.stderr)
    n_max = 8 if args.n is None else args.n
    if n_max < 1:
        raise UsageError(f"--n must be >= 1, got {n_max}")
    notes = []
    rows = bench_rows(n_max, args.seed, args.p_mag, notes)
    for note in notes:
        print(f"note: {note}", file=sys.stderr)
    if args.fmt == "json":
        _emit_records(rows, "json", out)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["N", "t_oracle_s", "t_det_s", "rel_diff"])
        for r in rows:
            writer.writerow([r["N"]] + ["" if r[k] is None else format(r[k], ".17g")
                                        for k in ("t_oracle_s", "t_det_s", "rel_diff")])
        out.write(buf.getvalue())
    return EXIT_OK


def main_exit():
    """Console-script wrapper around :func:`main`."""
    sys.exit(main())


COMMANDS = {"compute": run_compute, "verify": run_verify, "bench": run_bench}


def main(argv=None, out=None):
    """Entry point; returns the exit status."""
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args, out)
    except NearPoleError as exc:
        print(f"error: near pole: {exc}", file=sys.stderr)
        return EXIT_POLE
    except (UsageError, ValidationError, InvalidNomeError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
