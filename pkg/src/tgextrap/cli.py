"""Command-line harness for the experiment families.

    tgextrap run linear1 --method rre --width 4 --out trace.csv

Exit codes: 0 tolerance reached, 1 extrapolation failure, 2 iteration cap,
64 bad usage, 74 I/O failure.
"""

from __future__ import annotations

import argparse
import io
import math
import os
import sys

import numpy as np

from . import _kernels
from .block_linalg import format_block, stack
from .experiments import DEFAULT_DIMS, EXPERIMENTS, build_experiment
from .extrapolation import CycleConfig, run_cycles, run_plain
from .tensor_core import write_tensor

EXIT_OK, EXIT_METHOD, EXIT_CAP, EXIT_USAGE, EXIT_IO = 0, 1, 2, 64, 74
METHODS = ("none", "mpe", "rre", "arnoldi-mpe", "arnoldi-rre")
CSV_HEADER = "iter,rel_error,rel_residual,cpu_seconds,method"
DEFAULT_MAX_ITERS = 400
COMPLETION_MAX_ITERS = 100

# manifest keys, in write order
MANIFEST_KEYS = ("experiment", "method", "width", "skip", "max_cycles", "max_iters", "tol",
                 "seed", "dims", "rank", "p_obs", "noise", "cond")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dims(text: str) -> tuple:
    try:
        dims = tuple(int(t) for t in text.replace("x", ",").split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dims {text!r}") from None
    if not dims or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"dims must be positive integers, got {text!r}")
    return dims


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    parser = _Parser(prog="tgextrap", description="Tensor MPE/RRE extrapolation experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run one experiment and write a CSV trace")
    run.add_argument("experiment", nargs="?", choices=EXPERIMENTS,
                     help="experiment family (may come from --manifest)")
    run.add_argument("--method", choices=METHODS, default="rre")
    run.add_argument("--width", type=int, default=3, help="extrapolation width")
    run.add_argument("--skip", type=int, default=0, help="base steps skipped per cycle")
    run.add_argument("--max-cycles", type=int, default=100)
    run.add_argument("--max-iters", type=int, default=None,
                     help=f"base-step budget (default {DEFAULT_MAX_ITERS}, completion {COMPLETION_MAX_ITERS})")
    run.add_argument("--tol", type=float, default=1e-14)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--dims", type=_dims, default=None, help="comma separated, e.g. 5,4,3,3")
    run.add_argument("--rank", type=int, default=3, help="completion rank")
    run.add_argument("--p-obs", type=float, default=0.3, help="completion observation density")
    run.add_argument("--noise", type=float, default=1e-3, help="completion noise level")
    run.add_argument("--cond", type=float, default=10.0, help="linear operator condition number")
    run.add_argument("--out", default=None, help="CSV path (default stdout)")
    run.add_argument("--emit-manifest", default=None, metavar="PATH",
                     help="write a key=value manifest reproducing this run")
    run.add_argument("--manifest", default=None, metavar="PATH",
                     help="load settings from a manifest; explicit flags still win")
    run.add_argument("--dump-iterates", default=None, metavar="DIR",
                     help="write each extrapolation window and the final iterate")
    if defaults:
        run.set_defaults(**defaults)
    return parser


def read_manifest(path: str) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or key not in MANIFEST_KEYS:
                raise UsageError(f"{path}:{lineno}: unrecognized manifest line {line!r}")
            values[key] = value.strip()
    return values


def _manifest_defaults(values: dict) -> dict:
    conv = {"width": int, "skip": int, "max_cycles": int, "max_iters": int, "seed": int,
            "rank": int, "tol": float, "p_obs": float, "noise": float, "cond": float,
            "dims": _dims}
    out = {}
    for key, value in values.items():
        try:
            out[key] = conv[key](value) if key in conv else value
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"manifest value {key}={value!r}: {exc}") from None
    if out.get("experiment") not in (None,) + EXPERIMENTS:
        raise UsageError(f"manifest names unknown experiment {out['experiment']!r}")
    if out.get("method") not in (None,) + METHODS:
        raise UsageError(f"manifest names unknown method {out['method']!r}")
    return out


def format_manifest(args) -> str:
    lines = [f"# tgextrap run manifest; backend={'numba' if _kernels.USING_NUMBA else 'numpy'}"]
    for key in MANIFEST_KEYS:
        value = getattr(args, key)
        if key == "dims":
            value = ",".join(str(d) for d in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def _validate(args) -> None:
    if args.experiment is None:
        raise UsageError("an experiment name is required (positional or via --manifest)")
    if args.width < 1 or args.skip < 0 or args.max_cycles < 1:
        raise UsageError("need width >= 1, skip >= 0 and max-cycles >= 1")
    if not (math.isfinite(args.tol) and args.tol > 0):
        raise UsageError("tol must be a positive number")
    if args.max_iters < 1:
        raise UsageError("max-iters must be positive")
    want = len(DEFAULT_DIMS[args.experiment])
    if len(args.dims) != want:
        raise UsageError(f"{args.experiment} takes {want} dims, got {len(args.dims)}")
    if args.experiment == "completion":
        if args.rank < 1 or not 0 < args.p_obs <= 1 or args.noise < 0:
            raise UsageError("completion needs rank >= 1, 0 < p-obs <= 1 and noise >= 0")
    if not args.cond >= 1:
        raise UsageError("cond must be at least 1")


def resolve_args(argv=None):
    """Parse ``argv`` and merge manifest values under explicit flags."""
    args = build_parser().parse_args(argv)
    if args.manifest:
        defaults = _manifest_defaults(read_manifest(args.manifest))
        args = build_parser(defaults).parse_args(argv)
    if args.dims is None and args.experiment is not None:
        args.dims = DEFAULT_DIMS[args.experiment]
    if args.max_iters is None:
        args.max_iters = COMPLETION_MAX_ITERS if args.experiment == "completion" else DEFAULT_MAX_ITERS
    _validate(args)
    return args


def format_csv(trace) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in trace.records:
        buf.write(f"{r.iteration},{r.rel_error:.16e},{r.rel_residual:.16e},{r.cpu_seconds:.6f},{trace.method}\n")
    return buf.getvalue()


def execute(args):
    """Build the experiment and run it; returns the trace."""
    exp = build_experiment(args.experiment, args.dims, args.seed, rank=args.rank,
                           p_obs=args.p_obs, noise=args.noise, cond=args.cond)
    if args.method == "none":
        return run_plain(exp.step, exp.x0, args.max_iters, args.tol,
                         error_fn=exp.error_fn, residual_fn=exp.residual_fn)
    cfg = CycleConfig(width=args.width, skip=args.skip, max_cycles=args.max_cycles,
                      tol=args.tol, method=args.method)
    on_window = None
    if args.dump_iterates:
        def on_window(cycle, window):
            path = os.path.join(args.dump_iterates, f"window_{cycle:04d}.txt")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(format_block(stack(window.terms)))
    return run_cycles(exp.step, exp.x0, cfg, error_fn=exp.error_fn,
                      residual_fn=exp.residual_fn, max_steps=args.max_iters,
                      on_window=on_window)


def exit_code(trace, tol: float) -> int:
    if trace.status == "error":
        return EXIT_METHOD
    if trace.status == "converged":
        return EXIT_OK
    if trace.status == "fixed_point" and trace.records and trace.records[-1].rel_error <= tol:
        return EXIT_OK
    return EXIT_CAP


def main(argv=None) -> int:
    try:
        args = resolve_args(argv)
    except UsageError as exc:
        print(f"tgextrap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"tgextrap: cannot read manifest: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if args.emit_manifest:
            with open(args.emit_manifest, "w", encoding="utf-8") as fh:
                fh.write(format_manifest(args))
        if args.dump_iterates:
            os.makedirs(args.dump_iterates, exist_ok=True)
        trace = execute(args)
        text = format_csv(trace)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        if args.dump_iterates and trace.x is not None:
            write_tensor(os.path.join(args.dump_iterates, "final.txt"), trace.x)
    except OSError as exc:
        print(f"tgextrap: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    last = trace.records[-1] if trace.records else None
    summary = f"{args.experiment} method={args.method} status={trace.status} steps={trace.steps}"
    if last is not None:
        summary += f" rel_error={last.rel_error:.3e}"
    if trace.diagnostic:
        summary += f" ({trace.diagnostic})"
    print(summary, file=sys.stderr)
    return exit_code(trace, args.tol)


if __name__ == "__main__":
    sys.exit(main())
