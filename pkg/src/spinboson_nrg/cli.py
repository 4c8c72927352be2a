"""Command-line front end: point and sweep execution, presets, verification.

Exit codes: 0 success, 1 domain or configuration error, 2 verification
failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .engine import NRGConfig
from .observables import find_alpha_max
from .params import DomainError, SpinBosonPoint
from .sweep import (
    SweepSpec,
    preset,
    run_point,
    run_sweep,
    verify,
    write_output_path,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_VERIFY = 2
EXIT_IO = 3

_CONFIG_KEYS = {
    "lambda": float,
    "n_keep": int,
    "n_max": int,
    "eta": float,
    "plateau_tol": float,
    "degeneracy_tol": float,
    "plateau_window": int,
    "jobs": int,
    "format": str,
    "output": str,
}


class CLIError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are configuration errors
        raise CLIError(message)


def parse_axis(text: str) -> tuple[float, ...]:
    """Axis syntax: a single value, a comma list, or start:stop:step."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise CLIError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise CLIError("range step must be positive")
        count = int(round((stop - start) / step))
        values = [round(start + i * step, 12) for i in range(count + 1)]
        return tuple(v for v in values if v <= stop + 1e-12)
    return tuple(float(p) for p in text.split(",") if p.strip())


def read_config_file(path: str) -> dict:
    """Plain `key = value` lines; '#' starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CLIError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise CLIError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _CONFIG_KEYS[key](raw.strip())
    return values


def _add_solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="discretization parameter (> 1; default 2.0)")
    p.add_argument("--n-keep", type=int, default=None,
                   help="states kept per iteration (default 300)")
    p.add_argument("--n-max", type=int, default=None,
                   help="maximum number of iterations (default 300)")
    p.add_argument("--eta", type=float, default=None,
                   help="stop factor: iterate until omega_N < eta * Delta_r")
    p.add_argument("--paper-fidelity", action="store_true",
                   help="production settings: lambda 1.5, 1200 kept states")
    p.add_argument("--config", default=None, metavar="PATH",
                   help="key = value configuration file; flags win on conflict")
    p.add_argument("--verbose", action="store_true")


def _add_output_flags(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--output", default=None, metavar="PATH",
                   help="output file (default: stdout)")


def build_parser() -> _Parser:
    parser = _Parser(prog="spinboson-nrg",
                     description="dissipative two-level system ground-state "
                                 "observables and entanglement entropy")
    sub = parser.add_subparsers(dest="command", required=True)

    p_point = sub.add_parser("point", help="evaluate a single parameter point")
    p_point.add_argument("--alpha", type=float, required=True)
    p_point.add_argument("--eps-over-delta", type=float, default=0.0)
    p_point.add_argument("--delta-ratio", type=float, default=0.04)
    _add_solver_flags(p_point)
    _add_output_flags(p_point)

    p_sweep = sub.add_parser("sweep", help="evaluate a parameter grid")
    p_sweep.add_argument("--alpha", required=True,
                         help="value, comma list, or start:stop:step")
    p_sweep.add_argument("--eps-over-delta", default="0.0")
    p_sweep.add_argument("--delta-ratio", default="0.04")
    p_sweep.add_argument("--jobs", type=int, default=None)
    _add_solver_flags(p_sweep)
    _add_output_flags(p_sweep)

    p_preset = sub.add_parser("preset", help="run a predefined figure grid")
    p_preset.add_argument("name", choices=("fig1", "fig2", "fig3"))
    p_preset.add_argument("--jobs", type=int, default=None)
    _add_solver_flags(p_preset)
    _add_output_flags(p_preset)

    p_amax = sub.add_parser("alpha-max",
                            help="locate the entropy maximum over alpha")
    p_amax.add_argument("--eps-over-delta", type=float, required=True)
    p_amax.add_argument("--delta-ratio", type=float, default=0.04)
    _add_solver_flags(p_amax)
    _add_output_flags(p_amax)

    p_verify = sub.add_parser("verify", help="run the validation suites")
    _add_solver_flags(p_verify)

    return parser


_CONFIG_ATTRS = (("lambda", "lam"), ("n_keep", "n_keep"), ("n_max", "n_max"),
                 ("eta", "eta"), ("plateau_tol", "plateau_tol"),
                 ("degeneracy_tol", "degeneracy_tol"),
                 ("plateau_window", "plateau_window"))


def build_config(args, file_values: dict) -> NRGConfig:
    # precedence: defaults < config file < --paper-fidelity < explicit flags
    values = {}
    for file_key, attr in _CONFIG_ATTRS:
        if file_key in file_values:
            values[attr] = file_values[file_key]
    if getattr(args, "paper_fidelity", False):
        values.update(lam=1.5, n_keep=1200)
    for attr in ("lam", "n_keep", "n_max", "eta"):
        flag = getattr(args, attr, None)
        if flag is not None:
            values[attr] = flag
    return NRGConfig(**values)


def _resolved(args, file_values: dict, key: str, default):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in file_values:
        return file_values[key]
    return default


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        file_values = read_config_file(args.config) if args.config else {}
        cfg = build_config(args, file_values)
        fmt = _resolved(args, file_values, "format", "csv")
        output = _resolved(args, file_values, "output", None)
        verbose = args.verbose

        def progress(rec):
            if verbose:
                print(
                    f"  alpha={rec.alpha:g} eps/Delta={rec.eps_over_delta:g}"
                    f" Delta/wc={rec.delta_ratio:g}: sx={rec.sx:.6f}"
                    f" sz={rec.sz:.6f} E={rec.entropy:.6f} N_m={rec.n_m}"
                    f" converged={rec.converged}",
                    file=sys.stderr,
                )

        if args.command == "point":
            point = SpinBosonPoint(
                alpha=args.alpha,
                epsilon=args.eps_over_delta,
                delta_ratio=args.delta_ratio,
            )
            rec = run_point(point, cfg)
            progress(rec)
            write_output_path([rec], fmt, output, cfg)
            return EXIT_OK

        if args.command in ("sweep", "preset"):
            if args.command == "sweep":
                spec = SweepSpec(
                    alpha=parse_axis(args.alpha),
                    eps_over_delta=parse_axis(args.eps_over_delta),
                    delta_ratio=parse_axis(args.delta_ratio),
                )
                note = None
            else:
                spec = preset(args.name)
                note = (
                    f"preset {args.name}: grid values are representative"
                    " choices made by this package"
                )
            jobs = _resolved(args, file_values, "jobs", 1)
            records = run_sweep(spec, cfg, jobs=jobs, progress=progress)
            write_output_path(records, fmt, output, cfg, note)
            return EXIT_OK

        if args.command == "alpha-max":
            result = find_alpha_max(args.eps_over_delta, args.delta_ratio, cfg)
            print(f"alpha_M = {result.alpha_m:.4f}")
            print(f"E(alpha_M) = {result.entropy_max:.6f} bits")
            print(f"evaluations: {result.n_evaluations}")
            if output:
                import json

                with open(output, "w", encoding="utf-8") as fh:
                    json.dump(
                        {
                            "alpha_m": result.alpha_m,
                            "entropy_max": result.entropy_max,
                            "n_evaluations": result.n_evaluations,
                            "evaluations": result.evaluations,
                        },
                        fh,
                        indent=2,
                    )
            return EXIT_OK

        if args.command == "verify":
            report = verify(cfg)
            for check in report.checks:
                status = "pass" if check.passed else "FAIL"
                print(f"[{status}] {check.name}: {check.detail}")
            return EXIT_OK if report.passed else EXIT_VERIFY

        raise CLIError(f"unknown command {args.command!r}")

    except (CLIError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def app():
    raise SystemExit(main())
