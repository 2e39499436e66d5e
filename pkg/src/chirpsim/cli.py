"""Command-line interface.

Exit codes: 0 success, 2 validation failure (bad config, spec invariants, or
frequency certificate), 3 numerical failure (gap closure, quadrature, or
propagation errors).
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import harness, propagate, pulse, slowfn

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_SPEC_FLAGS = ("E", "v0", "v1", "eps1", "eps2", "alpha", "scheme", "N0")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="key=value config file")
    p.add_argument("--E", type=float)
    p.add_argument("--v0", type=float)
    p.add_argument("--v1", type=float)
    p.add_argument("--eps1", type=float)
    p.add_argument("--eps2", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--scheme", choices=("remark5", "s0", "s1"))
    p.add_argument("--N0", type=int)
    p.add_argument("--output", type=Path)
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chirpsim")
    sub = ap.add_subparsers(dest="command", required=True)

    for name in ("validate", "single", "trajectory", "eliminate-dump"):
        _add_common(sub.add_parser(name))

    p = sub.add_parser("sweep2d")
    _add_common(p)
    p.add_argument("--eps1-range", type=float, nargs=2, default=(0.05, 0.4))
    p.add_argument("--eps2-range", type=float, nargs=2, default=(0.05, 0.4))
    p.add_argument("--grid", type=int, nargs=2, default=(8, 8))

    p = sub.add_parser("sweep-alpha")
    _add_common(p)
    p.add_argument("--alpha-range", type=float, nargs=2, default=(-0.4, 0.4))
    p.add_argument("--alpha-n", type=int, default=41)

    for name in ("scaling", "compare", "rwa-only", "adiabatic-demo"):
        p = sub.add_parser(name)
        _add_common(p)
        p.add_argument("--eps-list", type=float, nargs="+")
        if name == "compare":
            p.add_argument("--mode", choices=("prop1", "rwa"), default="prop1")
            p.add_argument("--alpha-list", type=float, nargs="+",
                           default=(-0.25, 0.25))
        if name == "rwa-only":
            p.add_argument("--swapped", action="store_true")
    return ap


def _config_from_args(args) -> harness.ExperimentConfig:
    values = {}
    if args.config:
        raw = pulse.parse_config(args.config.read_text())
        for key in _SPEC_FLAGS:
            if key in raw:
                values[key] = (raw[key] if key == "scheme"
                               else int(raw[key]) if key == "N0"
                               else float(raw[key]))
    for key in _SPEC_FLAGS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    for src, dst in (("output", "output"), ("workers", "workers"),
                     ("mode", "mode")):
        v = getattr(args, src, None)
        if v is not None:
            values[dst] = str(v) if dst == "output" else v
    if getattr(args, "eps_list", None):
        values["eps_list"] = tuple(args.eps_list)
    if getattr(args, "alpha_list", None) is not None and hasattr(args, "mode"):
        values["alpha_list"] = tuple(args.alpha_list)
    if hasattr(args, "eps1_range"):
        values["eps1_range"] = tuple(args.eps1_range)
        values["eps2_range"] = tuple(args.eps2_range)
        values["grid_n1"], values["grid_n2"] = args.grid
    if hasattr(args, "alpha_range"):
        values["alpha_range"] = tuple(args.alpha_range)
        values["alpha_n"] = args.alpha_n
    values["experiment"] = args.command
    return harness.ExperimentConfig(**values)


def _cmd_validate(cfg: harness.ExperimentConfig) -> int:
    spec = cfg.spec()
    report = pulse.validate(spec)
    for f in dataclasses.fields(report):
        if f.name != "messages":
            print(f"{f.name}: {getattr(report, f.name)}")
    print(f"ok: {report.ok}")
    print(f"theorem_ok: {report.theorem_ok}")
    for msg in report.messages:
        print(f"note: {msg}")
    cert = pulse.certify_frequencies(pulse.frequencies(spec))
    print(f"min_lambda: {min(cert.min_lambda.values()):.6g}")
    print(f"min_phi: {min(cert.min_phi.values()):.6g}")
    print(f"min_f2_minus_2f1: {cert.min_f2_minus_2f1:.6g}")
    print(f"certificate_ok: {cert.ok}")
    return EXIT_OK if report.ok and cert.ok else EXIT_VALIDATION


def _cmd_single(cfg: harness.ExperimentConfig) -> int:
    row = harness.run_single(cfg)
    for f in dataclasses.fields(row):
        print(f"{f.name}: {getattr(row, f.name)}")
    return EXIT_OK


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "validate":
            return _cmd_validate(cfg)
        if args.command == "single":
            return _cmd_single(cfg)
        if args.command == "sweep2d":
            print(harness.sweep2d(cfg), end="")
        elif args.command == "sweep-alpha":
            print(harness.sweep_alpha(cfg), end="")
        elif args.command == "scaling":
            text, slope, target = harness.scaling_study(cfg)
            print(text, end="")
            print(f"# slope={slope:.6g} target={target:.6g}")
        elif args.command == "compare":
            out = harness.compare_real_complex(cfg)
            print(out[0], end="")
        elif args.command == "rwa-only":
            text, _ = harness.rwa_only_study(cfg, swapped=getattr(
                args, "swapped", False))
            print(text, end="")
        elif args.command == "adiabatic-demo":
            text, slope = harness.adiabatic_demo(cfg)
            print(text, end="")
            print(f"# slope={slope:.6g}")
        elif args.command == "trajectory":
            print(harness.trajectory_dump(cfg), end="")
        elif args.command == "eliminate-dump":
            print(harness.eliminate_dump(cfg), end="")
        return EXIT_OK
    except (harness.NumericalFailure, slowfn.CertificateError,
            ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (harness.ValidationFailure, ValueError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main():
    raise SystemExit(run())


if __name__ == "__main__":
    main()
