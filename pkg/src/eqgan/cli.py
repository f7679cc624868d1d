"""Command-line entry point: ``eqgan run|validate|list-experiments``.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
The ``EQGAN_OUTPUT_ROOT`` environment variable, when set, is the directory
that relative ``output_dir`` values are resolved against.
"""
from __future__ import annotations

import argparse
import os
import sys
import traceback
from pathlib import Path

from . import config as config_mod

OUTPUT_ROOT_ENV = "EQGAN_OUTPUT_ROOT"

DESCRIPTIONS = {
    "MODE_COLLAPSE": "exact Helstrom QuGAN oscillation vs EQ-GAN convergence on two states pi/3 apart",
    "EQGAN_VS_FROZEN_NOISY": "adversarial vs frozen swap test under biased Z errors after CZ gates",
    "VANISHING_GRADIENT": "frozen swap test stuck at a zero-gradient start; EQ-GAN escapes",
    "QRAM_TRAIN": "train the peak ansatz on both classes of the two-peak dataset",
    "QNN_COMPARE": "QNN trained by sampling vs by QRAM superpositions at equal query budgets",
    "SWEEP": "rerun a base experiment over a list of values for one numeric field",
}


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise config_mod.ConfigError([f"cannot read config {path!r}: {exc.strerror}"]) from exc


def output_dir(cfg: dict) -> Path:
    out = Path(cfg["output_dir"])
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not out.is_absolute():
        out = Path(root) / out
    return out


def cmd_validate(args) -> int:
    try:
        cfg, diags = config_mod.resolve(_read(args.config))
    except config_mod.ConfigError as exc:
        cfg, diags = None, exc.diagnostics
    for d in diags:
        print(f"{args.config}: {d}", file=sys.stderr)
    if not diags:
        print(config_mod.dump(cfg), end="")
    return 2 if diags else 0


def cmd_run(args) -> int:
    from .experiments import run

    try:
        cfg = config_mod.load(_read(args.config))
    except config_mod.ConfigError as exc:
        for d in exc.diagnostics:
            print(f"{args.config}: {d}", file=sys.stderr)
        return 2
    out = Path(args.output_dir) if args.output_dir else output_dir(cfg)
    try:
        summary = run(cfg, out)
    except Exception:  # runtime failures map to exit code 1
        traceback.print_exc()
        return 1
    print(summary.read_text(), end="")
    print(f"outputs written to {out}")
    return 0


def cmd_list(args) -> int:
    for name in config_mod.EXPERIMENTS:
        print(f"{name:24s} {DESCRIPTIONS[name]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eqgan", description="EQ-GAN simulation experiments")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--output-dir", help="override the config's output_dir")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("validate", help="check a config and print it with defaults filled in")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    ls = sub.add_parser("list-experiments", help="list experiment names")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
