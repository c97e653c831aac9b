"""Command-line entry point ``zk``.

    zk run <preset|config.ini> --out DIR [--seed N] [--snapshots K]
    zk check <config.ini>
    zk norms --input u0.csv [--bc a] [--L 1] [--weight const]

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or
configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import PRESET_NAMES, ConfigValidationError, load_config
from .diagnostics import weighted_norm
from .io import FormatError, read_field_csv, round_floats
from .operators import GridError, GridSpec, SingularMatrixError
from .solver import BlowUpError, ConfigError
from .transverse import TransverseBasis, TransverseError
from .weights import WeightError, parse_weight

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("zkstrip")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zk", description="ZK half-strip simulator and verification toolkit")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a preset or a configuration file")
    r.add_argument("target", help=f"preset name ({', '.join(PRESET_NAMES)}) or path to a config file")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, default=None, help="seed for randomized inputs")
    r.add_argument("--snapshots", type=int, default=None, help="approximate number of snapshots to write")

    c = sub.add_parser("check", help="validate a configuration file")
    c.add_argument("config")

    n = sub.add_parser("norms", help="weighted norms of a field given as x, y, u CSV")
    n.add_argument("--input", required=True)
    n.add_argument("--bc", default="a", help="transverse boundary case a|b|c|d")
    n.add_argument("--L", type=float, default=None, help="strip width (default: inferred from the nodes)")
    n.add_argument("--weight", default="const", help="exp:alpha=A, pow:alpha=A or const")
    return p


def _infer_basis(y, case, L):
    """Match the y samples to the collocation nodes of ``case``."""
    n = len(y)
    candidates = [L] if L else []
    if not L:
        # invert the node formulas for each case from the first node
        gaps = {"a": n + 1, "b": 2 * n, "c": 2 * n, "d": None}
        if case == "d":
            candidates.append(n * (y[1] - y[0]) if n > 1 else 1.0)
        else:
            candidates.append(y[0] * gaps[case] if case in gaps else 1.0)
    for Lc in candidates:
        basis = TransverseBasis(case, Lc, n)
        if np.allclose(basis.nodes, y, rtol=0, atol=1e-8 * Lc):
            return basis
    raise FormatError(f"y samples do not match the case-{case} collocation nodes")


def cmd_norms(args) -> int:
    x, y, u = read_field_csv(args.input)
    basis = _infer_basis(y, args.bc, args.L)
    if not np.allclose(np.diff(x), x[1] - x[0], rtol=1e-8):
        raise FormatError("x samples must be equispaced")
    if abs(x[0]) > 1e-12:
        raise FormatError("x samples must start at 0")
    grid = GridSpec(float(x[-1]), len(x), basis)
    w = parse_weight(args.weight)
    res = {
        "input": args.input,
        "bc": basis.case.value,
        "L": basis.L,
        "n_x": len(x),
        "n_modes": basis.n_modes,
        "weight": str(w),
        "norms": {f"k{k}": weighted_norm(u, grid, w, k) for k in (0, 1, 2)},
    }
    print(json.dumps(round_floats(res), indent=2, sort_keys=True))
    return EXIT_PASS


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    print(f"{args.config}: ok (preset {cfg.run.preset}, case {cfg.grid.bc}, admissible {cfg.admissible})")
    return EXIT_PASS


def cmd_run(args) -> int:
    from .presets import preset_config, run_experiment

    if args.target in PRESET_NAMES:
        cfg = preset_config(args.target)
    elif Path(args.target).is_file():
        cfg = load_config(args.target)
    else:
        raise ConfigError(
            f"{args.target!r} is neither a preset ({', '.join(PRESET_NAMES)}) nor a config file"
        )
    if args.seed is not None:
        cfg.run = dataclasses.replace(cfg.run, seed=args.seed)
    if args.snapshots is not None and args.snapshots < 1:
        raise ConfigError("--snapshots must be at least 1")
    summary = run_experiment(cfg, args.out, args.snapshots)
    for c in summary["checks"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}")
    print(f"{summary['preset']}: {'PASS' if summary['pass'] else 'FAIL'} -> {args.out}/summary.json")
    return EXIT_PASS if summary["pass"] else EXIT_FAIL


COMMANDS = {"run": cmd_run, "check": cmd_check, "norms": cmd_norms}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigValidationError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, FormatError, WeightError, TransverseError, GridError, FileNotFoundError, IsADirectoryError) as e:
        print(f"zk {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (BlowUpError, SingularMatrixError, OSError, FloatingPointError, ValueError, ArithmeticError) as e:
        print(f"zk {args.command}: runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:  # keep exit code 1 reserved for failed checks
        log.debug("unexpected error", exc_info=True)
        print(f"zk {args.command}: runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
