"""Command-line entry point.

Subcommands: solve, converge, oracle roots, oracle map, indicator,
assemble-check.  Exit codes: 0 success, 2 configuration error,
3 numerical failure (region provenance in the message).
"""

import argparse
import sys
from pathlib import Path

from .config import load_config, with_overrides
from .errors import (
    BudgetError,
    ConfigError,
    EvalError,
    MatchError,
    NearPoleError,
    NoConvergence,
    ParamError,
    PotentialSyntaxError,
    SchresError,
    SemanticError,
)

_CONFIG_ERRORS = (ConfigError, PotentialSyntaxError, SemanticError, ParamError)


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace("i", "j").replace(" ", ""))
    except ValueError:
        raise ConfigError(f"cannot parse complex number {text!r}")


def _add_common(parser):
    parser.add_argument("--config", required=True, help="run configuration file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--level", type=int, default=None, help="override mesh level")
    parser.add_argument("--workers", type=int, default=None, help="search worker count")
    parser.add_argument("--seed", type=int, default=None, help="probe-vector seed")
    parser.add_argument("--allow-large", action="store_true",
                        help="permit level-5 meshes (memory heavy)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="schres",
        description="Scattering resonances of 2D Schrodinger operators "
                    "(FEM + DtN closure + contour-integral indicator search)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="search the configured region at one mesh level")
    _add_common(p)

    p = sub.add_parser("converge", help="refinement study of tracked resonances")
    _add_common(p)
    p.add_argument("--levels", type=int, default=None, help="override ladder depth")

    p_oracle = sub.add_parser("oracle", help="analytic constant-disk reference")
    osub = p_oracle.add_subparsers(dest="oracle_command", required=True)
    p = osub.add_parser("roots", help="zeros of the matching determinants")
    _add_common(p)
    p = osub.add_parser("map", help="determinant-magnitude landscape grid")
    _add_common(p)
    p.add_argument("--resolution", type=int, default=None, help="grid points per axis")

    p = sub.add_parser("indicator", help="probe one contour indicator")
    _add_common(p)
    p.add_argument("--center", required=True, help="region center, e.g. -0.85-1.34i")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--self-test", action="store_true",
                   help="use the built-in scalar problem F(z) = z - center")

    p = sub.add_parser("assemble-check", help="assembly invariant report")
    _add_common(p)
    return parser


def _load(args):
    config = load_config(args.config)
    config = with_overrides(config, level=getattr(args, "level", None),
                            workers=getattr(args, "workers", None),
                            seed=getattr(args, "seed", None),
                            levels=getattr(args, "levels", None))
    heavy = max(config.level, config.levels if args.command == "converge" else 1)
    if heavy >= 5 and not args.allow_large:
        raise ConfigError("mesh level 5 needs --allow-large (memory heavy)")
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load(args)
        out_dir = Path(args.out)
        if args.command == "solve":
            from .runner import run_solve

            results = run_solve(config, out_dir)
            print(f"{len(results)} resonance(s) -> {out_dir}/resonances.csv")
            for r in results:
                print(f"  k = {r.k.real:+.6f}{r.k.imag:+.6f}i  "
                      f"residual {r.residual:.2e}  level {r.level}")
        elif args.command == "converge":
            from .runner import run_converge

            report = run_converge(config, out_dir)
            print(f"tracked {len(report.tracks)} resonance(s) over "
                  f"{report.levels} levels -> {out_dir}/convergence.csv")
            for idx, track in enumerate(report.tracks, start=1):
                k = track.values[-1]
                orders = ", ".join(f"{o:.2f}" for o in track.orders)
                print(f"  k{idx} = {k.real:+.6f}{k.imag:+.6f}i  orders [{orders}]")
        elif args.command == "oracle":
            from .runner import run_oracle_map, run_oracle_roots

            if args.oracle_command == "roots":
                roots = run_oracle_roots(config, out_dir)
                print(f"{len(roots)} oracle root(s) -> {out_dir}/oracle_roots.csv")
            else:
                run_oracle_map(config, out_dir, args.resolution)
                print(f"determinant map -> {out_dir}/oracle_map.csv")
        elif args.command == "indicator":
            from .runner import run_indicator_probe

            center = _parse_complex(args.center)
            report = run_indicator_probe(config, center, args.radius,
                                         self_test=args.self_test)
            print(f"indicator = {report['indicator']:.6f}")
            for key in ("degenerate", "rotated", "aborted", "max_solve_residual"):
                print(f"  {key} = {report[key]}")
            if "norm_full" in report:
                print(f"  projection norms: full {report['norm_full']:.6e}, "
                      f"half {report['norm_half']:.6e}")
        elif args.command == "assemble-check":
            from .runner import run_assemble_check

            checks = run_assemble_check(config, out_dir)
            for name, value in checks.items():
                print(f"{name}: {value}")
    except _CONFIG_ERRORS as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except (NearPoleError, BudgetError, NoConvergence, MatchError, EvalError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3
    except SchresError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
