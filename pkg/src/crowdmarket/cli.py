"""Command-line interface: solve single scenarios, run sweeps, dump traces.

Exit codes: 0 on full success, 1 on configuration errors, 2 when any report
row failed to converge.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .dynamics import iterate_quality, iterate_unaware
from .experiments import (ConfigError, ScenarioConfig, builtin_recipes, dump_config,
                          get_recipe, load_config, run_scenario)
from .partition import QuadratureSpec

__all__ = ["main"]


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="path to a scenario file")
    sub.add_argument("--recipe", help="name of a builtin scenario (see 'recipes')")
    sub.add_argument("--out", default="reports", help="output directory (default: reports)")
    sub.add_argument("--seed", type=int, action="append",
                     help="override the seed list; repeatable")
    sub.add_argument("--solver", choices=("analytic", "iterate", "agents"),
                     help="override the solver")
    sub.add_argument("--mode", choices=("unaware", "matching", "cross"),
                     help="override the sharing mode")
    sub.add_argument("--resolution", type=int, help="override the quadrature resolution")
    sub.add_argument("--workers", type=int, default=1, help="sweep worker processes")


def _resolve_config(args) -> ScenarioConfig:
    if bool(args.config) == bool(args.recipe):
        raise ConfigError("pass exactly one of --config or --recipe")
    config = load_config(args.config) if args.config else get_recipe(args.recipe)
    if args.solver:
        config = replace(config, solver=args.solver)
    if args.mode:
        config = replace(config, mode=args.mode)
    if args.resolution:
        config = replace(config, quadrature=QuadratureSpec(resolution=args.resolution))
    if args.seed:
        config = replace(config, seeds=tuple(args.seed))
    return config


def _cmd_solve(args) -> int:
    config = _resolve_config(args)
    config = replace(config, sweep=())
    report = run_scenario(config, out_dir=args.out, workers=1)
    row = report.rows[0]
    print(f"{config.name}: phi={row.phi} shares(sensor={row.sensor}, "
          f"requester={row.requester}, alien={row.alien:.6f})")
    print(f"welfare={row.welfare:.6f} max_welfare={row.max_welfare:.6f} "
          f"ratio={row.ratio:.6f} converged={row.converged}")
    print(f"wrote {Path(args.out) / (config.name + '.csv')}")
    return 0 if report.failures == 0 else 2


def _cmd_sweep(args) -> int:
    config = _resolve_config(args)
    report = run_scenario(config, out_dir=args.out, workers=args.workers)
    print(f"{config.name}: {len(report.rows)} rows, {report.failures} failed; "
          f"wrote {Path(args.out) / (config.name + '.csv')}")
    return 0 if report.failures == 0 else 2


def _cmd_trace(args) -> int:
    config = _resolve_config(args)
    config = replace(config, sweep=())
    if config.mode == "unaware":
        trace = iterate_unaware(config.market, config.iteration, quad=config.quadrature)
    else:
        trace = iterate_quality(config.market, config.iteration, mode=config.mode,
                                quad=config.quadrature)
    kq = config.market.n_qualities
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{config.name}_trace.csv"
    cols = ["t"] + [f"phi_{k}" for k in range(1, kq + 1)] + ["residual"]
    cols += [f"share_sensor_{k}" for k in range(1, kq + 1)]
    cols += [f"share_requester_{k}" for k in range(1, kq + 1)] + ["share_alien"]
    lines = [",".join(cols)]
    for step in trace.steps:
        vals = [str(step.t)] + [format(x, ".12g") for x in step.phi]
        vals.append(format(step.residual, ".12g"))
        vals += [format(x, ".12g") for x in step.shares.sensor]
        vals += [format(x, ".12g") for x in step.shares.requester]
        vals.append(format(step.shares.alien, ".12g"))
        lines.append(",".join(vals))
    path.write_text("\n".join(lines) + "\n")
    print(f"{config.name}: {trace.iterations} iterations, converged={trace.converged}; wrote {path}")
    return 0 if trace.converged else 2


def _cmd_recipes(args) -> int:
    recipes = builtin_recipes()
    for recipe in recipes:
        print(f"{recipe.name:8s} {recipe.description}")
    if args.write:
        out = Path(args.write)
        out.mkdir(parents=True, exist_ok=True)
        for recipe in recipes:
            dump_config(recipe, out / f"{recipe.name}.yaml")
        print(f"wrote {len(recipes)} scenario files to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crowdmarket",
                                     description="P2P crowdsensing data-market solver")
    subs = parser.add_subparsers(dest="command", required=True)

    solve = subs.add_parser("solve", help="solve one scenario point")
    _add_common(solve)
    solve.set_defaults(fn=_cmd_solve)

    sweep = subs.add_parser("sweep", help="run a full sweep grid")
    _add_common(sweep)
    sweep.set_defaults(fn=_cmd_sweep)

    trace = subs.add_parser("trace", help="dump the per-iteration benefit trajectory")
    _add_common(trace)
    trace.set_defaults(fn=_cmd_trace)

    recipes = subs.add_parser("recipes", help="list builtin scenarios")
    recipes.add_argument("--write", help="also write each recipe as a scenario file")
    recipes.set_defaults(fn=_cmd_recipes)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
