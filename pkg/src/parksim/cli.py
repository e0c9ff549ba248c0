"""Command line entry: run scenarios and emit catalog figure recipes.

Exit codes: 0 success, 2 invalid scenario or unknown figure id,
3 runtime failure. The output directory is, in order of precedence,
``--out-dir``, the PARKSIM_OUT_DIR environment variable, then
``results/<scenario name>`` for runs and the working directory for
emitted scenario files.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .figures import FIGURES, figure_scenario, resolve_figure_id
from .results import write_results
from .scenario import (Scenario, ScenarioError, load_scenario,
                       scenario_to_toml, validate_scenario)
from .simulate import run_replications


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parksim",
        description="duty-cycled parking sensor network simulator")
    parser.add_argument("--version", action="version",
                        version=f"parksim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario file")
    run.add_argument("scenario", help="path to a scenario TOML file")
    run.add_argument("--seed", type=int, default=None,
                     help="override the scenario base seed")
    run.add_argument("--batches", type=int, default=None,
                     help="override the scenario batch count")
    run.add_argument("--out-dir", default=None,
                     help="directory for result files")
    run.add_argument("--parallel", type=int, default=1, metavar="N",
                     help="worker processes for batches (default 1)")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser("reproduce",
                         help="emit the scenario file for a catalog figure")
    rep.add_argument("figure_id")
    rep.add_argument("--out-dir", default=None,
                     help="directory for the emitted scenario file")
    rep.set_defaults(func=_cmd_reproduce)

    lst = sub.add_parser("list-figures", help="list catalog figure ids")
    lst.set_defaults(func=_cmd_list_figures)
    return parser


def _out_dir(flag: str | None, default: Path) -> Path:
    if flag:
        return Path(flag)
    env = os.environ.get("PARKSIM_OUT_DIR")
    if env:
        return Path(env)
    return default


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario.seed = args.seed
    if args.batches is not None:
        scenario.batches = args.batches
    if args.parallel < 1:
        raise ScenarioError("--parallel must be at least 1")
    points = validate_scenario(scenario)

    results = {}
    for point in points:
        runs = run_replications(point.spec, scenario.batches, args.parallel)
        results[point.label] = runs
        mean_pdr = sum(r.pdr for r in runs) / len(runs)
        print(f"{scenario.name} [{point.label}] "
              f"batches={len(runs)} pdr={mean_pdr:.4f}")

    out = _out_dir(args.out_dir, Path("results") / scenario.name)
    write_results(out, scenario, points, results)
    print(f"results written to {out}")
    return 0


def _cmd_reproduce(args) -> int:
    resolved = resolve_figure_id(args.figure_id)
    if resolved is None:
        print(f"unknown figure id {args.figure_id!r}; catalog:", file=sys.stderr)
        for fid, fig in FIGURES.items():
            print(f"  {fid:24s} {fig.description}", file=sys.stderr)
        return 2
    scenario = figure_scenario(resolved)
    out = _out_dir(args.out_dir, Path("."))
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{resolved}.toml"
    path.write_text(scenario_to_toml(scenario))
    print(path)
    return 0


def _cmd_list_figures(args) -> int:
    for fid, fig in FIGURES.items():
        print(f"{fid:24s} {fig.description}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as err:
        print(f"invalid scenario: {err}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 3
    except Exception as err:  # noqa: BLE001 - contract maps failures to 3
        print(f"runtime failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
