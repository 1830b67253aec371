"""Command-line front end.

Verbs: run (one scenario + policy), compare (all policies), sweep (vary K,
V0 or V1 over a list), presets (print the built-ins).  Exit codes: 0 ok,
1 usage, 2 validation, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields

from .config import PRESETS, Scenario, ScenarioError, load_scenario, make_scenario
from .report import emit_results
from .sim import POLICIES, run_monte_carlo


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmwcoex",
                     description="NR-U / WiGig coexistence simulator")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value scenario file")
        p.add_argument("--preset", default="desk", choices=sorted(PRESETS))
        p.add_argument("--seeds", type=int, default=1,
                       help="number of Monte-Carlo seeds (0..N-1)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--no-figures", action="store_true",
                       help="emit tables only")

    p_run = sub.add_parser("run", help="single scenario and policy")
    common(p_run)
    p_run.add_argument("--policy", default="pdd_cccp", choices=POLICIES)

    p_cmp = sub.add_parser("compare", help="all policies on one scenario")
    common(p_cmp)

    p_sweep = sub.add_parser("sweep", help="vary K, V0 or V1 over a list")
    common(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=["K", "V0", "V1"])
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated sweep values")
    p_sweep.add_argument("--policy", choices=POLICIES,
                         help="restrict to one policy")

    sub.add_parser("presets", help="print built-in presets")
    return parser


def _load(args) -> Scenario:
    if args.config:
        return load_scenario(args.config, preset=args.preset)
    return make_scenario(args.preset)


def _print_presets() -> None:
    for name in sorted(PRESETS):
        sc = make_scenario(name)
        print(f"[{name}]")
        for f in fields(Scenario):
            print(f"{f.name} = {getattr(sc, f.name)}")
        print()


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:        # --help and friends
        return int(exc.code or 0)

    if args.verb == "presets":
        _print_presets()
        return 0

    try:
        sc = _load(args)
        seeds = list(range(args.seeds))
        if args.verb == "run":
            policies = [args.policy]
            sweep = None
        elif args.verb == "compare":
            policies = list(POLICIES)
            sweep = None
        else:
            policies = [args.policy] if args.policy else list(POLICIES)
            values = [v for v in args.values.split(",") if v]
            if not values:
                print("usage error: --values is empty", file=sys.stderr)
                return 1
            sweep = (args.param, values)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 2

    try:
        def progress(point, policy, seed):
            print(f"done: K={point.n_users} V0={point.v0:g} V1={point.v1:g} "
                  f"{policy} seed={seed}", flush=True)

        rows, episodes = run_monte_carlo(sc, seeds, policies, sweep=sweep,
                                         progress=progress)
        paths = emit_results(episodes, rows, args.out,
                             figures=not args.no_figures)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3

    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
