"""Command-line interface: ``dhtree solve|sweep|verify|group``.

Exit codes: 0 success, 1 solver or property failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .errors import CampaignFailed, DHTreeError, SolverError
from .formats import parse_assignments, resolve_network, solution_table
from .scenarios import (
    GroupScenario,
    PropertyCampaignSpec,
    SweepSpec,
    run_group_scenario,
    run_property_campaign,
    run_sweep,
)
from .solver import SolverConfig, solve

EXIT_OK, EXIT_FAILURE, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _floats(text: str, n: int, what: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != n:
        raise InputError(f"bad {what} {text!r}; expected {n} ':'-separated numbers")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise InputError(f"bad {what} {text!r}; not a number") from None


def _valves(text: str) -> dict[int, float]:
    try:
        return {k: float(v) for k, v in parse_assignments(text, "valve setting").items()}
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _network_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--network", required=True,
                   help="network JSON file, or a bundled name (two_consumer, network22)")
    p.add_argument("--pump-pressure", type=float, default=None,
                   help="override the pump differential pressure from the file")
    p.add_argument("--lax", action="store_true",
                   help="warn about unknown keys in the network file instead of failing")
    p.add_argument("--out", default=None, help="output path (default: standard output)")


def cmd_solve(args) -> int:
    nf = resolve_network(args.network, strict=not args.lax)
    cfg = SolverConfig() if args.tolerance is None else SolverConfig(
        residual_tolerance=args.tolerance)
    sol = solve(nf.network, args.pump_pressure, _valves(args.valves), cfg, args.method)
    _write(solution_table(sol).to_csv(), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    nf = resolve_network(args.network, strict=not args.lax)
    ranges = {}
    try:
        raw = parse_assignments(args.range, "range")
    except ValueError as exc:
        raise InputError(str(exc)) from None
    for leaf, text in raw.items():
        ranges[leaf] = tuple(_floats(text, 3, "range"))
    fixed = _valves(args.fixed) if args.fixed else {}
    quantities = tuple(q.strip() for q in args.quantities.split(",") if q.strip())
    spec = SweepSpec(nf.network, ranges, fixed, args.pump_pressure, quantities)
    _write(run_sweep(spec).to_csv(), args.out)
    return EXIT_OK


def _parse_groups(text: str) -> dict[str, tuple[int, ...]]:
    groups: dict[str, tuple[int, ...]] = {}
    for item in filter(None, (s.strip() for s in text.split(";"))):
        if "=" not in item:
            raise InputError(f"bad group {item!r}; expected <name>=<leaf>,<leaf>,...")
        name, ids = item.split("=", 1)
        try:
            groups[name.strip()] = tuple(int(x) for x in ids.split(",") if x.strip())
        except ValueError:
            raise InputError(f"bad leaf id in group {name.strip()!r}") from None
    return groups


def cmd_group(args) -> int:
    nf = resolve_network(args.network, strict=not args.lax)
    if args.groups:
        groups = _parse_groups(args.groups)
    elif nf.groups:
        groups = dict(nf.groups)
    else:
        raise InputError("--groups is required (the network file defines none)")
    opening = [g.strip() for g in args.open.split(",") if g.strip()]
    u0, u1, steps = _floats(args.ramp, 3, "ramp")
    if steps != int(steps) or steps < 0:
        raise InputError(f"ramp step count must be a non-negative integer, got {steps!r}")
    spec = GroupScenario(nf.network, groups, opening, u0, u1, int(steps),
                         args.fixed_u, args.pump_pressure)
    _write(run_group_scenario(spec).to_csv(), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        parts = tuple(sorted({int(p) for p in args.parts.split(",") if p.strip()}))
    except ValueError:
        raise InputError(f"bad --parts {args.parts!r}") from None
    if args.cases < 0 or args.max_vertices < 2:
        raise InputError("--cases must be >= 0 and --max-vertices >= 2")
    spec = PropertyCampaignSpec(seed=args.seed, cases=args.cases,
                                vertex_count_range=(2, args.max_vertices),
                                parts=parts)
    try:
        report = run_property_campaign(spec)
    except CampaignFailed as exc:
        with open(args.bundle, "w", encoding="utf-8") as fh:
            json.dump(exc.bundle, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if args.report:
            _write(exc.report.to_json(), args.report)
        print(f"{exc.report.summary()}; {exc.report.failures} failed", file=sys.stdout)
        print(f"counterexample written to {args.bundle}", file=sys.stderr)
        return EXIT_FAILURE
    if args.report:
        _write(report.to_json(), args.report)
    print(report.summary())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dhtree",
        description="Steady-state flows in tree-structured district heating networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one operating point")
    _network_args(p)
    p.add_argument("--valves", required=True, help='valve openings, e.g. "1=1,2=0.5"')
    p.add_argument("--method", choices=("tree", "newton"), default="tree")
    p.add_argument("--tolerance", type=float, default=None,
                   help="residual tolerance (default 1e-9)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="grid sweep over valve openings")
    _network_args(p)
    p.add_argument("--range", required=True,
                   help='swept leaves, e.g. "1=0.1:1.0:0.1,2=0.1:1.0:0.1"')
    p.add_argument("--fixed", default=None, help="openings of the leaves not swept")
    p.add_argument("--quantities", default="total",
                   help="comma list of total, per-consumer, pressures")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="randomized check of the monotonicity properties")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--max-vertices", type=int, default=50)
    p.add_argument("--parts", default="1,2",
                   help="1: total flow rises when valves open; "
                        "2: unchanged valves lose flow")
    p.add_argument("--bundle", default="counterexample.json",
                   help="where to write the first counterexample on failure")
    p.add_argument("--report", default=None, help="write the full JSON report here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("group", help="group valve-opening study")
    _network_args(p)
    p.add_argument("--groups", default=None,
                   help='"name=leaf,leaf;name=..." (default: groups from the file)')
    p.add_argument("--open", required=True, help="comma list of groups whose valves ramp")
    p.add_argument("--ramp", required=True, help="u_start:u_end:steps")
    p.add_argument("--fixed-u", type=float, default=0.5,
                   help="opening of the groups that do not ramp")
    p.set_defaults(func=cmd_group)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (SolverError, CampaignFailed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (InputError, DHTreeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
