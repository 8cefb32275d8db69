"""Valve sweeps, group studies, random networks and property campaigns.

Every evaluation goes through :func:`dhtree.solver.solve_tree`.  Results come
back as :class:`~dhtree.formats.ResultTable` objects whose column order and
float formatting are deterministic, so CSV output is byte-stable.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import CampaignFailed, GridTooLarge, ScenarioError, SolverError
from .formats import ResultTable, network_to_dict
from .network import ROOT, EdgeSpec, Junction, NetworkSpec, Pump, edge, valve, validate
from .solver import DEFAULT_CONFIG, SolverConfig, solve_tree

QUANTITIES = ("total", "per-consumer", "pressures")
MAX_GRID_POINTS = 10 ** 6


def ramp_values(lo: float, hi: float, step: float) -> list[float]:
    """``lo, lo+step, ...`` up to ``hi`` inclusive, rounded to 12 decimals."""
    if not (math.isfinite(lo) and math.isfinite(hi) and math.isfinite(step)):
        raise ScenarioError("sweep range must be finite")
    if step <= 0:
        raise ScenarioError(f"sweep step must be > 0, got {step!r}")
    if lo > hi:
        raise ScenarioError(f"sweep range min {lo!r} exceeds max {hi!r}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(n)]


# -- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """Cartesian valve sweep.

    ``ranges`` maps swept leaves to ``(min, max, step)``; every other leaf
    must appear in ``fixed``.
    """

    network: NetworkSpec
    ranges: Mapping[int, tuple[float, float, float]]
    fixed: Mapping[int, float] = field(default_factory=dict)
    pump_pressure: float | None = None
    quantities: tuple[str, ...] = ("total",)
    max_points: int = MAX_GRID_POINTS
    cfg: SolverConfig = DEFAULT_CONFIG

    def __post_init__(self):
        leaves = set(self.network.leaves())
        swept, fixed = set(self.ranges), set(self.fixed)
        if not swept <= leaves:
            raise ScenarioError(f"swept vertices {sorted(swept - leaves)} are not leaves")
        if swept & fixed:
            raise ScenarioError(f"leaves {sorted(swept & fixed)} are both swept and fixed")
        if swept | fixed != leaves:
            raise ScenarioError(
                f"leaves {sorted(leaves - swept - fixed)} are neither swept nor fixed")
        bad = [q for q in self.quantities if q not in QUANTITIES]
        if bad or not self.quantities:
            raise ScenarioError(f"unknown quantities {bad}; choose from {QUANTITIES}")
        for lo, hi, step in self.ranges.values():
            ramp_values(lo, hi, step)

    def axes(self) -> list[tuple[int, list[float]]]:
        return [(leaf, ramp_values(*self.ranges[leaf])) for leaf in sorted(self.ranges)]


def _output_values(net: NetworkSpec, sol, quantities) -> dict[str, float]:
    out: dict[str, float] = {}
    if "total" in quantities:
        out["total"] = sol.total_consumer_flow
    if "per-consumer" in quantities:
        out.update({f"q_{l}": q for l, q in sol.consumer_flow.items()})
    if "pressures" in quantities:
        out.update({f"p_{v}": p for v, p in sol.pressure.items()})
    return out


def _output_columns(net: NetworkSpec, quantities) -> list[str]:
    cols = ["error"]
    if "total" in quantities:
        cols.append("total")
    if "per-consumer" in quantities:
        cols += [f"q_{l}" for l in net.leaves()]
    if "pressures" in quantities:
        cols += [f"p_{v}" for v, _ in net.vertices]
    return sorted(cols)


def run_sweep(spec: SweepSpec) -> ResultTable:
    """Solve every grid point; rows in lexicographic grid order.

    Columns are ``u_<leaf>`` for the swept leaves, then the outputs sorted by
    name.  A failing grid point is reported in the ``error`` column.
    """
    axes = spec.axes()
    npts = math.prod(len(vals) for _, vals in axes)
    if npts > spec.max_points:
        raise GridTooLarge(f"sweep grid has {npts} points (cap {spec.max_points})")
    net = spec.network
    coord_cols = [f"u_{leaf}" for leaf, _ in axes]
    table = ResultTable(coord_cols + _output_columns(net, spec.quantities))
    swept = [leaf for leaf, _ in axes]
    for point in itertools.product(*(vals for _, vals in axes)):
        u = dict(spec.fixed)
        u.update(zip(swept, point))
        row: dict[str, Any] = dict(zip(coord_cols, point))
        try:
            sol = solve_tree(net, spec.pump_pressure, u, spec.cfg)
        except (SolverError, ValueError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        else:
            row["error"] = ""
            row.update(_output_values(net, sol, spec.quantities))
        table.rows.append(row)
    return table


# -- group studies -----------------------------------------------------------

@dataclass(frozen=True)
class GroupScenario:
    """Ramp the valves of the ``opening`` groups; hold the rest at ``fixed_u``."""

    network: NetworkSpec
    groups: Mapping[str, Sequence[int]]
    opening: Sequence[str]
    u_start: float
    u_end: float
    steps: int
    fixed_u: float = 0.5
    pump_pressure: float | None = None
    cfg: SolverConfig = DEFAULT_CONFIG

    def __post_init__(self):
        seen: dict[int, str] = {}
        for name, members in self.groups.items():
            for leaf in members:
                if leaf in seen:
                    raise ScenarioError(f"leaf {leaf} is in groups {seen[leaf]!r} and {name!r}")
                seen[leaf] = name
        leaves = set(self.network.leaves())
        if set(seen) != leaves:
            missing = sorted(leaves - set(seen))
            extra = sorted(set(seen) - leaves)
            raise ScenarioError(
                f"groups must partition the leaves (missing {missing}, not leaves {extra})")
        unknown = [g for g in self.opening if g not in self.groups]
        if unknown:
            raise ScenarioError(f"unknown opening groups {unknown}")
        for name, v in (("u_start", self.u_start), ("u_end", self.u_end),
                        ("fixed_u", self.fixed_u)):
            if not (0 < v <= 1):
                raise ScenarioError(f"{name} must lie in (0, 1], got {v!r}")
        if self.steps < 0:
            raise ScenarioError("steps must be >= 0")

    def ramp(self) -> list[float]:
        if self.steps == 0:
            return []
        if self.steps == 1:
            return [self.u_start]
        return [float(x) for x in np.linspace(self.u_start, self.u_end, self.steps)]


def group_inflow_edge(net: NetworkSpec, members: Sequence[int]) -> EdgeSpec | None:
    """The single edge carrying exactly the group's flow, if there is one."""
    paths = []
    for leaf in members:
        path = [leaf]
        while path[-1] != ROOT:
            path.append(net.parent[path[-1]])
        paths.append(path[::-1])
    common = ROOT
    for level in zip(*paths):
        if len(set(level)) != 1:
            break
        common = level[0]
    if common == ROOT or set(net.subtree(common).leaves()) != set(members):
        return None
    return net.edge_into[common]


def run_group_scenario(spec: GroupScenario) -> ResultTable:
    """Per ramp step: the ramp opening, total consumer flow and per-group inflow.

    Where a group hangs off a single edge, its summed consumer flow is checked
    against that edge's flow.
    """
    net = spec.network
    names = list(spec.groups)
    table = ResultTable(["step", "u"] + sorted(names + ["total"]))
    opening = set(spec.opening)
    inflow_edges = {g: group_inflow_edge(net, spec.groups[g]) for g in names}
    tol = 10 * spec.cfg.residual_tolerance
    for i, level in enumerate(spec.ramp()):
        u = {}
        for g, members in spec.groups.items():
            for leaf in members:
                u[leaf] = level if g in opening else spec.fixed_u
        try:
            sol = solve_tree(net, spec.pump_pressure, u, spec.cfg)
        except SolverError as exc:
            raise type(exc)(f"group scenario step {i}: {exc}") from exc
        row: dict[str, Any] = {"step": i, "u": level, "total": sol.total_consumer_flow}
        for g in names:
            flow = math.fsum(sol.consumer_flow[l] for l in spec.groups[g])
            e = inflow_edges[g]
            if e is not None and abs(sol.edge_flow[(e.tail, e.head)] - flow) > tol:
                raise ScenarioError(
                    f"step {i}: group {g!r} flow {flow!r} disagrees with edge "
                    f"{e.tail}->{e.head} flow {sol.edge_flow[(e.tail, e.head)]!r}")
            row[g] = flow
        table.rows.append(row)
    return table


# -- random networks ---------------------------------------------------------

@dataclass(frozen=True)
class CoefficientRanges:
    """Log-uniform sampling ranges for generated networks."""

    pipe: tuple[float, float] = (0.1, 10.0)
    valve: tuple[float, float] = (0.1, 10.0)
    pump: tuple[float, float] = (0.5, 2.0)

    def __post_init__(self):
        for name in ("pipe", "valve", "pump"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi and math.isfinite(hi)):
                raise ValueError(f"{name} range must satisfy 0 < lo <= hi, got {(lo, hi)}")


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    if lo == hi:
        return float(lo)
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate_random_network(
    seed=None,
    vertex_count_range: tuple[int, int] = (5, 50),
    coeff_ranges: CoefficientRanges = CoefficientRanges(),
    max_children: int = 4,
) -> NetworkSpec:
    """Random single-pump tree with one pipe out of the pump.

    Grows the tree by repeatedly picking a random frontier vertex and giving
    it 1 to ``max_children`` children; whatever is left on the frontier
    becomes a valve.  Deterministic for a given seed.
    """
    lo, hi = vertex_count_range
    if not 2 <= lo <= hi:
        raise ValueError(f"vertex_count_range must satisfy 2 <= lo <= hi, got {(lo, hi)}")
    if max_children < 1:
        raise ValueError("max_children must be >= 1")
    rng = _rng(seed)
    n = int(rng.integers(lo, hi + 1))
    edges: list[tuple[int, int]] = [(ROOT, 1)]
    frontier = [1]
    has_children: set[int] = set()
    nxt = 2
    while nxt < n:
        v = frontier.pop(int(rng.integers(len(frontier))))
        k = min(int(rng.integers(1, max_children + 1)), n - nxt)
        for c in range(nxt, nxt + k):
            edges.append((v, c))
            frontier.append(c)
        has_children.add(v)
        nxt += k

    vertices = [(ROOT, Pump(_log_uniform(rng, *coeff_ranges.pump)))]
    for v in range(1, n):
        if v in has_children:
            vertices.append((v, Junction()))
        else:
            vertices.append((v, valve(_log_uniform(rng, *coeff_ranges.valve))))
    specs = [edge(t, h, _log_uniform(rng, *coeff_ranges.pipe),
                  _log_uniform(rng, *coeff_ranges.pipe)) for t, h in edges]
    return validate(vertices, specs)


# -- monotonicity checks -----------------------------------------------------

@dataclass
class CaseOutcome:
    """Result of comparing a base solution against an opened-up one."""

    passed: bool
    checks: list[str]
    total_lo: float
    total_hi: float
    failures: list[str] = field(default_factory=list)


def check_monotone_case(
    net: NetworkSpec,
    pump_lo: float,
    u_lo: Mapping[int, float],
    pump_hi: float,
    u_hi: Mapping[int, float],
    margin: float = 1e-8,
    parts: Sequence[int] = (1, 2),
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> CaseOutcome:
    """Solve both settings and test the monotonicity guarantees.

    Part 1: total consumer flow does not drop (``>= lo - margin``) and rises by
    more than ``margin`` when the pump or any valve was raised.
    Part 2 (pump unchanged, single pipe out of the pump, some valve opened):
    every unchanged valve receives less flow by more than ``margin``.
    """
    if pump_hi < pump_lo or any(u_hi[l] < u_lo[l] for l in u_lo):
        raise ScenarioError("the 'hi' setting must dominate the 'lo' setting")
    lo = solve_tree(net, pump_lo, u_lo, cfg)
    hi = solve_tree(net, pump_hi, u_hi, cfg)
    t_lo, t_hi = lo.total_consumer_flow, hi.total_consumer_flow
    opened = [l for l in net.leaves() if u_hi[l] > u_lo[l]]
    unchanged = [l for l in net.leaves() if u_hi[l] == u_lo[l]]
    out = CaseOutcome(True, [], t_lo, t_hi)

    if 1 in parts:
        out.checks.append("total_nondecreasing")
        if not t_hi >= t_lo - margin:
            out.failures.append(f"total flow fell: {t_lo!r} -> {t_hi!r}")
        if pump_hi > pump_lo or opened:
            out.checks.append("total_strict")
            if not t_hi > t_lo + margin:
                out.failures.append(
                    f"total flow not strictly larger: {t_lo!r} -> {t_hi!r}")
    if 2 in parts and pump_hi == pump_lo and opened and unchanged and net.root_series_pipe:
        out.checks.append("unchanged_valves_lose_flow")
        for k in unchanged:
            a, b = lo.consumer_flow[k], hi.consumer_flow[k]
            if not b < a - margin:
                out.failures.append(f"leaf {k}: flow {a!r} -> {b!r} did not drop")
    out.passed = not out.failures
    return out


@dataclass(frozen=True)
class PropertyCampaignSpec:
    seed: int = 0
    cases: int = 200
    vertex_count_range: tuple[int, int] = (2, 50)
    coeff_ranges: CoefficientRanges = CoefficientRanges()
    u_range: tuple[float, float] = (0.2, 0.95)
    min_gap: float = 0.05
    parts: tuple[int, ...] = (1, 2)
    margin: float = 1e-8
    cfg: SolverConfig = DEFAULT_CONFIG

    def __post_init__(self):
        if self.cases < 0:
            raise ValueError("cases must be >= 0")
        if not self.parts or not set(self.parts) <= {1, 2}:
            raise ValueError(f"parts must be a non-empty subset of (1, 2), got {self.parts}")
        lo, hi = self.u_range
        if not (0 < lo <= hi <= 1 - self.min_gap):
            raise ValueError("u_range must leave room for min_gap below 1")
        if set(self.parts) == {2} and self.vertex_count_range[1] < 4:
            raise ValueError("part 2 cases need networks with at least 4 vertices")


@dataclass
class CampaignReport:
    spec: dict
    cases: list[dict] = field(default_factory=list)

    @property
    def passes(self) -> int:
        return sum(1 for c in self.cases if c["passed"])

    @property
    def failures(self) -> int:
        return len(self.cases) - self.passes

    def summary(self) -> str:
        return f"{self.passes}/{len(self.cases)} passed"

    def to_json(self) -> str:
        return json.dumps({"spec": self.spec, "cases": self.cases,
                           "passes": self.passes, "failures": self.failures},
                          sort_keys=True, indent=1) + "\n"


def _sample_case(spec: PropertyCampaignSpec, index: int):
    rng = np.random.default_rng([spec.seed, index])
    mode = {(1,): "total", (2,): "fixed"}.get(tuple(sorted(set(spec.parts))))
    while True:
        net = generate_random_network(rng, spec.vertex_count_range, spec.coeff_ranges)
        leaves = net.leaves()
        if mode != "fixed" or len(leaves) >= 2:
            break
    if mode is None:
        mode = "total" if len(leaves) < 2 or rng.random() < 0.5 else "fixed"
    u_lo = {l: float(rng.uniform(*spec.u_range)) for l in leaves}
    pick = [bool(b) for b in rng.random(len(leaves)) < 0.5]
    if not any(pick):
        pick[int(rng.integers(len(leaves)))] = True
    if mode == "fixed" and all(pick):
        pick[int(rng.integers(len(leaves)))] = False
    u_hi = {}
    for l, chosen in zip(leaves, pick):
        if chosen:
            gap = float(rng.uniform(spec.min_gap, 1.0 - u_lo[l]))
            u_hi[l] = min(1.0, u_lo[l] + max(gap, spec.min_gap))
        else:
            u_hi[l] = u_lo[l]
    p_lo = net.pump_pressure
    p_hi = p_lo
    if mode == "total" and rng.random() < 0.5:
        p_hi = p_lo * (1.0 + float(rng.uniform(0.05, 0.5)))
    return net, p_lo, u_lo, p_hi, u_hi


def run_property_campaign(spec: PropertyCampaignSpec, strict: bool = True) -> CampaignReport:
    """Randomized check of the valve-opening monotonicity guarantees.

    Case ``i`` draws from ``default_rng([seed, i])``, so any case can be
    replayed alone.  With ``strict`` the first counterexample raises
    :class:`~dhtree.errors.CampaignFailed` after all cases have run.
    """
    report = CampaignReport(spec={
        "seed": spec.seed, "cases": spec.cases,
        "vertex_count_range": list(spec.vertex_count_range),
        "u_range": list(spec.u_range), "min_gap": spec.min_gap,
        "parts": sorted(spec.parts), "margin": spec.margin,
    })
    first_bundle = None
    for i in range(spec.cases):
        net, p_lo, u_lo, p_hi, u_hi = _sample_case(spec, i)
        record: dict[str, Any] = {"case": i, "seed": spec.seed,
                                  "vertices": net.num_vertices, "leaves": len(u_lo)}
        try:
            res = check_monotone_case(net, p_lo, u_lo, p_hi, u_hi,
                                      spec.margin, spec.parts, spec.cfg)
        except SolverError as exc:
            record.update(passed=False, checks=[], failures=[f"{type(exc).__name__}: {exc}"])
        else:
            record.update(passed=res.passed, checks=res.checks, failures=res.failures,
                          total_lo=res.total_lo, total_hi=res.total_hi)
        report.cases.append(record)
        if not record["passed"] and first_bundle is None:
            first_bundle = {
                "case": i, "seed": spec.seed, "network": network_to_dict(net),
                "pump_lo": p_lo, "pump_hi": p_hi,
                "u_lo": {str(k): v for k, v in u_lo.items()},
                "u_hi": {str(k): v for k, v in u_hi.items()},
                "failures": record["failures"],
            }
    if strict and first_bundle is not None:
        raise CampaignFailed(
            f"{report.failures} of {len(report.cases)} cases failed; first is case "
            f"{first_bundle['case']}", report=report, bundle=first_bundle)
    return report
