"""Hydraulic equilibrium of a tree network.

Unknowns are the differential pressure ``p_i`` at every vertex and the flow
``q_ij`` on every edge.  The equations are

* root pressure fixed by the pump,
* ``p_i - p_j = f_ij(q_ij)`` on every edge,
* ``p_l = g_l(q_l, u_l)`` at every valve leaf,
* flow balance at every vertex, with zero supply-to-return flow at junctions.

:func:`solve_tree` exploits the tree: the flow a subtree absorbs is a
strictly increasing function of the pressure at its top, so the whole
problem reduces to nested monotone scalar solves.  :func:`solve_newton`
attacks the stacked equations directly with damped Newton and exists as an
independent cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

import numpy as np

from .components import MonotoneCurve, parallel, series
from .errors import (
    BracketExpansionFailed,
    ClosedValve,
    DimensionMismatch,
    IsRoot,
    MaxIterations,
    NewtonStalled,
    NonFiniteInput,
    ResidualCheckFailed,
    ScalarSolveDiverged,
    SingularJacobian,
    ValveSettingsError,
)
from .network import ROOT, NetworkSpec


@dataclass(frozen=True)
class SolverConfig:
    flow_tolerance: float = 1e-10
    residual_tolerance: float = 1e-9
    max_scalar_iterations: int = 200
    max_newton_iterations: int = 100
    newton_damping_floor: float = 2.0 ** -20
    # collapse equal-exponent power laws into equivalent resistances; what
    # cannot be collapsed falls back to nested bisection, whose cost grows
    # roughly 35x per nesting level
    reduce_power_laws: bool = True
    check_residual: bool = True

    def __post_init__(self):
        for name in ("flow_tolerance", "residual_tolerance", "newton_damping_floor"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be > 0, got {v!r}")
        if self.max_scalar_iterations < 1 or self.max_newton_iterations < 1:
            raise ValueError("iteration caps must be >= 1")


DEFAULT_CONFIG = SolverConfig()


class ValveSettings(Mapping[int, float]):
    """Valve openings ``u_l`` keyed by leaf id, each in ``(0, 1]``."""

    __slots__ = ("_u",)

    def __init__(self, openings: Mapping[int, float]):
        u = {int(k): float(v) for k, v in openings.items()}
        for leaf, val in u.items():
            if not math.isfinite(val):
                raise NonFiniteInput(f"valve {leaf}: non-finite opening {val!r}")
            if val <= 0:
                raise ClosedValve(f"valve {leaf}: opening must be > 0, got {val!r}")
            if val > 1:
                warnings.warn(f"valve {leaf}: opening {val!r} is above the normal "
                              "range (0, 1]", RuntimeWarning, stacklevel=2)
        self._u = dict(sorted(u.items()))

    @classmethod
    def uniform(cls, net: NetworkSpec, u: float) -> "ValveSettings":
        return cls({leaf: u for leaf in net.leaves()})

    @classmethod
    def for_network(cls, net: NetworkSpec,
                    u: Union["ValveSettings", Mapping[int, float], float]) -> "ValveSettings":
        """Coerce ``u`` and check it covers exactly the leaves of ``net``."""
        if isinstance(u, (int, float)):
            return cls.uniform(net, float(u))
        vs = u if isinstance(u, ValveSettings) else cls(u)
        expected = set(net.leaves())
        got = set(vs)
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            parts = []
            if missing:
                parts.append(f"missing leaves {missing}")
            if extra:
                parts.append(f"unknown leaves {extra}")
            raise ValveSettingsError("valve settings " + ", ".join(parts))
        return vs

    def updated(self, changes: Mapping[int, float]) -> "ValveSettings":
        d = dict(self._u)
        d.update(changes)
        return ValveSettings(d)

    def __getitem__(self, leaf: int) -> float:
        return self._u[leaf]

    def __iter__(self) -> Iterator[int]:
        return iter(self._u)

    def __len__(self) -> int:
        return len(self._u)

    def __repr__(self) -> str:
        return f"ValveSettings({self._u!r})"


@dataclass(frozen=True)
class SolverDiagnostics:
    residual_inf_norm: float
    outer_iterations: int
    method: str


@dataclass(frozen=True)
class EquilibriumSolution:
    pressure: Mapping[int, float]
    edge_flow: Mapping[tuple[int, int], float]
    consumer_flow: Mapping[int, float]
    root_flow: float
    diagnostics: SolverDiagnostics = field(compare=False)

    @property
    def total_consumer_flow(self) -> float:
        return math.fsum(self.consumer_flow.values())


# -- residual ----------------------------------------------------------------

def residual(
    net: NetworkSpec,
    candidate: EquilibriumSolution,
    u: Union[ValveSettings, Mapping[int, float], float],
    pump_pressure: float | None = None,
) -> tuple[np.ndarray, float]:
    """Residual of every equilibrium equation at ``candidate``.

    Entry order:

    1. ``p_root - pump_pressure``
    2. ``p_i - p_j - f_ij(q_ij)`` for each edge, ascending by head id
    3. ``p_l - g_l(q_l, u_l)`` for each leaf, ascending
    4. ``q_j - (inflow_j - outflow_j)`` for each vertex, ascending, where
       ``q_j`` is the root flow at the root, the consumer flow at a leaf and
       zero at a junction

    Returns ``(vector, max |entry|)``.
    """
    u = ValveSettings.for_network(net, u)
    p0 = net.pump_pressure if pump_pressure is None else pump_pressure
    vids = [v for v, _ in net.vertices]
    if set(candidate.pressure) != set(vids):
        raise DimensionMismatch("candidate pressures do not match the network vertices")
    if set(candidate.edge_flow) != {(e.tail, e.head) for e in net.edges}:
        raise DimensionMismatch("candidate edge flows do not match the network edges")
    if set(candidate.consumer_flow) != set(net.leaves()):
        raise DimensionMismatch("candidate consumer flows do not match the network leaves")

    p, q = candidate.pressure, candidate.edge_flow
    r = [p[ROOT] - p0]
    for e in net.edges:
        r.append(p[e.tail] - p[e.head] - e.pipe.curve().eval(q[(e.tail, e.head)]))
    for leaf in net.leaves():
        g = net.valve(leaf).curve(u[leaf])
        r.append(p[leaf] - g.eval(candidate.consumer_flow[leaf]))
    for v in vids:
        if v == ROOT:
            qv = candidate.root_flow
        elif net.is_leaf(v):
            qv = candidate.consumer_flow[v]
        else:
            qv = 0.0
        inflow = q[(net.parent[v], v)] if v != ROOT else 0.0
        outflow = math.fsum(q[(v, c)] for c in net.children[v])
        r.append(qv - (inflow - outflow))
    vec = np.asarray(r, dtype=float)
    return vec, float(np.max(np.abs(vec))) if vec.size else 0.0


# -- monotone tree solver ----------------------------------------------------

def _branch_curves(net: NetworkSpec, u: ValveSettings, cfg: SolverConfig,
                   top: int | None = None) -> tuple[dict[int, MonotoneCurve], dict[int, MonotoneCurve]]:
    """Bottom-up response curves.

    ``vertex_curve[v]`` maps the flow absorbed by the subtree at ``v`` to the
    pressure at ``v``; ``branch_curve[v]`` prepends the pipe into ``v`` and so
    maps the same flow to the pressure at ``v``'s parent.  Only the subtree
    below ``top`` is built when given.
    """
    order = net.order if top is None else net.subtree(top).vertices
    kw = dict(reduce=cfg.reduce_power_laws, tol=cfg.flow_tolerance,
              max_iter=cfg.max_scalar_iterations)
    vertex_curve: dict[int, MonotoneCurve] = {}
    branch_curve: dict[int, MonotoneCurve] = {}
    for v in reversed(order):
        if v == ROOT:
            continue
        if net.is_leaf(v):
            vertex_curve[v] = net.valve(v).curve(u[v])
        else:
            vertex_curve[v] = parallel([branch_curve[c] for c in net.children[v]], **kw)
        branch_curve[v] = series([net.edge_into[v].pipe.curve(), vertex_curve[v]], **kw)
    return vertex_curve, branch_curve


def _invert(curve: MonotoneCurve, p: float) -> float:
    try:
        return curve.inverse(p)
    except BracketExpansionFailed as exc:
        raise ScalarSolveDiverged(str(exc)) from exc


def subtree_flow_response(
    net: NetworkSpec,
    v: int,
    p: float,
    u: Union[ValveSettings, Mapping[int, float], float],
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> float:
    """Flow absorbed by the subtree at ``v`` when its top sits at pressure ``p``.

    ``u`` must cover every leaf of ``net``.  Strictly increasing in ``p``.
    """
    if v == ROOT:
        raise IsRoot("subtree_flow_response needs a non-root vertex")
    if not math.isfinite(p):
        raise NonFiniteInput(f"non-finite pressure {p!r}")
    u = ValveSettings.for_network(net, u)
    vertex_curve, _ = _branch_curves(net, u, cfg, top=v)
    return _invert(vertex_curve[v], p)


def solve_tree(
    net: NetworkSpec,
    pump_pressure: float | None = None,
    u: Union[ValveSettings, Mapping[int, float], float] = 1.0,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> EquilibriumSolution:
    """Equilibrium via nested monotone scalar solves.

    Walks the tree top-down from the pump: at each vertex the flow into each
    child branch is the unique root of a strictly increasing scalar equation,
    and the child's pressure follows from the pipe law.
    """
    u = ValveSettings.for_network(net, u)
    p0 = float(net.pump_pressure if pump_pressure is None else pump_pressure)
    if not math.isfinite(p0):
        raise NonFiniteInput(f"non-finite pump pressure {p0!r}")
    _, branch_curve = _branch_curves(net, u, cfg)

    pressure: dict[int, float] = {ROOT: p0}
    edge_flow: dict[tuple[int, int], float] = {}
    consumer_flow: dict[int, float] = {}
    solves = 0
    for v in net.order:
        pv = pressure[v]
        for c in net.children[v]:
            q = _invert(branch_curve[c], pv)
            solves += 1
            edge_flow[(v, c)] = q
            pressure[c] = pv - net.edge_into[c].pipe.curve().eval(q)
            if net.is_leaf(c):
                consumer_flow[c] = q
    root_flow = -math.fsum(edge_flow[(ROOT, c)] for c in net.children[ROOT])

    sol = EquilibriumSolution(
        pressure=dict(sorted(pressure.items())),
        edge_flow={(e.tail, e.head): edge_flow[(e.tail, e.head)] for e in net.edges},
        consumer_flow=dict(sorted(consumer_flow.items())),
        root_flow=root_flow,
        diagnostics=SolverDiagnostics(0.0, solves, "tree"),
    )
    return _certify(net, sol, u, p0, cfg)


def _certify(net, sol, u, p0, cfg) -> EquilibriumSolution:
    _, norm = residual(net, sol, u, p0)
    if cfg.check_residual and not norm <= cfg.residual_tolerance:
        raise ResidualCheckFailed(
            f"{sol.diagnostics.method} solution residual {norm:.3e} exceeds "
            f"{cfg.residual_tolerance:.1e}"
        )
    diag = SolverDiagnostics(norm, sol.diagnostics.outer_iterations, sol.diagnostics.method)
    return EquilibriumSolution(sol.pressure, sol.edge_flow, sol.consumer_flow,
                               sol.root_flow, diag)


# -- damped Newton oracle ----------------------------------------------------

class _NewtonSystem:
    """Stacked equations in unknowns ``x = [p (non-root, ascending), q (edges)]``.

    Rows: one pipe law per edge, one valve law per leaf, one flow balance
    per junction.  The root pressure and the root/consumer flows are
    eliminated (they are fixed or equal to an edge flow).
    """

    def __init__(self, net: NetworkSpec, u: ValveSettings, p0: float):
        self.net = net
        self.p0 = p0
        self.pv = [v for v, _ in net.vertices if v != ROOT]
        self.pidx = {v: i for i, v in enumerate(self.pv)}
        self.edges = [(e.tail, e.head) for e in net.edges]
        n = len(self.pv)
        self.qidx = {e: n + i for i, e in enumerate(self.edges)}
        self.size = n + len(self.edges)
        self.pipes = [e.pipe.curve() for e in net.edges]
        self.leaves = net.leaves()
        self.valves = [net.valve(l).curve(u[l]) for l in self.leaves]
        self.junctions = [v for v in self.pv if not net.is_leaf(v)]

    def pressure(self, x: np.ndarray, v: int) -> float:
        return self.p0 if v == ROOT else x[self.pidx[v]]

    def initial(self, q0: float = 1e-3) -> np.ndarray:
        x = np.empty(self.size)
        for (i, j), curve in zip(self.edges, self.pipes):
            x[self.qidx[(i, j)]] = q0
        for v in self.net.order[1:]:
            e = self.net.edge_into[v]
            x[self.pidx[v]] = self.pressure(x, e.tail) - e.pipe.curve().eval(q0)
        return x

    def residual(self, x: np.ndarray) -> np.ndarray:
        net = self.net
        r = np.empty(self.size)
        k = 0
        for (i, j), curve in zip(self.edges, self.pipes):
            r[k] = self.pressure(x, i) - x[self.pidx[j]] - curve.eval(x[self.qidx[(i, j)]])
            k += 1
        for leaf, g in zip(self.leaves, self.valves):
            q = x[self.qidx[(net.parent[leaf], leaf)]]
            r[k] = x[self.pidx[leaf]] - g.eval(q)
            k += 1
        for j in self.junctions:
            r[k] = x[self.qidx[(net.parent[j], j)]] - sum(
                x[self.qidx[(j, c)]] for c in net.children[j])
            k += 1
        return r

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        net = self.net
        J = np.zeros((self.size, self.size))
        k = 0
        for (i, j), curve in zip(self.edges, self.pipes):
            if i != ROOT:
                J[k, self.pidx[i]] = 1.0
            J[k, self.pidx[j]] = -1.0
            qi = self.qidx[(i, j)]
            J[k, qi] = -curve.slope(x[qi])
            k += 1
        for leaf, g in zip(self.leaves, self.valves):
            qi = self.qidx[(net.parent[leaf], leaf)]
            J[k, self.pidx[leaf]] = 1.0
            J[k, qi] = -g.slope(x[qi])
            k += 1
        for j in self.junctions:
            J[k, self.qidx[(net.parent[j], j)]] = 1.0
            for c in net.children[j]:
                J[k, self.qidx[(j, c)]] = -1.0
            k += 1
        return J


def solve_newton(
    net: NetworkSpec,
    pump_pressure: float | None = None,
    u: Union[ValveSettings, Mapping[int, float], float] = 1.0,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> EquilibriumSolution:
    """Equilibrium via damped Newton on the full equation set.

    Backtracks by halving until the residual infinity norm decreases.  Once
    below ``residual_tolerance``, undamped polishing steps continue while
    they reduce the residual and the step is still above ``flow_tolerance``.
    Near zero flow the quadratic law makes convergence only linear, and a
    small residual alone would leave flows far from the root.
    """
    u = ValveSettings.for_network(net, u)
    p0 = float(net.pump_pressure if pump_pressure is None else pump_pressure)
    if not math.isfinite(p0):
        raise NonFiniteInput(f"non-finite pump pressure {p0!r}")
    sysm = _NewtonSystem(net, u, p0)
    x = sysm.initial()
    r = sysm.residual(x)
    norm = float(np.max(np.abs(r)))
    it = 0
    last_step = math.inf
    while not (norm <= cfg.residual_tolerance
               and (norm == 0.0 or last_step <= cfg.flow_tolerance)):
        if it >= cfg.max_newton_iterations:
            if norm <= cfg.residual_tolerance:
                break
            raise MaxIterations(
                f"Newton did not converge in {it} iterations (residual {norm:.3e})")
        try:
            dx = np.linalg.solve(sysm.jacobian(x), -r)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc
        if not np.all(np.isfinite(dx)):
            raise SingularJacobian("non-finite Newton step")
        it += 1
        if norm <= cfg.residual_tolerance:
            # polishing: keep full steps only while they still help
            x_new = x + dx
            r_new = sysm.residual(x_new)
            norm_new = float(np.max(np.abs(r_new)))
            if not norm_new < norm:
                break
            last_step = float(np.max(np.abs(dx)))
            x, r, norm = x_new, r_new, norm_new
            continue
        step = 1.0
        while True:
            x_new = x + step * dx
            r_new = sysm.residual(x_new)
            norm_new = float(np.max(np.abs(r_new)))
            if norm_new < (1.0 - 1e-4 * step) * norm:
                break
            step *= 0.5
            if step < cfg.newton_damping_floor:
                raise NewtonStalled(
                    f"line search failed at iteration {it} (residual {norm:.3e})")
        last_step = step * float(np.max(np.abs(dx)))
        x, r, norm = x_new, r_new, norm_new

    pressure = {ROOT: p0}
    pressure.update({v: float(x[sysm.pidx[v]]) for v in sysm.pv})
    edge_flow = {e: float(x[sysm.qidx[e]]) for e in sysm.edges}
    consumer_flow = {l: edge_flow[(net.parent[l], l)] for l in sysm.leaves}
    root_flow = -math.fsum(edge_flow[(ROOT, c)] for c in net.children[ROOT])
    sol = EquilibriumSolution(
        pressure=dict(sorted(pressure.items())),
        edge_flow=edge_flow,
        consumer_flow=consumer_flow,
        root_flow=root_flow,
        diagnostics=SolverDiagnostics(norm, it, "newton"),
    )
    return _certify(net, sol, u, p0, cfg)


def solve(net: NetworkSpec, pump_pressure: float | None = None,
          u: Union[ValveSettings, Mapping[int, float], float] = 1.0,
          cfg: SolverConfig = DEFAULT_CONFIG, method: str = "tree") -> EquilibriumSolution:
    """Dispatch to :func:`solve_tree` or :func:`solve_newton`."""
    if method == "tree":
        return solve_tree(net, pump_pressure, u, cfg)
    if method == "newton":
        return solve_newton(net, pump_pressure, u, cfg)
    raise ValueError(f"unknown method {method!r}")
