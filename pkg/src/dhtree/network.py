"""Rooted-tree network model.

A network is a directed tree with a single pump at the root (id 0), valves
at every leaf and junctions everywhere else.  Each edge stands for a
supply/return pipe pair; since both layers carry the same flow, the model
works with one flow per edge and one differential pressure per vertex.

Build networks with :func:`validate`; the resulting :class:`NetworkSpec` is
immutable and every downstream module trusts its invariants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Union

from .components import PipeCurveParams, ValveCurveParams
from .errors import (
    CycleDetected,
    Disconnected,
    DuplicateEdge,
    InvalidParameter,
    InvalidVertex,
    IsRoot,
    LeafNotValve,
    MissingPump,
    MultiplePumps,
    NonLeafValve,
    PumpNotRoot,
    RootIsLeaf,
    SelfLoop,
)

ROOT = 0


@dataclass(frozen=True)
class Pump:
    """Ideal differential-pressure source."""

    pressure: float


@dataclass(frozen=True)
class Junction:
    pass


@dataclass(frozen=True)
class Valve:
    curve: ValveCurveParams


VertexKind = Union[Pump, Junction, Valve]


@dataclass(frozen=True)
class EdgeSpec:
    """Pipe pair from ``tail`` (parent) to ``head`` (child)."""

    tail: int
    head: int
    pipe: PipeCurveParams


@dataclass(frozen=True)
class NetworkSpec:
    """Validated single-pump tree.  Construct through :func:`validate`."""

    vertices: tuple[tuple[int, VertexKind], ...]
    edges: tuple[EdgeSpec, ...]
    # derived on validation
    kinds: Mapping[int, VertexKind] = field(compare=False, repr=False)
    parent: Mapping[int, int] = field(compare=False, repr=False)
    children: Mapping[int, tuple[int, ...]] = field(compare=False, repr=False)
    edge_into: Mapping[int, EdgeSpec] = field(compare=False, repr=False)
    order: tuple[int, ...] = field(compare=False, repr=False)
    depth: Mapping[int, int] = field(compare=False, repr=False)
    root_series_pipe: bool = field(compare=False)

    @property
    def root(self) -> int:
        return ROOT

    @property
    def pump_pressure(self) -> float:
        return self.kinds[ROOT].pressure

    @property
    def root_out_degree(self) -> int:
        return len(self.children[ROOT])

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    def is_leaf(self, v: int) -> bool:
        return v != ROOT and not self.children[v]

    def leaves(self) -> list[int]:
        return leaves(self)

    def subtree(self, v: int) -> "SubtreeView":
        return subtree(self, v)

    def valve(self, v: int) -> ValveCurveParams:
        kind = self.kinds[v]
        if not isinstance(kind, Valve):
            raise KeyError(f"vertex {v} is not a valve")
        return kind.curve

    def with_pump_pressure(self, pressure: float) -> "NetworkSpec":
        vertices = [(i, Pump(pressure) if i == ROOT else k) for i, k in self.vertices]
        return validate(vertices, self.edges)

    def __repr__(self) -> str:
        return (f"NetworkSpec(vertices={len(self.vertices)}, "
                f"leaves={len(self.leaves())}, pump_pressure={self.pump_pressure!r})")


@dataclass(frozen=True)
class SubtreeView:
    """Read-only view of the subtree hanging below vertex ``root``."""

    network: NetworkSpec
    root: int
    vertices: tuple[int, ...]  # preorder, children ascending
    edges: tuple[EdgeSpec, ...]

    def leaves(self) -> list[int]:
        return sorted(v for v in self.vertices if self.network.is_leaf(v))

    @property
    def inflow_edge(self) -> EdgeSpec:
        return self.network.edge_into[self.root]

    def __contains__(self, v: int) -> bool:
        return v in set(self.vertices)


def _check_vertex_ids(vertices) -> dict[int, VertexKind]:
    kinds: dict[int, VertexKind] = {}
    for vid, kind in vertices:
        if isinstance(vid, bool) or not isinstance(vid, int) or vid < 0:
            raise InvalidVertex(f"vertex id must be a non-negative integer, got {vid!r}")
        if vid in kinds:
            raise InvalidVertex(f"duplicate vertex id {vid}")
        if not isinstance(kind, (Pump, Junction, Valve)):
            raise InvalidVertex(f"vertex {vid}: unknown kind {kind!r}")
        if isinstance(kind, Pump) and not math.isfinite(kind.pressure):
            raise InvalidParameter(f"vertex {vid}: pump pressure must be finite")
        kinds[vid] = kind
    return kinds


def validate(
    vertices: Iterable[tuple[int, VertexKind]],
    edges: Iterable[EdgeSpec],
) -> NetworkSpec:
    """Check raw vertex/edge lists and build a :class:`NetworkSpec`.

    Raises a :class:`~dhtree.errors.ValidationError` subclass naming the
    offending vertex or edge.
    """
    vertices = list(vertices)
    edges = list(edges)
    kinds = _check_vertex_ids(vertices)

    parent: dict[int, int] = {}
    children: dict[int, list[int]] = {v: [] for v in kinds}
    edge_into: dict[int, EdgeSpec] = {}
    seen: set[tuple[int, int]] = set()
    for e in edges:
        if e.tail not in kinds or e.head not in kinds:
            raise InvalidVertex(f"edge {e.tail}->{e.head} references an unknown vertex")
        if e.tail == e.head:
            raise SelfLoop(f"self-loop at vertex {e.tail}")
        if (e.tail, e.head) in seen:
            raise DuplicateEdge(f"duplicate edge {e.tail}->{e.head}")
        seen.add((e.tail, e.head))
        if e.head in parent:
            raise CycleDetected(
                f"vertex {e.head} has two parents ({parent[e.head]} and {e.tail})"
            )
        parent[e.head] = e.tail
        children[e.tail].append(e.head)
        edge_into[e.head] = e

    roots = sorted(v for v in kinds if v not in parent)
    if not roots:
        raise CycleDetected(f"no root vertex; edges form a cycle through {min(kinds)}")

    # traverse from the first root; anything unreached hangs off a cycle or
    # another root
    for v in children:
        children[v].sort()
    order: list[int] = []
    depth: dict[int, int] = {roots[0]: 0}
    stack = [roots[0]]
    while stack:
        v = stack.pop()
        order.append(v)
        for c in reversed(children[v]):
            depth[c] = depth[v] + 1
            stack.append(c)
    unreached = sorted(set(kinds) - set(order))
    if unreached:
        in_cycle = [v for v in unreached if v in parent]
        if len(roots) > 1:
            raise Disconnected(
                f"vertices {unreached} are not reachable from root {roots[0]}"
            )
        raise CycleDetected(f"cycle among vertices {in_cycle}")

    pumps = sorted(v for v, k in kinds.items() if isinstance(k, Pump))
    if not pumps:
        raise MissingPump("network has no pump")
    if len(pumps) > 1:
        raise MultiplePumps(f"network has several pumps: {pumps}")
    if pumps[0] != roots[0]:
        raise PumpNotRoot(f"pump {pumps[0]} is not the root (root is {roots[0]})")
    if roots[0] != ROOT:
        raise PumpNotRoot(f"root pump must have id {ROOT}, got {roots[0]}")
    if not children[ROOT]:
        raise RootIsLeaf("pump has no downstream vertices")
    for v, k in kinds.items():
        if v == ROOT:
            continue
        if isinstance(k, Valve) and children[v]:
            raise NonLeafValve(f"valve {v} has children {children[v]}")
        if not children[v] and not isinstance(k, Valve):
            raise LeafNotValve(f"leaf vertex {v} is not a valve")

    return NetworkSpec(
        vertices=tuple(sorted(((v, kinds[v]) for v in kinds), key=lambda t: t[0])),
        edges=tuple(sorted(edges, key=lambda e: e.head)),
        kinds=MappingProxyType(kinds),
        parent=MappingProxyType(parent),
        children=MappingProxyType({v: tuple(c) for v, c in children.items()}),
        edge_into=MappingProxyType(edge_into),
        order=tuple(order),
        depth=MappingProxyType(depth),
        root_series_pipe=len(children[ROOT]) == 1,
    )


def leaves(net: NetworkSpec) -> list[int]:
    """Valve leaves in ascending id order."""
    return [v for v, k in net.vertices if isinstance(k, Valve)]


def subtree(net: NetworkSpec, v: int) -> SubtreeView:
    """View of the subtree rooted at non-root vertex ``v``."""
    if v == ROOT:
        raise IsRoot("the subtree at the root is the whole network")
    if v not in net.kinds:
        raise KeyError(f"unknown vertex {v}")
    verts: list[int] = []
    stack = [v]
    while stack:
        w = stack.pop()
        verts.append(w)
        stack.extend(reversed(net.children[w]))
    return SubtreeView(
        network=net,
        root=v,
        vertices=tuple(verts),
        edges=tuple(net.edge_into[w] for w in verts[1:]),
    )


def edge(tail: int, head: int, k_supply: float, k_return: float,
         exponent: float = 2.0) -> EdgeSpec:
    """Shorthand for an :class:`EdgeSpec` with a power-law pipe."""
    return EdgeSpec(tail, head, PipeCurveParams(k_supply, k_return, exponent))


def valve(k_valve: float, exponent: float = 2.0) -> Valve:
    return Valve(ValveCurveParams(k_valve, exponent))


def two_consumer_network(pump_pressure: float = 1.0) -> NetworkSpec:
    """Pump 0, junctions 3 and 4, valves 1 and 2.

    Pipes have ``k_supply = k_return = 0.5`` and valves ``k = 1``.
    """
    return validate(
        [(0, Pump(pump_pressure)), (1, valve(1.0)), (2, valve(1.0)),
         (3, Junction()), (4, Junction())],
        [edge(0, 3, 0.5, 0.5), edge(3, 1, 0.5, 0.5),
         edge(3, 4, 0.5, 0.5), edge(4, 2, 0.5, 0.5)],
    )
