"""Road-network model: weighted graphs, shortest-path closure, and tours.

The depot is always node 0.  Graphs are undirected, connected, and carry
strictly positive edge lengths; distances between non-adjacent nodes are
taken along shortest paths, so every graph induces a metric on its node
set.  All types in this module are plain values — safe to share between
concurrently running workers.
"""

from __future__ import annotations

import json
import weakref
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import floyd_warshall

DEPOT = 0
TOL = 1e-9

TRUCK = "truck"
DRONE = "drone"


class GraphError(ValueError):
    """Malformed graph: self loop, duplicate edge, nonpositive length, ..."""


class DisconnectedGraphError(GraphError):
    """Some node cannot be reached from the depot."""

    def __init__(self, node: int):
        self.node = node
        super().__init__(f"node {node} is unreachable from the depot")


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph with positive edge lengths and depot at node 0.

    ``coords`` optionally records planar positions for generated Euclidean
    graphs.  ``meta`` is free-form provenance (generator name, seed, ...).
    """

    node_count: int
    edges: tuple[tuple[int, int, float], ...]
    coords: tuple[tuple[float, float], ...] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.node_count
        if n < 1:
            raise GraphError("graph needs at least the depot node")
        seen: set[tuple[int, int]] = set()
        for u, v, length in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u},{v}) references a missing node")
            if u == v:
                raise GraphError(f"self loop at node {u}")
            if length <= 0:
                raise GraphError(f"edge ({u},{v}) has nonpositive length {length}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphError(f"duplicate edge between {u} and {v}")
            seen.add(key)
        if self.coords is not None and len(self.coords) != n:
            raise GraphError("coords must list one position per node")
        _check_connected(self)

    @property
    def non_depot_nodes(self) -> tuple[int, ...]:
        return tuple(range(1, self.node_count))


def _check_connected(graph: WeightedGraph) -> None:
    n = graph.node_count
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v, _ in graph.edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * n
    seen[DEPOT] = True
    stack = [DEPOT]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    for node, ok in enumerate(seen):
        if not ok:
            raise DisconnectedGraphError(node)


@dataclass(eq=False)
class MetricClosure:
    """All-pairs shortest-path matrix of a :class:`WeightedGraph`.

    Symmetric, zero diagonal, and satisfies the triangle inequality up to
    floating-point tolerance.
    """

    dist: np.ndarray

    @property
    def node_count(self) -> int:
        return self.dist.shape[0]

    def d(self, u: int, v: int) -> float:
        return float(self.dist[u, v])

    def walk_length(self, nodes: Sequence[int]) -> float:
        total = 0.0
        for a, b in zip(nodes, nodes[1:]):
            total += self.dist[a, b]
        return float(total)


_closure_cache: "weakref.WeakKeyDictionary[WeightedGraph, MetricClosure]" = (
    weakref.WeakKeyDictionary()
)


def metric_closure(graph: WeightedGraph) -> MetricClosure:
    """Compute (and memoise per graph) the shortest-path distance matrix."""
    cached = _closure_cache.get(graph)
    if cached is not None:
        return cached
    n = graph.node_count
    rows, cols, vals = [], [], []
    for u, v, length in graph.edges:
        rows += [u, v]
        cols += [v, u]
        vals += [length, length]
    matrix = csr_matrix((vals, (rows, cols)), shape=(n, n))
    dist = floyd_warshall(matrix, directed=False)
    if np.isinf(dist).any():
        bad = int(np.argwhere(np.isinf(dist[DEPOT]))[0][0])
        raise DisconnectedGraphError(bad)
    # kill ulp-level asymmetry from the sparse routine, keep the metric exact
    dist = np.minimum(dist, dist.T)
    np.fill_diagonal(dist, 0.0)
    closure = MetricClosure(dist=np.ascontiguousarray(dist))
    _closure_cache[graph] = closure
    return closure


@dataclass(frozen=True)
class Tour:
    """Depot-to-depot node sequence served by one vehicle.

    The empty tour is the single-node sequence ``(0,)`` with length 0
    (vehicles are not required to depart from the depot).
    """

    nodes: tuple[int, ...]
    role: str = TRUCK

    def __post_init__(self):
        if len(self.nodes) == 0:
            raise GraphError("a tour needs at least the depot node")
        if self.nodes[0] != DEPOT or self.nodes[-1] != DEPOT:
            raise GraphError(f"tour {self.nodes} must start and end at the depot")
        if self.role not in (TRUCK, DRONE):
            raise GraphError(f"unknown vehicle role {self.role!r}")

    @property
    def is_empty(self) -> bool:
        return len(self.nodes) == 1

    @property
    def interior(self) -> tuple[int, ...]:
        """Non-depot nodes in visiting order."""
        return tuple(v for v in self.nodes if v != DEPOT)

    def length(self, closure: MetricClosure) -> float:
        return closure.walk_length(self.nodes)


def tour_time(tour: Tour, closure: MetricClosure, alpha: float) -> float:
    """Travel time of a tour: trucks move at speed 1, drones at speed alpha."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    length = tour.length(closure)
    return length / alpha if tour.role == DRONE else length


def make_star(n: int, d: float) -> WeightedGraph:
    """Star with ``n`` leaves, each joined to the depot by an edge of length ``d``."""
    if n < 1:
        raise GraphError("a star needs at least one leaf")
    if d <= 0:
        raise GraphError("leaf distance must be positive")
    edges = tuple((DEPOT, leaf, float(d)) for leaf in range(1, n + 1))
    return WeightedGraph(node_count=n + 1, edges=edges, meta={"family": "star", "d": d})


def make_two_level_star(n1: int, n2: int, d1: float, d2: float) -> WeightedGraph:
    """Star with ``n1`` near leaves at distance ``d1`` and ``n2`` far leaves at ``d2``.

    Far (level-2) leaves receive the low node indices 1..n2 and near (level-1)
    leaves follow at n2+1..n2+n1.  With the solver's smallest-index tie
    breaking this makes optimal tours visit the near block first, which is
    what the split-based policy needs to hand near nodes to the truck.
    ``meta['level1']`` / ``meta['level2']`` record the two groups.
    """
    if n1 < 1 or n2 < 1:
        raise GraphError("both leaf groups must be nonempty")
    if d1 <= 0 or d2 <= 0:
        raise GraphError("leaf distances must be positive")
    level2 = tuple(range(1, n2 + 1))
    level1 = tuple(range(n2 + 1, n2 + n1 + 1))
    edges = tuple((DEPOT, leaf, float(d2)) for leaf in level2) + tuple(
        (DEPOT, leaf, float(d1)) for leaf in level1
    )
    return WeightedGraph(
        node_count=n1 + n2 + 1,
        edges=edges,
        meta={"family": "two_level_star", "level1": level1, "level2": level2,
              "d1": d1, "d2": d2},
    )


class InstanceError(ValueError):
    """Invalid relief-distribution instance."""


@dataclass(eq=False)
class RdpInstance:
    """One relief-distribution scenario: graph, fleet, and hidden damage set.

    ``damaged`` is the ground truth used by simulations; online policies only
    learn a node's status once some vehicle first visits it.
    """

    graph: WeightedGraph
    closure: MetricClosure
    trucks: int
    drones: int
    alpha: float
    damaged: frozenset[int]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trucks < 1:
            raise InstanceError("at least one truck is required")
        if self.drones < 0:
            raise InstanceError("drone count cannot be negative")
        if self.alpha <= 0:
            raise InstanceError("alpha must be positive")
        nodes = set(self.graph.non_depot_nodes)
        if not self.damaged <= nodes:
            raise InstanceError("damaged set must consist of non-depot nodes")
        if self.damaged and self.trucks == 0:
            raise InstanceError("damaged nodes but no trucks: infeasible instance")

    @classmethod
    def build(cls, graph: WeightedGraph, trucks: int, drones: int, alpha: float,
              damaged: Iterable[int] = (), meta: dict | None = None) -> "RdpInstance":
        return cls(
            graph=graph,
            closure=metric_closure(graph),
            trucks=trucks,
            drones=drones,
            alpha=float(alpha),
            damaged=frozenset(int(v) for v in damaged),
            meta=dict(meta or {}),
        )

    def with_fleet(self, trucks: int, drones: int, alpha: float) -> "RdpInstance":
        """Same graph and damage, different fleet configuration."""
        return replace(self, trucks=trucks, drones=drones, alpha=float(alpha))

    @property
    def targets(self) -> tuple[int, ...]:
        return self.graph.non_depot_nodes


def instance_to_dict(instance: RdpInstance) -> dict:
    graph = instance.graph
    payload = {
        "nodes": graph.node_count,
        "depot": DEPOT,
        "edges": [[u, v, length] for u, v, length in graph.edges],
        "trucks": instance.trucks,
        "drones": instance.drones,
        "alpha": instance.alpha,
        "damaged": sorted(instance.damaged),
        "meta": dict(instance.meta),
    }
    if graph.coords is not None:
        payload["coords"] = [[x, y] for x, y in graph.coords]
    return payload


def instance_from_dict(payload: dict) -> RdpInstance:
    if payload.get("depot", DEPOT) != DEPOT:
        raise InstanceError("instance files must use depot 0")
    coords = payload.get("coords")
    graph = WeightedGraph(
        node_count=int(payload["nodes"]),
        edges=tuple((int(u), int(v), float(length)) for u, v, length in payload["edges"]),
        coords=tuple((float(x), float(y)) for x, y in coords) if coords else None,
        meta=dict(payload.get("meta", {})),
    )
    return RdpInstance.build(
        graph,
        trucks=int(payload["trucks"]),
        drones=int(payload["drones"]),
        alpha=float(payload["alpha"]),
        damaged=payload.get("damaged", ()),
        meta=payload.get("meta", {}),
    )


def save_instance(instance: RdpInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2)
        fh.write("\n")


def load_instance(path) -> RdpInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return instance_from_dict(json.load(fh))
