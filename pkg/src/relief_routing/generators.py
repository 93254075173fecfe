"""Seeded benchmark-graph generators and dataset builders.

Five graph classes: complete Euclidean graphs on the unit square, one- and
two-center clusters, and planar "coastal" and "mountain" road networks on a
lattice.  All randomness flows through an explicit xoshiro256** generator
(seeded via splitmix64), so a (config, seed) pair yields byte-identical
instances across runs.

Where the published descriptions leave constants open, the choices here are
documented inline: node exclusion radius of 3 lattice cells, exponential
coastline decay with scale 0.25 of the lattice width, a x3 placement boost
for cells within two rows of an accepted node, edge weights exp(-d/mean d),
a sin(theta) penalty against shallow-angle edges, and a mountain height
field made of three seeded Gaussian bumps with placement weight exp(-2h).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .graphs import RdpInstance, WeightedGraph

_MASK64 = (1 << 64) - 1

GRAPH_CLASSES = ("random", "one_center", "two_center", "coastal", "mountain")


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def mix_seed(*parts: int) -> int:
    """Derive a child seed from integer parts, order-sensitive."""
    state = 0x8BADF00D5EEDC0DE
    for part in parts:
        state, out = splitmix64(state ^ (part & _MASK64))
        state ^= out
    _, out = splitmix64(state)
    return out


class Xoshiro256StarStar:
    """xoshiro256** PRNG (Blackman & Vigna), state seeded via splitmix64.

    Update constants: multipliers 5 and 9, rotations 7 and 45, shift 17.
    ``random()`` draws 53 bits; normals use Box-Muller with a cached spare.
    """

    def __init__(self, seed: int):
        state = seed & _MASK64
        words = []
        for _ in range(4):
            state, out = splitmix64(state)
            words.append(out)
        self._s = words
        self._spare_normal: float | None = None

    @staticmethod
    def _rotl(x: int, k: int) -> int:
        return ((x << k) | (x >> (64 - k))) & _MASK64

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (self._rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = self._rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
        else:
            u1 = 1.0 - self.random()  # (0, 1], keeps log finite
            u2 = self.random()
            r = math.sqrt(-2.0 * math.log(u1))
            z = r * math.cos(2.0 * math.pi * u2)
            self._spare_normal = r * math.sin(2.0 * math.pi * u2)
        return mu + sigma * z

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n), rejection-sampled to avoid modulo bias."""
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def weighted_index(self, weights) -> int:
        total = 0.0
        for w in weights:
            total += w
        if total <= 0:
            raise ValueError("no positive weights left")
        r = self.random() * total
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if r < acc:
                return i
        for i in range(len(weights) - 1, -1, -1):  # float slack: last positive
            if weights[i] > 0:
                return i
        raise ValueError("no positive weights left")


@dataclass
class GeneratorConfig:
    """One graph-generation request."""

    graph_class: str
    n: int
    seed: int
    damage_prob: float = 0.0
    edge_target: int | None = None  # coastal/mountain only

    def __post_init__(self):
        if self.graph_class not in GRAPH_CLASSES:
            raise ValueError(f"unknown graph class {self.graph_class!r}")
        if self.n < 2:
            raise ValueError("need at least the depot and one demand node")
        if not 0.0 <= self.damage_prob <= 1.0:
            raise ValueError("damage probability must lie in [0, 1]")
        if self.graph_class in ("coastal", "mountain"):
            target = self.edge_target if self.edge_target is not None else 2 * self.n
            if target < self.n - 1:
                raise ValueError("edge target below spanning-tree minimum")


def _euclid(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def _complete_graph(points, meta) -> WeightedGraph:
    n = len(points)
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            edges.append((u, v, _euclid(points[u], points[v])))
    return WeightedGraph(node_count=n, edges=tuple(edges),
                         coords=tuple(points), meta=meta)


def _too_close(points, candidate, min_gap=1e-9) -> bool:
    return any(_euclid(p, candidate) < min_gap for p in points)


def gen_random(n: int, seed: int) -> WeightedGraph:
    """Complete Euclidean graph, nodes uniform on the unit square, first
    sampled node is the depot."""
    rng = Xoshiro256StarStar(seed)
    points: list[tuple[float, float]] = []
    while len(points) < n:
        candidate = (rng.random(), rng.random())
        if not _too_close(points, candidate):
            points.append(candidate)
    return _complete_graph(points, {"class": "random", "seed": seed, "n": n})


def gen_center(n: int, seed: int, centers: int) -> WeightedGraph:
    """Cluster graphs: depot at the origin; nodes at angle U[0, pi] and
    radius N(0, 50).  With two centers a second hub sits at (200, 0) and each
    sampled node is translated there with probability one half."""
    if centers not in (1, 2):
        raise ValueError("centers must be 1 or 2")
    rng = Xoshiro256StarStar(seed)
    points: list[tuple[float, float]] = [(0.0, 0.0)]
    if centers == 2:
        points.append((200.0, 0.0))
    while len(points) < n:
        angle = rng.random() * math.pi
        radius = rng.normal(0.0, 50.0)
        candidate = (radius * math.cos(angle), radius * math.sin(angle))
        if centers == 2 and rng.random() < 0.5:
            candidate = (candidate[0] + 200.0, candidate[1])
        if not _too_close(points, candidate):
            points.append(candidate)
    label = "one_center" if centers == 1 else "two_center"
    return _complete_graph(points, {"class": label, "seed": seed, "n": n})


_LATTICE = 101  # lattice points per axis
_EXCLUSION_CELLS = 3
_COAST_DECAY = 0.25  # fraction of lattice width
_COAST_BAND_CELLS = 2
_COAST_BAND_BOOST = 3.0
_MOUNTAIN_BUMPS = 3
_MOUNTAIN_HEIGHT_WEIGHT = 2.0
_MOUNTAIN_HEIGHT_FLOOR = 0.1
_SEGMENT_SAMPLES = 33
_MAX_ATTEMPTS = 100


def _orient(p, q, r) -> int:
    cross = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    if cross > 0:
        return 1
    if cross < 0:
        return -1
    return 0


def _on_segment(p, q, r) -> bool:
    return (min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
            and min(p[1], q[1]) <= r[1] <= max(p[1], q[1]))


def _segments_cross(a, b, c, d) -> bool:
    """Proper or improper intersection, ignoring shared endpoints."""
    if a in (c, d) or b in (c, d):
        return False
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(a, b, c):
        return True
    if o2 == 0 and _on_segment(a, b, d):
        return True
    if o3 == 0 and _on_segment(c, d, a):
        return True
    if o4 == 0 and _on_segment(c, d, b):
        return True
    return False


def _angle_penalty(cells, edges, candidate) -> float:
    """sin of the smallest angle the candidate makes with incident edges."""
    u, v = candidate
    best = math.pi / 2.0
    for a, b in edges:
        shared = None
        if a in candidate:
            shared = a
        elif b in candidate:
            shared = b
        if shared is None:
            continue
        other_new = v if shared == u else u
        other_old = b if shared == a else a
        v1 = (cells[other_new][0] - cells[shared][0], cells[other_new][1] - cells[shared][1])
        v2 = (cells[other_old][0] - cells[shared][0], cells[other_old][1] - cells[shared][1])
        dot = v1[0] * v2[0] + v1[1] * v2[1]
        norm = math.hypot(*v1) * math.hypot(*v2)
        if norm == 0:
            return 0.0
        angle = math.acos(max(-1.0, min(1.0, dot / norm)))
        best = min(best, angle)
    return math.sin(best)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def _lattice_graph(n, seed, edge_target, model, meta):
    """Shared machinery for the planar lattice classes.

    Phase 1 places n nodes by weighted sampling, phase 2 draws a maximum
    spanning tree by edge weight, phase 3 adds edges by weighted sampling
    with the shallow-angle penalty and a hard no-crossing rule.  The model
    object supplies placement weights, coordinates, and edge weights.
    """
    if edge_target is None:
        edge_target = 2 * n
    for attempt in range(_MAX_ATTEMPTS):
        rng = Xoshiro256StarStar(mix_seed(seed, attempt))
        cells = _place_nodes(rng, n, model)
        if cells is None:
            continue
        graph = _draw_edges(rng, cells, edge_target, model, meta, seed)
        if graph is not None:
            return graph
    raise RuntimeError(
        f"could not generate an admissible {meta['class']} graph in "
        f"{_MAX_ATTEMPTS} attempts (seed {seed})")


def _place_nodes(rng, n, weight_fn):
    size = _LATTICE
    weights = [[weight_fn(i, j) for j in range(size)] for i in range(size)]
    boosted = [[False] * size for _ in range(size)]
    cells: list[tuple[int, int]] = []
    for _ in range(n):
        flat = []
        indices = []
        for i in range(size):
            row = weights[i]
            for j in range(size):
                if row[j] > 0.0:
                    flat.append(row[j])
                    indices.append((i, j))
        if not flat:
            return None
        ci, cj = indices[rng.weighted_index(flat)]
        cells.append((ci, cj))
        r = _EXCLUSION_CELLS
        for i in range(max(0, ci - r + 1), min(size, ci + r)):
            for j in range(max(0, cj - r + 1), min(size, cj + r)):
                if (i - ci) ** 2 + (j - cj) ** 2 < r * r:
                    weights[i][j] = 0.0
        if weight_fn.banded:
            for j in range(max(0, cj - _COAST_BAND_CELLS),
                           min(size, cj + _COAST_BAND_CELLS + 1)):
                for i in range(size):
                    if not boosted[i][j]:
                        boosted[i][j] = True
                        weights[i][j] *= _COAST_BAND_BOOST
    return cells


def _draw_edges(rng, cells, edge_target, model, meta, seed):
    n = len(cells)
    coords = [model.to_xy(c) for c in cells]
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    mean_dist = sum(_euclid(coords[u], coords[v]) for u, v in pairs) / len(pairs)
    base = {}
    for u, v in pairs:
        d = _euclid(coords[u], coords[v])
        base[(u, v)] = model.edge_weight(cells[u], cells[v], d, mean_dist)
    # maximum spanning tree by weight (Kruskal), deterministic tie order
    ordered = sorted(pairs, key=lambda e: (-base[e], e))
    uf = _UnionFind(n)
    edges: list[tuple[int, int]] = []
    for u, v in ordered:
        if uf.union(u, v):
            edges.append((u, v))
    chosen = set(edges)
    remaining = [e for e in pairs if e not in chosen]
    while len(edges) < edge_target:
        weights = []
        for u, v in remaining:
            w = base[(u, v)]
            if w > 0:
                crossing = any(
                    _segments_cross(cells[u], cells[v], cells[a], cells[b])
                    for a, b in edges)
                w = 0.0 if crossing else w * _angle_penalty(cells, edges, (u, v))
            weights.append(w)
        if not any(w > 0 for w in weights):
            return None
        choice = rng.weighted_index(weights)
        edges.append(remaining.pop(choice))
    graph_edges = tuple(
        (u, v, _euclid(coords[u], coords[v])) for u, v in sorted(edges))
    full_meta = dict(meta)
    full_meta.update({"seed": seed, "n": n, "edge_target": edge_target})
    return WeightedGraph(node_count=n, edges=graph_edges,
                         coords=tuple(coords), meta=full_meta)


class _CoastWeights:
    """Placement decays away from the coastline (the x = 0 edge); cells in
    the y-band of an accepted node get a boost, modelling villages lining
    up perpendicular to the coast."""

    banded = True

    def __init__(self, n):
        self.height_y = n / 15.0

    def __call__(self, i, j):
        x = i / (_LATTICE - 1)
        return math.exp(-x / _COAST_DECAY)

    def to_xy(self, cell):
        return (cell[0] / (_LATTICE - 1), cell[1] / (_LATTICE - 1) * self.height_y)

    @staticmethod
    def edge_weight(cu, cv, dist, mean_dist):
        return math.exp(-dist / mean_dist)


class _MountainWeights:
    """Placement favours valleys of a height field built from three seeded
    Gaussian bumps; edges are penalised by the highest point under them."""

    banded = False

    def __init__(self, n, rng):
        self.side = math.sqrt(n / 15.0)
        self.bumps = [
            (rng.uniform(0.0, self.side), rng.uniform(0.0, self.side), self.side / 4.0)
            for _ in range(_MOUNTAIN_BUMPS)
        ]

    def height(self, x, y):
        total = 0.0
        for cx, cy, sigma in self.bumps:
            total += math.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * sigma * sigma))
        return total

    def __call__(self, i, j):
        x, y = self.to_xy((i, j))
        return math.exp(-_MOUNTAIN_HEIGHT_WEIGHT * self.height(x, y))

    def to_xy(self, cell):
        scale = self.side / (_LATTICE - 1)
        return (cell[0] * scale, cell[1] * scale)

    def edge_weight(self, cu, cv, dist, mean_dist):
        xu, yu = self.to_xy(cu)
        xv, yv = self.to_xy(cv)
        peak = 0.0
        for k in range(_SEGMENT_SAMPLES):
            t = k / (_SEGMENT_SAMPLES - 1)
            h = self.height(xu + t * (xv - xu), yu + t * (yv - yu))
            peak = max(peak, h)
        return math.exp(-dist / mean_dist) / (_MOUNTAIN_HEIGHT_FLOOR + peak)


def gen_coastal(n: int, seed: int, edge_target: int | None = None) -> WeightedGraph:
    """Planar metric graph resembling a coastal road network."""
    return _lattice_graph(n, seed, edge_target, _CoastWeights(n),
                          {"class": "coastal"})


def gen_mountain(n: int, seed: int, edge_target: int | None = None) -> WeightedGraph:
    """Planar metric graph resembling a mountain road network."""
    rng = Xoshiro256StarStar(mix_seed(seed, 0xA17))
    return _lattice_graph(n, seed, edge_target, _MountainWeights(n, rng),
                          {"class": "mountain"})


def sample_damage(graph: WeightedGraph, delta: float, seed: int) -> frozenset[int]:
    """Independent Bernoulli(delta) damage per non-depot node."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError("damage probability must lie in [0, 1]")
    rng = Xoshiro256StarStar(seed)
    return frozenset(v for v in range(1, graph.node_count) if rng.random() < delta)


def generate_graph(config: GeneratorConfig) -> WeightedGraph:
    cls = config.graph_class
    if cls == "random":
        return gen_random(config.n, config.seed)
    if cls == "one_center":
        return gen_center(config.n, config.seed, centers=1)
    if cls == "two_center":
        return gen_center(config.n, config.seed, centers=2)
    if cls == "coastal":
        return gen_coastal(config.n, config.seed, config.edge_target)
    return gen_mountain(config.n, config.seed, config.edge_target)


# ---------------------------------------------------------------------------
# benchmark datasets


@dataclass
class DatasetItem:
    instance_id: str
    instance: RdpInstance
    alphas: tuple[float, ...]
    fleets: tuple[tuple[int, int], ...]


DATASETS = ("RANDOM", "BASE", "VAR", "SMALL", "LARGE")

_RANDOM_SIZES = (13, 15, 18, 21)
_REPLICATES = 20
_DAMAGE_PROBS = (0.1, 0.3, 0.5, 0.7, 0.9)
_WIDE_ALPHAS = (0.25, 0.5, 1.0, 2.0, 4.0)
_SMALL_ALPHAS = (0.5, 1.0, 2.0)
_SMALL_FLEETS = ((1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (3, 1))

_CLASS_CODES = {name: i + 1 for i, name in enumerate(GRAPH_CLASSES)}


def _graph_seed(root_seed, graph_class, n, replicate) -> int:
    return mix_seed(root_seed, _CLASS_CODES[graph_class], n, replicate)


def _damage_seed(graph_seed, delta) -> int:
    return mix_seed(graph_seed, int(round(delta * 1000)))


def _make_item(root_seed, graph_class, n, replicate, delta, alphas, fleets,
               edge_target=None) -> DatasetItem:
    seed = _graph_seed(root_seed, graph_class, n, replicate)
    config = GeneratorConfig(graph_class=graph_class, n=n, seed=seed,
                             damage_prob=delta, edge_target=edge_target)
    graph = generate_graph(config)
    damage = sample_damage(graph, delta, _damage_seed(seed, delta))
    instance_id = f"{graph_class}-n{n:02d}-r{replicate:02d}-p{int(round(delta * 100)):02d}"
    meta = {"id": instance_id, "class": graph_class, "n": n, "seed": seed,
            "delta": delta, "replicate": replicate}
    instance = RdpInstance.build(graph, trucks=1, drones=1, alpha=1.0,
                                 damaged=damage, meta=meta)
    return DatasetItem(instance_id=instance_id, instance=instance,
                       alphas=tuple(alphas), fleets=tuple(fleets))


def _random_items(root_seed, sizes, probs, alphas, fleets) -> list[DatasetItem]:
    items = []
    for n in sizes:
        for replicate in range(_REPLICATES):
            for delta in probs:
                items.append(_make_item(root_seed, "random", n, replicate,
                                        delta, alphas, fleets))
    return items


def build_dataset(name: str, root_seed: int) -> list[DatasetItem]:
    """Construct one of the named benchmark datasets, fully seeded.

    RANDOM: 20 random graphs per size in {13, 15, 18, 21}, five damage sets
    each.  BASE: the 18-node, damage-0.3 slice of RANDOM.  VAR: BASE plus 20
    graphs each of the four other classes at 18 nodes.  LARGE: RANDOM plus
    VAR's non-random classes.  SMALL: the 13-node slice with the
    multi-vehicle fleet grid and the narrow speed grid.
    """
    name = name.upper()
    if name == "RANDOM":
        return _random_items(root_seed, _RANDOM_SIZES, _DAMAGE_PROBS,
                             _WIDE_ALPHAS, ((1, 1),))
    if name == "BASE":
        return _random_items(root_seed, (18,), (0.3,), _WIDE_ALPHAS, ((1, 1),))
    if name == "VAR":
        items = build_dataset("BASE", root_seed)
        for graph_class in ("one_center", "two_center", "coastal", "mountain"):
            target = 36 if graph_class in ("coastal", "mountain") else None
            for replicate in range(_REPLICATES):
                items.append(_make_item(root_seed, graph_class, 18, replicate,
                                        0.3, _WIDE_ALPHAS, ((1, 1),),
                                        edge_target=target))
        return items
    if name == "LARGE":
        items = build_dataset("RANDOM", root_seed)
        var = build_dataset("VAR", root_seed)
        have = {item.instance_id for item in items}
        items.extend(item for item in var if item.instance_id not in have)
        return items
    if name == "SMALL":
        return _random_items(root_seed, (13,), _DAMAGE_PROBS, _SMALL_ALPHAS,
                             _SMALL_FLEETS)
    raise ValueError(f"unknown dataset {name!r}; known: {', '.join(DATASETS)}")


def dataset_manifest(name: str, root_seed: int, items: list[DatasetItem]) -> dict:
    return {
        "dataset": name.upper(),
        "root_seed": root_seed,
        "instances": [
            {
                "id": item.instance_id,
                "class": item.instance.meta.get("class"),
                "n": item.instance.meta.get("n"),
                "seed": item.instance.meta.get("seed"),
                "delta": item.instance.meta.get("delta"),
                "damaged": sorted(item.instance.damaged),
                "alphas": list(item.alphas),
                "fleets": [list(f) for f in item.fleets],
            }
            for item in items
        ],
    }
