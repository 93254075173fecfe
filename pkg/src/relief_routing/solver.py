"""Exact minmax routing over mixed truck/drone fleets.

The solver composes three exact building blocks:

* a Held-Karp table of shortest depot-rooted paths over every subset of the
  target nodes (bitmask dynamic program),
* per-subset optimal closed-tour costs obtained by closing those paths back
  to the depot,
* a minmax partition dynamic program that assigns subsets to vehicles,
  sharing one layer table between trucks and drones (a drone tour is a truck
  tour divided by the speed factor, and positive scaling preserves argmins).

Everything is deterministic: ties are broken by a fixed enumeration order so
that adversarial instance constructors can rely on the returned tours.
A brute-force enumerator over vehicle assignments and node permutations
serves as the independent correctness oracle at small sizes.
"""

from __future__ import annotations

import itertools
import weakref
from dataclasses import dataclass

import numpy as np
from numba import njit

from .graphs import DEPOT, DRONE, TRUCK, MetricClosure, RdpInstance, Tour

SUBSET_CAP = 20
BRUTE_FORCE_CAP = 7

# argmin selections treat values this close as equal and keep the first
# candidate in the canonical enumeration order, so floating-point noise in
# distance sums cannot override the documented tie-breaking
TIE_EPS = 1e-12


class SolverCapError(ValueError):
    def __init__(self, size: int, cap: int):
        self.size = size
        super().__init__(f"{size} target nodes exceed the solver cap of {cap}")


class InfeasibleError(ValueError):
    """No feasible assignment exists (e.g. required truck nodes without trucks)."""


@njit(cache=True)
def _path_table(dist, start, targets):
    """Shortest start-rooted paths over every subset of targets.

    length[mask, last] = shortest walk from ``start`` visiting exactly the
    subset encoded by ``mask`` and ending at targets[last].  parent ties are
    broken toward the smallest predecessor index (first strict improvement).
    """
    k = targets.shape[0]
    size = 1 << k
    length = np.full((size, k), np.inf)
    parent = np.full((size, k), -1, dtype=np.int8)
    for i in range(k):
        length[1 << i, i] = dist[start, targets[i]]
    for mask in range(1, size):
        for last in range(k):
            if (mask >> last) & 1 == 0:
                continue
            prev = mask ^ (1 << last)
            if prev == 0:
                continue
            best = np.inf
            arg = -1
            for w in range(k):
                if (prev >> w) & 1 == 0:
                    continue
                cand = length[prev, w] + dist[targets[w], targets[last]]
                if cand < best - TIE_EPS:
                    best = cand
                    arg = w
            length[mask, last] = best
            parent[mask, last] = arg
    return length, parent


@njit(cache=True)
def _closed_costs(length, dist_back):
    """Optimal closed-tour cost per subset: close the best path to the depot.

    End-node ties break toward the smallest target index.
    """
    size, k = length.shape
    cost = np.zeros(size)
    end = np.full(size, -1, dtype=np.int8)
    for mask in range(1, size):
        best = np.inf
        arg = -1
        for last in range(k):
            if (mask >> last) & 1:
                cand = length[mask, last] + dist_back[last]
                if cand < best - TIE_EPS:
                    best = cand
                    arg = last
        cost[mask] = best
        end[mask] = arg
    return cost, end


@njit(cache=True)
def _minmax_layer(prev_best, prev_count, closed, popcount):
    """One more vehicle: best[S] = min over T subset of S of max(closed[T], prev[S\\T]).

    The objective is lexicographic: makespan first, then the largest tour
    cardinality, so makespan ties resolve toward partitions that balance
    node counts over the interchangeable vehicles.  T = 0 (the new vehicle
    stays home) is the starting candidate; submasks are enumerated
    descending with first-strict-improvement, which makes the
    reconstruction deterministic.
    """
    size = prev_best.shape[0]
    out = np.empty(size)
    out_count = np.zeros(size, dtype=np.int64)
    pick = np.zeros(size, dtype=np.int64)
    out[0] = 0.0
    for s in range(1, size):
        best = prev_best[s]
        best_count = prev_count[s]
        arg = 0
        t = s
        while t > 0:
            a = closed[t]
            b = prev_best[s ^ t]
            m = a if a > b else b
            ca = popcount[t]
            cb = prev_count[s ^ t]
            c = ca if ca > cb else cb
            if m < best - TIE_EPS or (m <= best + TIE_EPS and c < best_count):
                best = m
                best_count = c
                arg = t
            t = (t - 1) & s
        out[s] = best
        out_count[s] = best_count
        pick[s] = arg
    return out, out_count, pick


@njit(cache=True)
def _combine(truck_best, truck_count, drone_best, drone_count, alpha,
             required_mask, full_mask):
    """Optimal truck-subset mask: min over S of max(trucks on S, drones on rest).

    Same lexicographic objective as the layers: makespan, then the largest
    tour cardinality.
    """
    best = np.inf
    best_count = np.int64(2 ** 62)
    arg = -1
    for st in range(full_mask + 1):
        if (st & required_mask) != required_mask:
            continue
        a = truck_best[st]
        b = drone_best[full_mask ^ st] / alpha
        m = a if a > b else b
        ca = truck_count[st]
        cb = drone_count[full_mask ^ st]
        c = ca if ca > cb else cb
        if m < best - TIE_EPS or (m <= best + TIE_EPS and c < best_count):
            best = m
            best_count = c
            arg = st
    return best, arg


@dataclass(eq=False)
class HeldKarpTable:
    """Held-Karp table over a fixed target tuple, rooted at ``start``.

    ``lengths[mask, i]`` is the shortest walk from the root through the
    subset encoded by ``mask`` (bit i <-> targets[i]) ending at targets[i];
    ``parents`` holds predecessor indices for path reconstruction.
    """

    start: int
    targets: tuple[int, ...]
    lengths: np.ndarray
    parents: np.ndarray

    def index_of(self, node: int) -> int:
        return self.targets.index(node)

    def mask_of(self, nodes) -> int:
        mask = 0
        for v in nodes:
            mask |= 1 << self.index_of(v)
        return mask

    def length(self, nodes, end: int) -> float:
        return float(self.lengths[self.mask_of(nodes), self.index_of(end)])

    def path(self, mask: int, end_index: int) -> list[int]:
        """Node sequence (root excluded) realising lengths[mask, end_index]."""
        seq = []
        mask = int(mask)
        idx = int(end_index)
        while idx >= 0:
            seq.append(self.targets[idx])
            nxt = int(self.parents[mask, idx])
            mask ^= 1 << idx
            idx = nxt
        seq.reverse()
        return seq


@dataclass(eq=False)
class MultiTspSolution:
    """Minmax tours for m trucks and n drones covering a target set."""

    truck_tours: list[Tour]
    drone_tours: list[Tour]
    makespan: float

    @property
    def tours(self) -> list[Tour]:
        return self.truck_tours + self.drone_tours

    def covered_nodes(self) -> set[int]:
        out: set[int] = set()
        for tour in self.tours:
            out.update(tour.interior)
        return out


class SolverContext:
    """Per-closure cache of Held-Karp tables, closed costs, and layer tables.

    The expensive tables depend only on the metric and the target set — not
    on fleet sizes, the drone speed, or the damage set — so one context
    serves a whole grid of experiments on the same graph.
    """

    def __init__(self, closure: MetricClosure, cap: int = SUBSET_CAP):
        self.closure = closure
        self.cap = cap
        self._tables: dict[tuple[int, tuple[int, ...]], HeldKarpTable] = {}
        self._closed: dict[tuple[int, ...], tuple[np.ndarray, np.ndarray]] = {}
        self._layers: dict[tuple[int, ...], list[tuple[np.ndarray, np.ndarray]]] = {}

    def _canonical(self, targets) -> tuple[int, ...]:
        targets = tuple(sorted(set(int(v) for v in targets)))
        if DEPOT in targets:
            raise ValueError("the depot is not a routing target")
        if len(targets) > self.cap:
            raise SolverCapError(len(targets), self.cap)
        return targets

    def table(self, targets, start: int = DEPOT) -> HeldKarpTable:
        targets = self._canonical(targets)
        key = (start, targets)
        table = self._tables.get(key)
        if table is None:
            arr = np.asarray(targets, dtype=np.int64)
            lengths, parents = _path_table(self.closure.dist, start, arr)
            table = HeldKarpTable(start=start, targets=targets,
                                  lengths=lengths, parents=parents)
            self._tables[key] = table
        return table

    def closed_costs(self, targets) -> tuple[np.ndarray, np.ndarray]:
        targets = self._canonical(targets)
        cached = self._closed.get(targets)
        if cached is None:
            table = self.table(targets)
            back = self.closure.dist[np.asarray(targets, dtype=np.int64), DEPOT]
            cached = _closed_costs(table.lengths, np.ascontiguousarray(back))
            self._closed[targets] = cached
        return cached

    @staticmethod
    def _popcounts(size: int) -> np.ndarray:
        pc = np.zeros(size, dtype=np.int64)
        for mask in range(1, size):
            pc[mask] = pc[mask >> 1] + (mask & 1)
        return pc

    def _layer(self, targets, count: int) -> tuple[np.ndarray, np.ndarray]:
        """Per subset: (best makespan, largest tour cardinality) using at
        most ``count`` same-speed vehicles."""
        targets = self._canonical(targets)
        size = 1 << len(targets)
        if count == 0:
            empty = np.full(size, np.inf)
            empty[0] = 0.0
            return empty, np.zeros(size, dtype=np.int64)
        layers = self._layers.setdefault(targets, [])
        if not layers:
            closed, _ = self.closed_costs(targets)
            first = closed.copy()
            first[0] = 0.0
            layers.append((first, self._popcounts(size),
                           np.zeros(1, dtype=np.int64)))
        while len(layers) < count:
            closed, _ = self.closed_costs(targets)
            best, counts, pick = _minmax_layer(layers[-1][0], layers[-1][1],
                                               closed, layers[0][1])
            layers.append((best, counts, pick))
        chosen = layers[count - 1]
        return chosen[0], chosen[1]

    def _split_subsets(self, targets, mask: int, count: int) -> list[int]:
        """Recover the per-vehicle subset masks behind layer value [count][mask]."""
        if count == 0:
            return []
        targets = self._canonical(targets)
        self._layer(targets, count)
        layers = self._layers[targets]
        masks = []
        current = mask
        for level in range(count - 1, 0, -1):
            picked = int(layers[level][2][current])
            masks.append(picked)
            current ^= picked
        masks.append(current)
        masks.reverse()
        return masks

    def _tour_from_mask(self, targets, mask: int, role: str) -> Tour:
        if mask == 0:
            return Tour(nodes=(DEPOT,), role=role)
        table = self.table(targets)
        _, ends = self.closed_costs(targets)
        path = table.path(mask, int(ends[mask]))
        return Tour(nodes=(DEPOT, *path, DEPOT), role=role)

    def multi_tsp(self, targets, trucks: int, drones: int, alpha: float = 1.0,
                  required=()) -> MultiTspSolution:
        """Optimal minmax cover of ``targets``; ``required`` nodes must ride on trucks."""
        targets = self._canonical(targets)
        required = frozenset(int(v) for v in required)
        if trucks < 0 or drones < 0 or trucks + drones < 1:
            raise InfeasibleError("need at least one vehicle")
        if drones > 0 and alpha <= 0:
            raise ValueError("alpha must be positive when drones are used")
        if not required <= set(targets):
            raise InfeasibleError("required truck nodes must be targets")
        if required and trucks == 0:
            raise InfeasibleError("required truck nodes but no trucks")
        if not targets:
            return MultiTspSolution(
                truck_tours=[Tour((DEPOT,), TRUCK) for _ in range(trucks)],
                drone_tours=[Tour((DEPOT,), DRONE) for _ in range(drones)],
                makespan=0.0,
            )
        k = len(targets)
        full = (1 << k) - 1
        pos = {v: i for i, v in enumerate(targets)}
        required_mask = 0
        for v in sorted(required):
            required_mask |= 1 << pos[v]
        truck_best, truck_count = self._layer(targets, trucks)
        drone_best, drone_count = self._layer(targets, drones)
        alpha_eff = alpha if drones > 0 else 1.0
        makespan, truck_mask = _combine(truck_best, truck_count, drone_best,
                                        drone_count, alpha_eff,
                                        required_mask, full)
        if not np.isfinite(makespan):
            raise InfeasibleError("no feasible assignment")
        truck_masks = self._split_subsets(targets, int(truck_mask), trucks)
        drone_masks = self._split_subsets(targets, full ^ int(truck_mask), drones)
        return MultiTspSolution(
            truck_tours=[self._tour_from_mask(targets, m, TRUCK) for m in truck_masks],
            drone_tours=[self._tour_from_mask(targets, m, DRONE) for m in drone_masks],
            makespan=float(makespan),
        )

    def open_path(self, start: int, targets) -> tuple[tuple[int, ...], float]:
        """Minimum walk start -> all targets -> depot; returns (nodes, length)."""
        targets = self._canonical(targets)
        if not targets:
            if start == DEPOT:
                return (DEPOT,), 0.0
            return (start, DEPOT), self.closure.d(start, DEPOT)
        table = self.table(targets, start=start)
        k = len(targets)
        full = (1 << k) - 1
        best = np.inf
        arg = -1
        for last in range(k):
            cand = table.lengths[full, last] + self.closure.d(table.targets[last], DEPOT)
            if cand < best - TIE_EPS:
                best = cand
                arg = last
        path = table.path(full, arg)
        return (start, *path, DEPOT), float(best)


_context_cache: "weakref.WeakKeyDictionary[MetricClosure, SolverContext]" = (
    weakref.WeakKeyDictionary()
)


def solver_context(closure: MetricClosure) -> SolverContext:
    ctx = _context_cache.get(closure)
    if ctx is None:
        ctx = SolverContext(closure)
        _context_cache[closure] = ctx
    return ctx


def held_karp(closure: MetricClosure, targets, cap: int = SUBSET_CAP) -> HeldKarpTable:
    """Depot-rooted Held-Karp table over ``targets`` (at most ``cap`` nodes)."""
    ctx = solver_context(closure)
    if len(set(targets)) > cap:
        raise SolverCapError(len(set(targets)), cap)
    return ctx.table(targets)


def multi_tsp(closure: MetricClosure, targets, trucks: int, drones: int,
              alpha: float = 1.0) -> MultiTspSolution:
    return solver_context(closure).multi_tsp(targets, trucks, drones, alpha)


def rdp_star_opt(instance: RdpInstance) -> MultiTspSolution:
    """Full-information optimum: cover all nodes, damaged ones by trucks."""
    if instance.damaged and instance.trucks == 0:
        raise InfeasibleError("damaged nodes cannot be served without trucks")
    return solver_context(instance.closure).multi_tsp(
        instance.targets, instance.trucks, instance.drones, instance.alpha,
        required=instance.damaged,
    )


def open_path_tsp(closure: MetricClosure, start: int, targets) -> tuple[tuple[int, ...], float]:
    return solver_context(closure).open_path(start, targets)


def _best_closed_by_permutation(closure: MetricClosure, subset: tuple[int, ...]) -> float:
    best = np.inf
    for perm in itertools.permutations(subset):
        walk = (DEPOT, *perm, DEPOT)
        cand = closure.walk_length(walk)
        if cand < best:
            best = cand
    return float(best)


def brute_force_multi_tsp(closure: MetricClosure, targets, trucks: int, drones: int,
                          alpha: float = 1.0, required_truck_nodes=()) -> float:
    """Independent oracle: exhaustive vehicle assignments + node permutations.

    Deliberately shares no code with the dynamic program.  Only usable for
    tiny instances (|targets| <= 7).
    """
    targets = tuple(sorted(set(int(v) for v in targets)))
    if len(targets) > BRUTE_FORCE_CAP:
        raise SolverCapError(len(targets), BRUTE_FORCE_CAP)
    required = frozenset(int(v) for v in required_truck_nodes)
    if required and trucks == 0:
        raise InfeasibleError("required truck nodes but no trucks")
    if trucks + drones < 1:
        raise InfeasibleError("need at least one vehicle")
    if not targets:
        return 0.0
    k = len(targets)
    # optimal closed tour per subset, by permutation enumeration
    subset_cost = {}
    for size in range(1, k + 1):
        for subset in itertools.combinations(targets, size):
            subset_cost[frozenset(subset)] = _best_closed_by_permutation(closure, subset)
    vehicles = trucks + drones
    required_idx = [i for i, v in enumerate(targets) if v in required]
    best = np.inf
    for assignment in itertools.product(range(vehicles), repeat=k):
        if any(assignment[i] >= trucks for i in required_idx):
            continue
        groups: list[list[int]] = [[] for _ in range(vehicles)]
        for i, vehicle in enumerate(assignment):
            groups[vehicle].append(targets[i])
        makespan = 0.0
        for vehicle, group in enumerate(groups):
            if not group:
                continue
            cost = subset_cost[frozenset(group)]
            if vehicle >= trucks:
                cost /= alpha
            if cost > makespan:
                makespan = cost
        if makespan < best:
            best = makespan
    return float(best)
