"""Online policies for relief distribution under hidden damage.

A node's damage status becomes visible only at its first visit by any
vehicle; every policy below bases its decisions exclusively on revealed
statuses and visit bookkeeping, never on the ground-truth damage set.
Simulations are deterministic: simultaneous events are ordered by
(time, vehicle index) and revelations at a time tick are applied before any
decision taken at that tick.

Vehicles are numbered trucks first (0..trucks-1), then drones.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .graphs import DEPOT, DRONE, TRUCK, MetricClosure, RdpInstance, Tour
from .solver import SolverContext, solver_context

TIME_TOL = 1e-9

POLICIES = ("truck_only", "optimistic", "regretless", "efhs", "efha")


class PolicyError(ValueError):
    """Policy preconditions violated (e.g. explore-first without drones)."""


@dataclass
class RealizedTour:
    """Actual walk of one vehicle: node sequence with arrival timestamps."""

    vehicle: int
    role: str
    nodes: tuple[int, ...]
    times: tuple[float, ...]

    @property
    def return_time(self) -> float:
        return self.times[-1]

    def visits(self):
        for node, t in zip(self.nodes, self.times):
            if node != DEPOT:
                yield t, node


@dataclass
class RevelationEvent:
    time: float
    vehicle: int
    node: int
    status: str  # "damaged" | "intact"


@dataclass
class SimulationOutcome:
    """Result of simulating one policy on one instance."""

    policy: str
    makespan: float
    tours: list[RealizedTour]
    events: list[RevelationEvent]
    stages: dict
    decisions: list[tuple] = field(default_factory=list)

    def truck_visited(self) -> set[int]:
        out: set[int] = set()
        for tour in self.tours:
            if tour.role == TRUCK:
                out.update(node for _, node in tour.visits())
        return out

    def visited(self) -> set[int]:
        out: set[int] = set()
        for tour in self.tours:
            out.update(node for _, node in tour.visits())
        return out

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "makespan": self.makespan,
            "tours": [
                {"vehicle": t.vehicle, "role": t.role,
                 "nodes": list(t.nodes), "times": list(t.times)}
                for t in self.tours
            ],
            "events": [
                {"time": e.time, "vehicle": e.vehicle, "node": e.node,
                 "status": e.status}
                for e in self.events
            ],
            "stages": self.stages,
        }


class _Timeline:
    def __init__(self, vehicle: int, role: str):
        self.vehicle = vehicle
        self.role = role
        self.nodes = [DEPOT]
        self.times = [0.0]

    def wait_until(self, t: float):
        if t > self.times[-1]:
            self.nodes.append(self.nodes[-1])
            self.times.append(t)

    def advance(self, closure: MetricClosure, path, speed: float):
        for node in path:
            leg = closure.d(self.nodes[-1], node) / speed
            self.nodes.append(node)
            self.times.append(self.times[-1] + leg)

    def visits(self):
        for node, t in zip(self.nodes, self.times):
            if node != DEPOT:
                yield t, node

    def frozen(self) -> RealizedTour:
        return RealizedTour(self.vehicle, self.role,
                            tuple(self.nodes), tuple(self.times))


def _revelations(timelines, damaged) -> list[RevelationEvent]:
    visits = []
    for tl in timelines:
        for node, t in zip(tl.nodes, tl.times):
            if node != DEPOT:
                visits.append((t, tl.vehicle, node))
    visits.sort(key=lambda x: (x[0], x[1]))
    events = []
    seen = set()
    for t, vehicle, node in visits:
        if node not in seen:
            seen.add(node)
            status = "damaged" if node in damaged else "intact"
            events.append(RevelationEvent(time=t, vehicle=vehicle, node=node,
                                          status=status))
    return events


def _finish(policy, timelines, instance, stages, decisions) -> SimulationOutcome:
    tours = [tl.frozen() for tl in timelines]
    makespan = max(t.return_time for t in tours) if tours else 0.0
    return SimulationOutcome(
        policy=policy,
        makespan=makespan,
        tours=tours,
        events=_revelations(timelines, instance.damaged),
        stages=stages,
        decisions=decisions,
    )


def _fresh_timelines(instance) -> list[_Timeline]:
    out = [_Timeline(i, TRUCK) for i in range(instance.trucks)]
    out += [_Timeline(instance.trucks + j, DRONE) for j in range(instance.drones)]
    return out


def policy_truck_only(instance: RdpInstance) -> SimulationOutcome:
    """Ignore the drones entirely: optimal truck-only tours over all nodes."""
    ctx = solver_context(instance.closure)
    sol = ctx.multi_tsp(instance.targets, instance.trucks, 0)
    timelines = _fresh_timelines(instance)
    for i, tour in enumerate(sol.truck_tours):
        if not tour.is_empty:
            timelines[i].advance(instance.closure, tour.nodes[1:], 1.0)
    return _finish("truck_only", timelines, instance,
                   {"plan_makespan": sol.makespan}, [])


def policy_optimistic(instance: RdpInstance) -> SimulationOutcome:
    """Joint truck+drone cover first, then truck tours over discovered damage.

    Stage two starts once every vehicle is back at the depot, i.e. at the
    stage-one makespan; its targets are the damaged nodes that no truck tour
    visited in stage one.
    """
    ctx = solver_context(instance.closure)
    stage1 = ctx.multi_tsp(instance.targets, instance.trucks, instance.drones,
                           instance.alpha)
    t1 = stage1.makespan
    timelines = _fresh_timelines(instance)
    truck_seen: set[int] = set()
    for i, tour in enumerate(stage1.truck_tours):
        if not tour.is_empty:
            timelines[i].advance(instance.closure, tour.nodes[1:], 1.0)
            truck_seen.update(tour.interior)
    for j, tour in enumerate(stage1.drone_tours):
        if not tour.is_empty:
            timelines[instance.trucks + j].advance(
                instance.closure, tour.nodes[1:], instance.alpha)
    leftover = sorted(instance.damaged - truck_seen)
    decisions = [(t1, "stage2", tuple(leftover))]
    stages = {"stage2_start": t1}
    if leftover:
        stage2 = ctx.multi_tsp(leftover, instance.trucks, 0)
        for i, tour in enumerate(stage2.truck_tours):
            if tour.is_empty:
                continue
            timelines[i].wait_until(t1)
            timelines[i].advance(instance.closure, tour.nodes[1:], 1.0)
    else:
        # keep the makespan at the stage-one completion even if every
        # vehicle happens to return early
        timelines[0].wait_until(t1)
    return _finish("optimistic", timelines, instance, stages, decisions)


def split_tour(sequence, closure: MetricClosure, alpha: float, vehicles: int):
    """Cut a tour's non-depot sequence into up to ``vehicles`` contiguous segments.

    Segment 1 goes to the truck as a depot-rooted prefix tour; every further
    segment becomes a drone tour flown in reverse order.  The cut minimises
    max(truck tour length, drone tour length / alpha), enumerated exhaustively
    with larger truck segments tried first (first strict improvement wins, so
    the truck keeps its segment on ties).
    """
    if vehicles < 1:
        raise PolicyError("need at least the truck on a tour")
    sequence = tuple(sequence)
    p = len(sequence)
    if p == 0:
        return [tuple() for _ in range(vehicles)]

    def closed_length(seg) -> float:
        if not seg:
            return 0.0
        return closure.walk_length((DEPOT, *seg, DEPOT))

    best_obj = None
    best_sizes = None
    for sizes in _compositions_desc(p, vehicles):
        bounds = []
        offset = 0
        for s in sizes:
            bounds.append(sequence[offset:offset + s])
            offset += s
        obj = closed_length(bounds[0])
        for seg in bounds[1:]:
            if seg:
                obj = max(obj, closed_length(seg) / alpha)
        # keep the first cut within tolerance, so float noise cannot flip
        # the documented larger-truck-segment-first tie order
        if best_obj is None or obj < best_obj - 1e-12:
            best_obj = obj
            best_sizes = sizes
    segments = []
    offset = 0
    for s in best_sizes:
        segments.append(sequence[offset:offset + s])
        offset += s
    return segments


def _compositions_desc(total: int, parts: int):
    """All ways to write ``total`` as ``parts`` ordered nonnegative sizes,
    first part descending, then lexicographically descending."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for rest in _compositions_desc(total - head, parts - 1):
            yield (head, *rest)


def _drone_allocation(tour_lengths: list[float], drones: int) -> list[int]:
    """Spread drones over truck tours as evenly as possible, longest tours
    receiving the larger share first (lengths quantised so float noise
    cannot reorder equal tours)."""
    k = len(tour_lengths)
    if k == 0:
        return []
    base, extra = divmod(drones, k)
    counts = [base] * k
    order = sorted(range(k), key=lambda i: (-round(tour_lengths[i] * 1e9), i))
    for i in order[:extra]:
        counts[i] += 1
    return counts


def policy_regretless(instance: RdpInstance) -> SimulationOutcome:
    """Truck-only tours split into truck/drone segments, one replanning per truck.

    Each truck serves the depot-adjacent segment of its tour while its drones
    fly the remaining segments in reverse.  On reaching the last node of its
    own segment the truck departs, exactly once, on a minimum-length path
    through every known-damaged node it has not served plus every node of its
    tour nobody has visited yet, and returns to the depot.  Drones always
    complete their tours.
    """
    ctx = solver_context(instance.closure)
    closure = instance.closure
    plan = ctx.multi_tsp(instance.targets, instance.trucks, 0)
    lengths = [tour.length(closure) for tour in plan.truck_tours]
    counts = _drone_allocation(lengths, instance.drones)
    timelines = _fresh_timelines(instance)

    drone_cursor = instance.trucks
    assignments = []  # (truck, interior, segments, drone ids)
    for i, tour in enumerate(plan.truck_tours):
        interior = tour.interior
        ids = list(range(drone_cursor, drone_cursor + counts[i]))
        drone_cursor += counts[i]
        if not interior:
            assignments.append((i, interior, [tuple()] * (1 + counts[i]), ids))
            continue
        segments = split_tour(interior, closure, instance.alpha, 1 + counts[i])
        assignments.append((i, interior, segments, ids))
        for drone_id, seg in zip(ids, segments[1:]):
            if seg:
                timelines[drone_id].advance(
                    closure, (*reversed(seg), DEPOT), instance.alpha)

    # all drone visits are committed up front; trucks replan against them
    reveal_time: dict[int, float] = {}
    for tl in timelines[instance.trucks:]:
        for t, node in zip(tl.times, tl.nodes):
            if node != DEPOT and (node not in reveal_time or t < reveal_time[node]):
                reveal_time[node] = t

    decisions = []
    replan_times = {}
    for i, interior, segments, _ids in assignments:
        tl = timelines[i]
        prefix = segments[0]
        if prefix:
            tl.advance(closure, prefix, 1.0)
        theta = tl.times[-1]
        position = tl.nodes[-1]
        replan_times[i] = theta
        if not interior:
            continue
        truck_seen = set(prefix)
        visited = set(truck_seen)
        for node in interior:
            if node in reveal_time and reveal_time[node] <= theta + TIME_TOL:
                visited.add(node)
        pending = sorted(
            v for v in interior
            if (v in instance.damaged and v not in truck_seen and v in visited)
            or v not in visited
        )
        route, _ = ctx.open_path(position, pending)
        decisions.append((theta, i, tuple(pending), route))
        tl.advance(closure, route[1:], 1.0)
    stages = {"replan_times": replan_times}
    return _finish("regretless", timelines, instance, stages, decisions)


def policy_efhs(instance: RdpInstance) -> SimulationOutcome:
    """Explore first, help second: drones sweep all nodes; once every drone is
    home, trucks run optimal tours over the revealed damage."""
    if instance.drones < 1:
        raise PolicyError("explore-first policies need at least one drone")
    ctx = solver_context(instance.closure)
    sweep = ctx.multi_tsp(instance.targets, 0, instance.drones, instance.alpha)
    td = sweep.makespan
    timelines = _fresh_timelines(instance)
    for j, tour in enumerate(sweep.drone_tours):
        if not tour.is_empty:
            timelines[instance.trucks + j].advance(
                instance.closure, tour.nodes[1:], instance.alpha)
    damaged = sorted(instance.damaged)
    decisions = [(td, "help", tuple(damaged))]
    if damaged:
        help_plan = ctx.multi_tsp(damaged, instance.trucks, 0)
        for i, tour in enumerate(help_plan.truck_tours):
            if tour.is_empty:
                continue
            timelines[i].wait_until(td)
            timelines[i].advance(instance.closure, tour.nodes[1:], 1.0)
    return _finish("efhs", timelines, instance, {"help_start": td}, decisions)


def policy_efha(instance: RdpInstance) -> SimulationOutcome:
    """Explore first, help as soon as possible. Drones sweep as in EFHS;
    whenever the set of known-damaged unserved nodes changes while trucks sit
    at the depot, the idle trucks are re-dispatched on optimal tours over it.
    Trucks already en route finish their committed tour first."""
    if instance.drones < 1:
        raise PolicyError("explore-first policies need at least one drone")
    ctx = solver_context(instance.closure)
    closure = instance.closure
    sweep = ctx.multi_tsp(instance.targets, 0, instance.drones, instance.alpha)
    timelines = _fresh_timelines(instance)
    for j, tour in enumerate(sweep.drone_tours):
        if not tour.is_empty:
            timelines[instance.trucks + j].advance(
                closure, tour.nodes[1:], instance.alpha)

    reveals = []  # (time, node) for damaged nodes, in drone visiting order
    for tl in timelines[instance.trucks:]:
        for t, node in tl.visits():
            if node in instance.damaged:
                reveals.append((t, node))
    reveals.sort()

    events = [(t, 0, node) for t, node in reveals]  # kind 0: revelation
    heapq.heapify(events)
    idle = set(range(instance.trucks))
    pending: set[int] = set()
    served_or_assigned: set[int] = set()
    decisions = []
    dispatch_times = []
    while events:
        batch_time = events[0][0]
        batch = []
        while events and events[0][0] <= batch_time + TIME_TOL:
            batch.append(heapq.heappop(events))
        for _t, kind, payload in batch:  # reveals (kind 0) before returns (kind 1)
            if kind == 0:
                if payload not in served_or_assigned:
                    pending.add(payload)
            else:
                idle.add(payload)
        if pending and idle:
            plan = ctx.multi_tsp(sorted(pending), len(idle), 0)
            for truck, tour in zip(sorted(idle), plan.truck_tours):
                if tour.is_empty:
                    continue
                tl = timelines[truck]
                tl.wait_until(batch_time)
                tl.advance(closure, tour.nodes[1:], 1.0)
                idle.discard(truck)
                served_or_assigned.update(tour.interior)
                pending.difference_update(tour.interior)
                heapq.heappush(events, (tl.times[-1], 1, truck))
            decisions.append((batch_time, "dispatch", tuple(sorted(served_or_assigned))))
            dispatch_times.append(batch_time)
    stages = {"sweep_makespan": sweep.makespan, "dispatch_times": dispatch_times}
    return _finish("efha", timelines, instance, stages, decisions)


_POLICY_FUNCS = {
    "truck_only": policy_truck_only,
    "optimistic": policy_optimistic,
    "regretless": policy_regretless,
    "efhs": policy_efhs,
    "efha": policy_efha,
}


def simulate(instance: RdpInstance, policy: str) -> SimulationOutcome:
    """Run one policy on one instance; deterministic given both."""
    try:
        func = _POLICY_FUNCS[policy]
    except KeyError:
        raise PolicyError(f"unknown policy {policy!r}") from None
    return func(instance)


def check_feasible(outcome: SimulationOutcome, instance: RdpInstance) -> None:
    """Assert the outcome solves the full-information problem."""
    visited = outcome.visited()
    missing = set(instance.targets) - visited
    if missing:
        raise AssertionError(f"{outcome.policy}: nodes never visited: {sorted(missing)}")
    unserved = instance.damaged - outcome.truck_visited()
    if unserved:
        raise AssertionError(
            f"{outcome.policy}: damaged nodes not served by a truck: {sorted(unserved)}")
    for tour in outcome.tours:
        if tour.nodes[0] != DEPOT or tour.nodes[-1] != DEPOT:
            raise AssertionError(f"{outcome.policy}: tour does not close at the depot")
    latest = max(t.return_time for t in outcome.tours)
    if abs(latest - outcome.makespan) > TIME_TOL:
        raise AssertionError(f"{outcome.policy}: makespan mismatch")
