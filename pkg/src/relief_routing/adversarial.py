"""Constructors for the analytic worst- and best-case instance families.

Each family builds a small graph, places the hidden damage adversarially
against the deterministic policy it targets, and attaches the predicted
makespan, full-information optimum, and ratios.  Where the adversary's
choice depends on "whichever nodes the drones happen to visit", the
constructor first runs the policy's planning stage on the undamaged graph
and reads the answer off the returned tours, so the predictions hold under
the solver's actual tie-breaking.

The regression suite asserts that simulated policies reproduce every
attached prediction exactly (1e-9 tolerance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .graphs import (DEPOT, GraphError, RdpInstance, WeightedGraph, make_star,
                     make_two_level_star)
from .solver import solver_context

_INT_TOL = 1e-9


class FamilyConditionError(ValueError):
    """Parameters violate the family's side conditions."""

    def __init__(self, family: str, condition: str):
        super().__init__(f"{family}: requires {condition}")
        self.family = family
        self.condition = condition


@dataclass
class AdversarialInstance:
    """Instance plus the analytically predicted outcomes used by the tests.

    ``predictions['policies'][name]`` maps to a dict with ``makespan``,
    ``competitive_ratio`` and (when the family pins it) ``drone_impact``;
    ``predictions['opt']`` / ``['truck_only']`` fix the two denominators.
    """

    family: str
    params: dict
    instance: RdpInstance
    predictions: dict = field(default_factory=dict)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _as_integer(value: float, family: str, what: str) -> int:
    rounded = round(value)
    if abs(value - rounded) > _INT_TOL or rounded < 1:
        raise FamilyConditionError(family, f"{what} must be a positive integer")
    return int(rounded)


def _validate_fleet(family: str, trucks: int, drones: int) -> None:
    if trucks < 1 or drones < 1:
        raise FamilyConditionError(family, "at least one truck and one drone")


def _probe(graph: WeightedGraph, trucks: int, drones: int, alpha: float) -> RdpInstance:
    """Undamaged copy used to observe a policy's first-stage plan."""
    return RdpInstance.build(graph, trucks, drones, alpha)


def _drone_visited(graph, trucks, drones, alpha) -> list[int]:
    """Nodes the joint-cover plan hands to drones, ascending."""
    probe = _probe(graph, trucks, drones, alpha)
    sol = solver_context(probe.closure).multi_tsp(probe.targets, trucks, drones, alpha)
    seen: set[int] = set()
    for tour in sol.drone_tours:
        seen.update(tour.interior)
    return sorted(seen)


def _longest_initial_truck_tour(graph, trucks) -> tuple[int, ...]:
    """Interior of the first truck tour of maximum node count in the
    truck-only plan (the tour the adversary damages)."""
    probe = _probe(graph, trucks, 0, 1.0)
    sol = solver_context(probe.closure).multi_tsp(probe.targets, trucks, 0)
    best = max(len(t.interior) for t in sol.truck_tours)
    for tour in sol.truck_tours:
        if len(tour.interior) == best:
            return tour.interior
    raise AssertionError("truck-only plan produced no tours")


def _attach(family, params, graph, trucks, drones, alpha, damaged, predictions,
            extra_meta=None) -> AdversarialInstance:
    meta = {
        "id": f"{family}-a{alpha:g}-t{trucks}-d{drones}",
        "class": "adversarial",
        "family": family,
        "n": graph.node_count,
        "delta": round(len(damaged) / max(1, graph.node_count - 1), 6),
    }
    if extra_meta:
        meta.update(extra_meta)
    merged_graph_meta = dict(graph.meta)
    instance = RdpInstance.build(graph, trucks, drones, alpha, damaged, meta)
    instance.meta.setdefault("graph", merged_graph_meta)
    return AdversarialInstance(family=family, params=params, instance=instance,
                               predictions=predictions)


# ---------------------------------------------------------------------------
# best-case drone impact


def _best_impact_graph(trucks, drones, alpha) -> WeightedGraph:
    return make_two_level_star(n1=trucks * trucks, n2=drones * trucks,
                               d1=1.0, d2=alpha)


def _family_optimistic_best_impact(alpha, trucks, drones, **_):
    graph = _best_impact_graph(trucks, drones, alpha)
    opt = 2.0 * trucks
    truck_only = 2.0 * trucks + 2.0 * alpha * drones
    predictions = {
        "opt": opt,
        "truck_only": truck_only,
        "policies": {
            "optimistic": {
                "makespan": opt,
                "competitive_ratio": 1.0,
                "drone_impact": opt / truck_only,
            }
        },
    }
    return graph, frozenset(), predictions


def _family_regretless_best_impact(alpha, trucks, drones, **_):
    if drones % trucks != 0:
        raise FamilyConditionError("regretless_best_impact",
                                   "drone count divisible by truck count")
    graph = _best_impact_graph(trucks, drones, alpha)
    opt = 2.0 * trucks
    truck_only = 2.0 * trucks + 2.0 * alpha * drones
    predictions = {
        "opt": opt,
        "truck_only": truck_only,
        "policies": {
            "regretless": {
                "makespan": opt,
                "competitive_ratio": 1.0,
                "drone_impact": opt / truck_only,
            }
        },
    }
    return graph, frozenset(), predictions


# ---------------------------------------------------------------------------
# worst-case drone impact


def _family_optimistic_worst_impact(alpha, trucks, drones, epsilon=1e-3, **_):
    family = "optimistic_worst_impact"
    if abs(alpha - 1.0) <= _INT_TOL:
        raise FamilyConditionError(family, "alpha distinct from 1")
    if alpha > 1:
        leaves = min(trucks, drones)
        graph = make_star(leaves, 1.0)
        damaged = frozenset(range(1, leaves + 1))
        truck_only = 2.0
        makespan = 2.0 / alpha + 2.0
    else:
        if not (0 < epsilon < alpha):
            raise FamilyConditionError(family, "0 < epsilon < alpha")
        far = min(trucks, drones)
        # proximate nodes 1..trucks at distance 1; far nodes after, at
        # distance alpha, each tied to one distinct proximate neighbour
        edges = [(DEPOT, p, 1.0) for p in range(1, trucks + 1)]
        edges += [(DEPOT, trucks + i, float(alpha)) for i in range(1, far + 1)]
        edges += [(i, trucks + i, 1.0 - alpha + 2.0 * epsilon) for i in range(1, far + 1)]
        graph = WeightedGraph(node_count=trucks + far + 1, edges=tuple(edges),
                              meta={"family": "proximate_far"})
        damaged = frozenset(range(1, trucks + far + 1))
        truck_only = 2.0 + 2.0 * epsilon
        makespan = 2.0 + 2.0 * alpha
    predictions = {
        "opt": truck_only,  # every node damaged: trucks must do it all
        "truck_only": truck_only,
        "policies": {
            "optimistic": {
                "makespan": makespan,
                "competitive_ratio": makespan / truck_only,
                "drone_impact": makespan / truck_only,
            }
        },
    }
    return graph, damaged, predictions


def _family_regretless_worst_impact(alpha, trucks, drones, **_):
    graph = make_star(trucks + drones, 1.0)
    truck_only = 2.0 * _ceil_div(trucks + drones, trucks)
    damaged = frozenset(range(1, trucks + drones + 1))
    predictions = {
        "opt": truck_only,
        "truck_only": truck_only,
        "policies": {
            "regretless": {
                "makespan": truck_only,
                "competitive_ratio": 1.0,
                "drone_impact": 1.0,
            }
        },
    }
    return graph, damaged, predictions


# ---------------------------------------------------------------------------
# competitive-ratio worst cases, joint-cover policy


def _family_optimistic_equal_speed(alpha, trucks, drones, **_):
    family = "optimistic_equal_speed_ratio"
    if abs(alpha - 1.0) > _INT_TOL:
        raise FamilyConditionError(family, "alpha equal to 1")
    graph = make_star(trucks + drones, 1.0)
    scouted = _drone_visited(graph, trucks, drones, 1.0)
    if not scouted:
        raise FamilyConditionError(family, "a drone-visited node to damage")
    damaged = frozenset({scouted[0]})
    predictions = {
        "opt": 2.0,
        "truck_only": 2.0 * _ceil_div(trucks + drones, trucks),
        "policies": {
            "optimistic": {"makespan": 4.0, "competitive_ratio": 2.0}
        },
    }
    return graph, damaged, predictions


def _unequal_speed_graph(alpha, trucks, drones, t_scale):
    """Proximate/medium/far construction forcing the joint plan's shape.

    Fast vehicles are drones when alpha > 1 and trucks when alpha < 1.  The
    slow round trip to a proximate node and the fast round trip to a far
    node both take t_scale; each medium node hangs between two proximate
    neighbours so that the fast pair tour (proximate, medium) also takes
    exactly t_scale.
    """
    fast, slow = (drones, trucks) if alpha > 1 else (trucks, drones)
    k_min = min(fast, slow)
    n_p = slow + k_min
    n_m = k_min
    n_f = fast - k_min
    t = t_scale
    if alpha > 1:
        d_p, d_f = t / 2.0, alpha * t / 2.0
        a = alpha * t / 2.0
        b = (alpha - 1.0) * t / 2.0
    else:
        d_p, d_f = alpha * t / 2.0, t / 2.0
        lo = max(0.25, alpha / 2.0, (1.0 - alpha) / 2.0)
        a = t * (lo + 0.5) / 2.0
        b = (2.0 - alpha) * t / 2.0 - a
    proximate = list(range(1, n_p + 1))
    medium = list(range(n_p + 1, n_p + n_m + 1))
    far = list(range(n_p + n_m + 1, n_p + n_m + n_f + 1))
    edges = [(DEPOT, p, d_p) for p in proximate]
    edges += [(DEPOT, m, a) for m in medium]
    edges += [(DEPOT, f, d_f) for f in far]
    adjacent = []
    for j, m in enumerate(medium):
        p1, p2 = proximate[2 * j], proximate[2 * j + 1]
        edges += [(m, p1, b), (m, p2, b)]
        adjacent += [p1, p2]
    graph = WeightedGraph(node_count=n_p + n_m + n_f + 1, edges=tuple(edges),
                          meta={"family": "proximate_medium_far",
                                "proximate": tuple(proximate),
                                "medium": tuple(medium), "far": tuple(far)})
    return graph, proximate, set(adjacent)


def _family_optimistic_unequal_speed(alpha, trucks, drones, t_scale=None, **_):
    family = "optimistic_unequal_speed_ratio"
    if abs(alpha - 1.0) <= _INT_TOL:
        raise FamilyConditionError(family, "alpha distinct from 1")
    t = t_scale if t_scale is not None else 2.0 * max(1.0, alpha)
    graph, proximate, adjacent = _unequal_speed_graph(alpha, trucks, drones, t)
    scouted = set(_drone_visited(graph, trucks, drones, alpha))
    if alpha > 1:
        candidates = sorted(scouted & set(proximate))
    else:
        candidates = sorted(scouted & adjacent)
    if not candidates:
        raise FamilyConditionError(family, "a drone-scouted proximate node")
    damaged = frozenset({candidates[0]})
    makespan = 2.0 * t if alpha > 1 else (1.0 + alpha) * t
    predictions = {
        "opt": t,
        "policies": {
            "optimistic": {
                "makespan": makespan,
                "competitive_ratio": min(2.0, 1.0 + alpha),
            }
        },
    }
    return graph, damaged, predictions


def _family_optimistic_saturated(alpha, trucks, drones, **_):
    family = "optimistic_slow_drone_saturated_ratio"
    if alpha >= 1.0 - _INT_TOL:
        raise FamilyConditionError(family, "alpha below 1")
    if alpha * _ceil_div(drones, trucks) < 1.0 - _INT_TOL:
        raise FamilyConditionError(family, "alpha * ceil(drones/trucks) at least 1")
    per_truck = math.ceil(1.0 / alpha - _INT_TOL)
    graph = make_star(drones + per_truck * trucks, 1.0)
    scouted = _drone_visited(graph, trucks, drones, alpha)
    take = min(len(scouted), per_truck * trucks)
    damaged = frozenset(scouted[:take])
    predictions = {
        "opt": 2.0 * per_truck,
        "truck_only": 2.0 * (per_truck + _ceil_div(drones, trucks)),
        "policies": {
            "optimistic": {"makespan": 4.0 * per_truck, "competitive_ratio": 2.0}
        },
    }
    return graph, damaged, predictions


def _family_optimistic_sparse(alpha, trucks, drones, **_):
    family = "optimistic_slow_drone_sparse_ratio"
    ratio = _ceil_div(drones, trucks)
    if alpha * ratio >= 1.0 - _INT_TOL:
        raise FamilyConditionError(family, "alpha * ceil(drones/trucks) below 1")
    per_truck = math.floor(1.0 / alpha + _INT_TOL)
    graph = make_star(drones + per_truck * trucks, 1.0)
    scouted = _drone_visited(graph, trucks, drones, alpha)
    damaged = frozenset(scouted)
    stage_two = 2.0 * _ceil_div(len(damaged), trucks)
    predictions = {
        "opt": 2.0 / alpha,
        "policies": {
            "optimistic": {
                "makespan": 2.0 / alpha + stage_two,
                "competitive_ratio": 1.0 + alpha * ratio,
            }
        },
    }
    return graph, damaged, predictions


def _family_any_policy_slow_drone(alpha, trucks, drones, **_):
    family = "any_policy_slow_drone_ratio"
    b = _as_integer(1.0 / alpha, family, "1/alpha")
    graph = make_star(drones + b * trucks, 1.0)
    scouted = _drone_visited(graph, trucks, drones, alpha)
    take = min(len(scouted), b * trucks)
    damaged = frozenset(scouted[:take])
    stage_two = 2.0 * _ceil_div(len(damaged), trucks)
    predictions = {
        "opt": 2.0 * b,
        "policies": {
            "optimistic": {
                "makespan": 2.0 * b + stage_two,
                "competitive_ratio": min(2.0, 1.0 + alpha * _ceil_div(drones, trucks)),
            }
        },
    }
    return graph, damaged, predictions


# ---------------------------------------------------------------------------
# competitive-ratio worst cases, split-and-replan policy


def _split_policy_worst_case(family, graph, trucks, expected_tour_nodes):
    interior = _longest_initial_truck_tour(graph, trucks)
    if len(interior) != expected_tour_nodes:
        raise AssertionError(
            f"{family}: expected a {expected_tour_nodes}-node tour, "
            f"got {len(interior)}")
    return frozenset(interior[1:])


def _family_regretless_equal_speed(alpha, trucks, drones, **_):
    family = "regretless_equal_speed_ratio"
    if abs(alpha - 1.0) > _INT_TOL:
        raise FamilyConditionError(family, "alpha equal to 1")
    ratio = _ceil_div(drones, trucks)
    if trucks < ratio:
        raise FamilyConditionError(family, "trucks at least ceil(drones/trucks)")
    graph = make_star(trucks + drones, 1.0)
    damaged = _split_policy_worst_case(family, graph, trucks, 1 + ratio)
    makespan = 2.0 * (1 + ratio)
    predictions = {
        "opt": 2.0,
        "truck_only": makespan,
        "policies": {
            "regretless": {
                "makespan": makespan,
                "competitive_ratio": 1.0 + ratio,
                "drone_impact": 1.0,
            }
        },
    }
    return graph, damaged, predictions


def _family_regretless_slow_drone(alpha, trucks, drones, **_):
    family = "regretless_slow_drone_ratio"
    b = _as_integer(1.0 / alpha, family, "1/alpha")
    ratio = _ceil_div(drones, trucks)
    if trucks < ratio + b - 1:
        raise FamilyConditionError(family, "trucks at least ceil(drones/trucks) + 1/alpha - 1")
    graph = make_star(b * trucks + drones, 1.0)
    damaged = _split_policy_worst_case(family, graph, trucks, b + ratio)
    makespan = 2.0 * (b + ratio)
    predictions = {
        "opt": 2.0 * b,
        "truck_only": makespan,
        "policies": {
            "regretless": {
                "makespan": makespan,
                "competitive_ratio": makespan / (2.0 * b),
                "drone_impact": 1.0,
            }
        },
    }
    return graph, damaged, predictions


def _family_regretless_fast_drone(alpha, trucks, drones, **_):
    family = "regretless_fast_drone_ratio"
    speed = _as_integer(alpha, family, "alpha")
    ratio = _ceil_div(speed * drones, trucks)
    if trucks < ratio:
        raise FamilyConditionError(family, "trucks at least ceil(alpha*drones/trucks)")
    graph = make_star(trucks + speed * drones, 1.0)
    damaged = _split_policy_worst_case(family, graph, trucks, 1 + ratio)
    makespan = 2.0 * (1 + ratio)
    predictions = {
        "opt": 2.0,
        "truck_only": makespan,
        "policies": {
            "regretless": {
                "makespan": makespan,
                "competitive_ratio": 1.0 + ratio,
                "drone_impact": 1.0,
            }
        },
    }
    return graph, damaged, predictions


# ---------------------------------------------------------------------------
# explore-first benchmarks


def _family_explore_first(alpha, trucks, drones, **_):
    family = "explore_first_ratio"
    speed = _as_integer(alpha, family, "alpha")
    if trucks != 1 or drones != 1:
        raise FamilyConditionError(family, "exactly one truck and one drone")
    graph = make_star(speed + 1, 1.0)
    probe = _probe(graph, trucks, drones, alpha)
    sweep = solver_context(probe.closure).multi_tsp(probe.targets, 0, 1, alpha)
    order = sweep.drone_tours[0].interior
    damaged = frozenset({order[-1]})
    sweep_time = 2.0 * (speed + 1) / speed
    reveal = (2.0 * (speed + 1) - 1.0) / speed
    predictions = {
        "opt": 2.0,
        "truck_only": 2.0 * (speed + 1),
        "policies": {
            "efhs": {
                "makespan": sweep_time + 2.0,
                "competitive_ratio": (sweep_time + 2.0) / 2.0,
            },
            "efha": {
                "makespan": reveal + 2.0,
                "competitive_ratio": (reveal + 2.0) / 2.0,
            },
        },
    }
    return graph, damaged, predictions


_FAMILIES = {
    "optimistic_best_impact": _family_optimistic_best_impact,
    "regretless_best_impact": _family_regretless_best_impact,
    "optimistic_worst_impact": _family_optimistic_worst_impact,
    "regretless_worst_impact": _family_regretless_worst_impact,
    "optimistic_equal_speed_ratio": _family_optimistic_equal_speed,
    "optimistic_unequal_speed_ratio": _family_optimistic_unequal_speed,
    "optimistic_slow_drone_saturated_ratio": _family_optimistic_saturated,
    "optimistic_slow_drone_sparse_ratio": _family_optimistic_sparse,
    "any_policy_slow_drone_ratio": _family_any_policy_slow_drone,
    "regretless_equal_speed_ratio": _family_regretless_equal_speed,
    "regretless_slow_drone_ratio": _family_regretless_slow_drone,
    "regretless_fast_drone_ratio": _family_regretless_fast_drone,
    "explore_first_ratio": _family_explore_first,
}

FAMILIES = tuple(sorted(_FAMILIES))


def make_lemma_instance(family: str, alpha: float, trucks: int, drones: int,
                        epsilon: float = 1e-3,
                        t_scale: float | None = None) -> AdversarialInstance:
    """Build one adversarial instance with its predicted outcomes attached.

    Raises :class:`FamilyConditionError` when (family, parameters) violate
    the construction's side conditions, naming the condition.
    """
    try:
        builder = _FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; known: {', '.join(FAMILIES)}") from None
    _validate_fleet(family, trucks, drones)
    if alpha <= 0:
        raise FamilyConditionError(family, "positive alpha")
    graph, damaged, predictions = builder(alpha=alpha, trucks=trucks,
                                          drones=drones, epsilon=epsilon,
                                          t_scale=t_scale)
    params = {"alpha": alpha, "trucks": trucks, "drones": drones}
    if family == "optimistic_worst_impact" and alpha < 1:
        params["epsilon"] = epsilon
    return _attach(family, params, graph, trucks, drones, alpha, damaged,
                   predictions)


def tight_ratio_family(alpha: float, trucks: int, drones: int) -> str:
    """The worst-case family whose instance makes the joint-cover policy's
    competitive ratio hit min(2, 1 + alpha*ceil(drones/trucks)) exactly."""
    if abs(alpha - 1.0) <= _INT_TOL:
        return "optimistic_equal_speed_ratio"
    if alpha > 1:
        return "optimistic_unequal_speed_ratio"
    if alpha * _ceil_div(drones, trucks) >= 1.0 - _INT_TOL:
        return "optimistic_slow_drone_saturated_ratio"
    return "optimistic_slow_drone_sparse_ratio"
