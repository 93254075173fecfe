import pytest

from relief_routing import (DEPOT, PolicyError, RdpInstance, check_feasible,
                            make_lemma_instance, make_star,
                            make_two_level_star, metric_closure, multi_tsp,
                            rdp_star_opt, simulate, split_tour, solver_context)
from relief_routing.generators import Xoshiro256StarStar, gen_random, sample_damage
from relief_routing.policies import POLICIES

ALL_POLICIES = POLICIES


def random_instance(seed, n=7, trucks=1, drones=1, alpha=2.0, delta=0.4):
    graph = gen_random(n, seed=seed)
    damaged = sample_damage(graph, delta, seed=seed * 31 + 7)
    return RdpInstance.build(graph, trucks, drones, alpha, damaged,
                             meta={"id": f"rnd-{seed}", "class": "random",
                                   "n": n, "delta": delta})


class TestSplitTour:
    def test_single_vehicle_keeps_whole_tour(self):
        closure = metric_closure(make_star(3, 1.0))
        segments = split_tour((1, 2, 3), closure, 2.0, 1)
        assert segments == [(1, 2, 3)]

    def test_two_leaf_equal_speed_split(self):
        # three admissible cuts; the balanced one wins with objective 2
        closure = metric_closure(make_star(2, 1.0))
        segments = split_tour((1, 2), closure, 1.0, 2)
        assert segments == [(1,), (2,)]

    def test_surplus_drones_stay_home(self):
        closure = metric_closure(make_star(1, 1.0))
        segments = split_tour((1,), closure, 1.0, 3)
        assert segments[0] == (1,)
        assert segments[1] == segments[2] == ()

    def test_two_level_star_gives_truck_the_near_block(self):
        graph = make_two_level_star(2, 2, 1.0, 3.0)
        closure = metric_closure(graph)
        tour = multi_tsp(closure, graph.non_depot_nodes, 1, 0).truck_tours[0]
        segments = split_tour(tour.interior, closure, 3.0, 2)
        assert set(segments[0]) == set(graph.meta["level1"])
        assert set(segments[1]) == set(graph.meta["level2"])


class TestTruckOnly:
    def test_equals_truck_only_optimum(self):
        instance = random_instance(3, trucks=2, drones=1)
        outcome = simulate(instance, "truck_only")
        check_feasible(outcome, instance)
        ctx = solver_context(instance.closure)
        want = ctx.multi_tsp(instance.targets, instance.trucks, 0).makespan
        assert outcome.makespan == pytest.approx(want, abs=1e-9)


class TestOptimistic:
    def test_no_damage_is_pure_joint_cover(self):
        instance = random_instance(5, delta=0.0)
        outcome = simulate(instance, "optimistic")
        check_feasible(outcome, instance)
        ctx = solver_context(instance.closure)
        want = ctx.multi_tsp(instance.targets, 1, 1, instance.alpha).makespan
        assert outcome.makespan == pytest.approx(want, abs=1e-9)

    def test_makespan_identity(self):
        # realized makespan == joint cover + truck tours over drone-found damage
        for seed in range(6):
            instance = random_instance(seed + 10, trucks=2, drones=2, delta=0.5)
            outcome = simulate(instance, "optimistic")
            check_feasible(outcome, instance)
            ctx = solver_context(instance.closure)
            stage1 = ctx.multi_tsp(instance.targets, 2, 2, instance.alpha)
            t1 = stage1.makespan
            truck_stage1 = set()
            for tour in stage1.truck_tours:
                truck_stage1.update(tour.interior)
            leftovers = sorted(instance.damaged - truck_stage1)
            stage2 = ctx.multi_tsp(leftovers, 2, 0).makespan if leftovers else 0.0
            assert outcome.makespan == pytest.approx(t1 + stage2, abs=1e-9)
            # the leftover set can also be read back from the outcome log
            revealed_by_drone = {
                e.node for e in outcome.events
                if e.status == "damaged" and e.vehicle >= instance.trucks
                and e.time <= t1 + 1e-9
            }
            assert set(leftovers) <= revealed_by_drone

    def test_upper_bound_with_full_damage_set(self):
        for seed in range(4):
            instance = random_instance(seed + 30, delta=0.6)
            outcome = simulate(instance, "optimistic")
            ctx = solver_context(instance.closure)
            joint = ctx.multi_tsp(instance.targets, 1, 1, instance.alpha).makespan
            trucks_on_damage = ctx.multi_tsp(sorted(instance.damaged), 1, 0).makespan
            assert outcome.makespan <= joint + trucks_on_damage + 1e-9


class TestRegretless:
    def test_never_worse_than_truck_only(self):
        for seed in range(8):
            instance = random_instance(seed + 50, trucks=2, drones=3, alpha=2.0,
                                       delta=0.5)
            outcome = simulate(instance, "regretless")
            check_feasible(outcome, instance)
            ctx = solver_context(instance.closure)
            cap = ctx.multi_tsp(instance.targets, 2, 0).makespan
            assert outcome.makespan <= cap + 1e-9

    def test_all_damaged_equals_truck_only(self):
        for seed in range(4):
            instance = random_instance(seed + 70, trucks=2, drones=2, delta=1.0)
            outcome = simulate(instance, "regretless")
            check_feasible(outcome, instance)
            ctx = solver_context(instance.closure)
            cap = ctx.multi_tsp(instance.targets, 2, 0).makespan
            assert outcome.makespan == pytest.approx(cap, abs=1e-9)

    def test_drones_complete_their_tours(self):
        instance = random_instance(91, trucks=1, drones=2, delta=0.3)
        outcome = simulate(instance, "regretless")
        for tour in outcome.tours:
            assert tour.nodes[-1] == DEPOT


class TestExploreFirst:
    def test_need_a_drone(self):
        instance = random_instance(101, drones=0)
        with pytest.raises(PolicyError):
            simulate(instance, "efhs")
        with pytest.raises(PolicyError):
            simulate(instance, "efha")

    def test_efhs_no_damage_is_pure_sweep(self):
        instance = random_instance(102, drones=2, delta=0.0)
        outcome = simulate(instance, "efhs")
        ctx = solver_context(instance.closure)
        want = ctx.multi_tsp(instance.targets, 0, 2, instance.alpha).makespan
        assert outcome.makespan == pytest.approx(want, abs=1e-9)

    def test_efha_dispatches_at_revelations(self):
        # greedy dispatch may beat or lose to the batched variant, but the
        # first truck must leave no later than the sweep completes
        for seed in range(6):
            instance = random_instance(seed + 110, trucks=1, drones=2, delta=0.5)
            a = simulate(instance, "efha")
            s = simulate(instance, "efhs")
            check_feasible(a, instance)
            check_feasible(s, instance)
            if instance.damaged:
                first_reveal = min(e.time for e in a.events
                                   if e.status == "damaged")
                assert a.stages["dispatch_times"][0] == pytest.approx(
                    first_reveal, abs=1e-9)
                assert a.stages["dispatch_times"][0] <= s.stages["help_start"] + 1e-9


class TestUniversalInvariants:
    def test_feasibility_and_lower_bound(self):
        for seed in range(5):
            instance = random_instance(seed + 130, trucks=2, drones=1, alpha=0.5,
                                       delta=0.4)
            ctx = solver_context(instance.closure)
            joint = ctx.multi_tsp(instance.targets, 2, 1, 0.5).makespan
            trucks_on_damage = ctx.multi_tsp(sorted(instance.damaged), 2, 0).makespan
            floor = max(joint, trucks_on_damage)
            opt = rdp_star_opt(instance).makespan
            for policy in ALL_POLICIES:
                outcome = simulate(instance, policy)
                check_feasible(outcome, instance)
                assert outcome.makespan >= floor - 1e-9
                assert outcome.makespan >= opt - 1e-9

    def test_everything_damaged_needs_truck_time(self):
        instance = random_instance(140, trucks=1, drones=3, alpha=4.0, delta=1.0)
        ctx = solver_context(instance.closure)
        cap = ctx.multi_tsp(instance.targets, 1, 0).makespan
        for policy in ALL_POLICIES:
            outcome = simulate(instance, policy)
            assert outcome.makespan >= cap - 1e-9


class TestInformationHiding:
    """Flipping the status of a node nobody has visited yet must not change
    any decision taken before that node's revelation."""

    @pytest.mark.parametrize("policy", ["regretless", "efha", "optimistic"])
    def test_replay_with_flipped_late_node(self, policy):
        instance = random_instance(150, trucks=2, drones=2, alpha=2.0, delta=0.5)
        base = simulate(instance, policy)
        last = max(base.events, key=lambda e: (e.time, e.node))
        flipped = set(instance.damaged)
        if last.node in flipped:
            flipped.discard(last.node)
        else:
            flipped.add(last.node)
        twin = RdpInstance.build(instance.graph, instance.trucks, instance.drones,
                                 instance.alpha, flipped, instance.meta)
        replay = simulate(twin, policy)
        cutoff = last.time - 1e-9
        base_early = [d for d in base.decisions if d[0] < cutoff]
        replay_early = [d for d in replay.decisions if d[0] < cutoff]
        assert base_early == replay_early
        base_reveals = [(e.time, e.node, e.status) for e in base.events
                        if e.time < cutoff]
        replay_reveals = [(e.time, e.node, e.status) for e in replay.events
                          if e.time < cutoff]
        assert base_reveals == replay_reveals
