import itertools
import json
import math

import pytest

from relief_routing import (GeneratorConfig, Xoshiro256StarStar, build_dataset,
                            dataset_manifest, gen_center, gen_coastal,
                            gen_mountain, gen_random, generate_graph,
                            instance_to_dict, metric_closure, mix_seed,
                            sample_damage)
from relief_routing.generators import _MountainWeights, _segments_cross


class TestRng:
    def test_streams_are_reproducible(self):
        a = Xoshiro256StarStar(12345)
        b = Xoshiro256StarStar(12345)
        assert [a.next_u64() for _ in range(10)] == [b.next_u64() for _ in range(10)]

    def test_different_seeds_diverge(self):
        a = Xoshiro256StarStar(1)
        b = Xoshiro256StarStar(2)
        assert [a.next_u64() for _ in range(4)] != [b.next_u64() for _ in range(4)]

    def test_uniform_range(self):
        rng = Xoshiro256StarStar(7)
        xs = [rng.random() for _ in range(2000)]
        assert all(0.0 <= x < 1.0 for x in xs)
        assert abs(sum(xs) / len(xs) - 0.5) < 0.05

    def test_normal_moments(self):
        rng = Xoshiro256StarStar(8)
        xs = [rng.normal(0.0, 50.0) for _ in range(4000)]
        mean = sum(xs) / len(xs)
        var = sum((x - mean) ** 2 for x in xs) / len(xs)
        assert abs(mean) < 5.0
        assert abs(math.sqrt(var) - 50.0) < 5.0

    def test_mix_seed_is_order_sensitive(self):
        assert mix_seed(1, 2) != mix_seed(2, 1)


class TestRandomClass:
    def test_unit_square_and_completeness(self):
        graph = gen_random(18, seed=4)
        assert graph.node_count == 18
        assert len(graph.edges) == 18 * 17 // 2
        for x, y in graph.coords:
            assert 0.0 <= x <= 1.0 and 0.0 <= y <= 1.0

    def test_determinism_per_seed(self):
        a, b = gen_random(10, seed=9), gen_random(10, seed=9)
        assert a.edges == b.edges and a.coords == b.coords


class TestCenterClasses:
    def test_depot_at_origin(self):
        graph = gen_center(12, seed=5, centers=1)
        assert graph.coords[0] == (0.0, 0.0)
        assert len(graph.edges) == 12 * 11 // 2

    def test_two_center_hub_and_balance(self):
        counts = 0
        total = 0
        for seed in range(50):
            graph = gen_center(22, seed=seed, centers=2)
            assert graph.coords[1] == (200.0, 0.0)
            for x, y in graph.coords[2:]:
                total += 1
                if math.hypot(x - 200.0, y) < math.hypot(x, y):
                    counts += 1
        fraction = counts / total
        assert abs(fraction - 0.5) < 0.15

    def test_determinism(self):
        a = gen_center(9, seed=3, centers=2)
        b = gen_center(9, seed=3, centers=2)
        assert a.coords == b.coords


def no_crossings(graph):
    cells = [(round(x * 1e6), round(y * 1e6)) for x, y in graph.coords]
    for (u1, v1, _), (u2, v2, _) in itertools.combinations(graph.edges, 2):
        if _segments_cross(cells[u1], cells[v1], cells[u2], cells[v2]):
            return False
    return True


class TestLatticeClasses:
    def test_coastal_edge_count_and_planarity(self):
        graph = gen_coastal(18, seed=1, edge_target=36)
        assert graph.node_count == 18
        assert len(graph.edges) == 36
        assert no_crossings(graph)
        metric_closure(graph)  # connected by construction

    def test_coastal_bias_toward_coastline(self):
        xs = []
        for seed in range(5):
            graph = gen_coastal(15, seed=seed)
            xs.extend(x for x, _ in graph.coords)
        assert sum(xs) / len(xs) < 0.4  # lattice width is 1; coast at x=0

    def test_mountain_edge_count_and_planarity(self):
        graph = gen_mountain(18, seed=2, edge_target=36)
        assert len(graph.edges) == 36
        assert no_crossings(graph)

    def test_mountain_valley_bias(self):
        node_heights = []
        field_means = []
        for seed in range(20):
            rng = Xoshiro256StarStar(mix_seed(seed, 0xA17))
            model = _MountainWeights(15, rng)
            graph = gen_mountain(15, seed=seed)
            node_heights.extend(model.height(x, y) for x, y in graph.coords)
            side = model.side
            samples = [model.height(i / 20 * side, j / 20 * side)
                       for i in range(21) for j in range(21)]
            field_means.append(sum(samples) / len(samples))
        assert sum(node_heights) / len(node_heights) < sum(field_means) / len(field_means)

    def test_determinism(self):
        a = gen_coastal(15, seed=11)
        b = gen_coastal(15, seed=11)
        assert a.edges == b.edges and a.coords == b.coords


class TestDamageSampling:
    def test_extremes(self):
        graph = gen_random(10, seed=1)
        assert sample_damage(graph, 0.0, seed=5) == frozenset()
        assert sample_damage(graph, 1.0, seed=5) == frozenset(range(1, 10))

    def test_binomial_concentration(self):
        # emulate a 10000-node graph by pooling many draws
        hits = 0
        trials = 0
        for seed in range(100):
            graph = gen_random(101, seed=seed)
            damaged = sample_damage(graph, 0.3, seed=seed * 7 + 1)
            hits += len(damaged)
            trials += 100
        assert abs(hits / trials - 0.3) < 0.02

    def test_determinism(self):
        graph = gen_random(10, seed=2)
        assert sample_damage(graph, 0.5, seed=9) == sample_damage(graph, 0.5, seed=9)


class TestDatasets:
    def test_small_shape(self):
        items = build_dataset("SMALL", root_seed=7)
        assert len(items) == 20 * 5  # 20 graphs x 5 damage sets
        assert all(item.instance.graph.node_count == 13 for item in items)
        assert all(item.alphas == (0.5, 1.0, 2.0) for item in items)
        assert all(len(item.fleets) == 6 for item in items)

    def test_random_shape(self):
        items = build_dataset("RANDOM", root_seed=7)
        assert len(items) == 80 * 5
        sizes = {item.instance.graph.node_count for item in items}
        assert sizes == {13, 15, 18, 21}

    def test_small_is_a_slice_of_random(self):
        small = {i.instance_id for i in build_dataset("SMALL", root_seed=7)}
        random_ids = {i.instance_id for i in build_dataset("RANDOM", root_seed=7)}
        assert small <= random_ids

    def test_reproducible_serialization(self):
        a = build_dataset("BASE", root_seed=3)
        b = build_dataset("BASE", root_seed=3)
        dump_a = json.dumps([instance_to_dict(i.instance) for i in a])
        dump_b = json.dumps([instance_to_dict(i.instance) for i in b])
        assert dump_a == dump_b

    def test_manifest_contents(self):
        items = build_dataset("BASE", root_seed=3)
        manifest = dataset_manifest("BASE", 3, items)
        assert manifest["dataset"] == "BASE"
        assert len(manifest["instances"]) == len(items)
        assert all(entry["n"] == 18 for entry in manifest["instances"])

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GeneratorConfig(graph_class="coastal", n=18, seed=1, edge_target=10)
        with pytest.raises(ValueError):
            GeneratorConfig(graph_class="nope", n=5, seed=1)
        graph = generate_graph(GeneratorConfig(graph_class="random", n=6, seed=1))
        assert graph.node_count == 6
