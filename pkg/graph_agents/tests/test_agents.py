from itertools import combinations

from django.test import SimpleTestCase
import numpy as np

from graph_agents.agents import (
    AccessModelSession, canonical_code, clique_count_walk, cycle_count_walk, dfs_traverse_component,
    expected_two_agent_rate, frequency_distinguisher, iddfs_traverse, neighborhood_fingerprint,
    reconstruct_neighborhood, root_seeking_walk, theorem8_protocol,
)
from graph_agents.datasets import (
    gen_lemma4_pair, gen_lemma8_pair, gen_one_way_tree, gen_theorem8_pair, random_connected_graph, rook_graph,
    shrikhande_graph,
)
from graph_agents.exceptions import ConfigError, GraphError, TraceIncomplete
from graph_agents.graphs import (
    AnchoredPattern, Graph, clique_profile_at, count_cycles_through, is_isomorphic_small, mark_node,
    r_hop_neighborhood,
)

MARKED_NODE = AnchoredPattern.from_edges(1, [], node_features=[[0.0, 1.0]])


class TraversalTests(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(11)
        self.graphs = [random_connected_graph(int(n), 4, 2 * int(n), rng) for n in (5, 8, 12, 15)]

    def test_iddfs_covers_ball_within_bound(self):
        for g in self.graphs:
            for r in (1, 2, 3):
                trace = iddfs_traverse(g, 0, r)
                ball, _ = r_hop_neighborhood(g, 0, r)
                self.assertTrue(trace.complete)
                self.assertLessEqual(trace.move_count, 2 * r * ball.node_count)
                self.assertEqual(sorted(trace.visit_order), sorted(trace.distances))
                local, _ = reconstruct_neighborhood(trace)
                self.assertTrue(is_isomorphic_small(mark_node(local, 0), mark_node(ball, 0)))

    def test_iddfs_records_true_distances(self):
        path = Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
        trace = iddfs_traverse(path, 2, 2)
        self.assertEqual(trace.distances, {2: 0, 1: 1, 3: 1, 0: 2, 4: 2})

    def test_iddfs_radius_zero(self):
        trace = iddfs_traverse(self.graphs[0], 3, 0)
        self.assertEqual(trace.move_count, 0)
        self.assertEqual(trace.visit_order, [3])

    def test_iddfs_negative_radius(self):
        with self.assertRaises(GraphError):
            iddfs_traverse(self.graphs[0], 0, -1)

    def test_walk_only_uses_edges(self):
        g = self.graphs[2]
        trace = iddfs_traverse(g, 0, 2)
        for (_, a, _), (_, b, came_from) in zip(trace.steps, trace.steps[1:]):
            self.assertEqual(came_from, a)
            self.assertTrue(a == b or g.has_edge(a, b))

    def test_dfs_component_bound(self):
        for g in self.graphs:
            trace = dfs_traverse_component(g, 0)
            self.assertEqual(len(trace.visit_order), g.node_count)
            self.assertLessEqual(trace.move_count, 2 * g.node_count - 3)

    def test_dfs_on_isolated_node(self):
        with self.assertRaises(GraphError):
            dfs_traverse_component(Graph.from_edges(2, []), 0)

    def test_incomplete_trace_cannot_be_reconstructed(self):
        trace = iddfs_traverse(self.graphs[0], 0, 1)
        trace.complete = False
        with self.assertRaises(TraceIncomplete):
            reconstruct_neighborhood(trace)


class CountingWalkTests(SimpleTestCase):
    def test_clique_walk_on_gadgets(self):
        g1, g2 = gen_lemma4_pair()
        result = clique_count_walk(g1, 0)
        self.assertEqual(result.counts, {3: 1})
        self.assertLessEqual(result.steps, 5)
        self.assertEqual(clique_count_walk(g2, 0).counts, {3: 0})

    def test_clique_walk_matches_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            g = random_connected_graph(10, 5, 20, rng)
            v = int(rng.integers(10))
            result = clique_count_walk(g, v, max_size=5)
            self.assertEqual(result.counts, clique_profile_at(g, v, 5))
            self.assertLessEqual(result.steps, max(2 * g.degree(v) - 1, 0))

    def test_cycle_walk_matches_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            g = random_connected_graph(9, 4, 12, rng)
            for c in (3, 4, 5):
                self.assertEqual(cycle_count_walk(g, 0, c).count, count_cycles_through(g, 0, c))

    def test_cycle_walk_on_gadget(self):
        _, g2 = gen_lemma4_pair()
        self.assertEqual(cycle_count_walk(g2, 0, 3).count, 0)
        k4 = Graph.from_edges(4, list(combinations(range(4), 2)))
        self.assertEqual(cycle_count_walk(k4, 0, 4).count, 3)


class FingerprintTests(SimpleTestCase):
    def test_rook_and_shrikhande_neighborhoods_differ(self):
        rook = neighborhood_fingerprint(iddfs_traverse(rook_graph(), 0, 1))
        shrikhande = neighborhood_fingerprint(iddfs_traverse(shrikhande_graph(), 0, 1))
        self.assertNotEqual(rook, shrikhande)

    def test_fingerprint_is_label_invariant(self):
        perm = np.random.default_rng(2).permutation(16)
        moved = rook_graph().relabel(perm)
        original = neighborhood_fingerprint(iddfs_traverse(rook_graph(), 0, 2))
        relabelled = neighborhood_fingerprint(iddfs_traverse(moved, int(perm[0]), 2))
        self.assertEqual(original, relabelled)

    def test_canonical_code_separates_two_regular_graphs(self):
        hexagon = Graph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)])
        triangles = Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
        self.assertNotEqual(canonical_code(hexagon), canonical_code(triangles))
        self.assertEqual(canonical_code(hexagon), canonical_code(hexagon.relabel([3, 1, 4, 0, 5, 2])))


class AccessModelTests(SimpleTestCase):
    def test_queries_only_on_discovered_nodes(self):
        g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
        session = AccessModelSession(g, 0, np.random.default_rng(0))
        self.assertEqual(session.degree_query(), 1)
        with self.assertRaises(GraphError):
            session.degree_query(3)
        self.assertEqual(session.step(), 1)
        self.assertTrue(session.adjacency_query(0, 1))
        self.assertFalse(session.adjacency_query(1, 1))
        self.assertEqual(session.discovered, [0, 1])

    def test_random_moves_follow_edges(self):
        g = rook_graph()
        session = AccessModelSession(g, 0, np.random.default_rng(1))
        previous = 0
        for _ in range(50):
            current = session.step()
            self.assertTrue(g.has_edge(previous, current))
            previous = current
        self.assertEqual(session.step_count, 50)


class FrequencyDistinguisherTests(SimpleTestCase):
    def test_many_agents_separate_marked_components(self):
        g1, g2 = gen_lemma8_pair(6)
        success = frequency_distinguisher(g1, g2, MARKED_NODE, k=16, trials=50, seed=0)
        self.assertGreaterEqual(success, 0.8)

    def test_single_agent_is_a_coin_flip(self):
        g1, g2 = gen_lemma8_pair(6)
        success = frequency_distinguisher(g1, g2, MARKED_NODE, k=1, trials=200, seed=0)
        self.assertLessEqual(success, 0.75)

    def test_pattern_must_fit_budget(self):
        g1, g2 = gen_lemma8_pair(6)
        edge = AnchoredPattern.from_edges(3, [(0, 1), (1, 2)], anchor=1)
        with self.assertRaises(ConfigError):
            frequency_distinguisher(g1, g2, edge, k=2, trials=1, seed=0, step_budget=1)


class OneWayTreeProtocolTests(SimpleTestCase):
    def test_root_seeking_walk_takes_level_minus_one_moves(self):
        tree, g = gen_one_way_tree(3, 4)
        for leaf in tree.leaf_list[:5]:
            self.assertEqual(root_seeking_walk(g, leaf, 4), 3)
        self.assertEqual(root_seeking_walk(g, tree.root, 4), 0)

    def test_two_agents_never_misreport_the_single_secondary_graph(self):
        pair = gen_theorem8_pair(3, 3, 4, 2)
        result = theorem8_protocol(pair, agents=2, step_budget=7, trials=200, seed=0)
        self.assertEqual(result.success_g2, 1.0)
        self.assertGreater(result.success_g1, 0.15)
        self.assertAlmostEqual(result.expected_g1, expected_two_agent_rate(pair.layout1))

    def test_protocol_rejects_three_agents(self):
        pair = gen_theorem8_pair(3, 3, 4, 2)
        with self.assertRaises(ConfigError):
            theorem8_protocol(pair, agents=3, step_budget=7, trials=1, seed=0)

    def test_protocol_needs_deep_primary_trees(self):
        pair = gen_theorem8_pair(2, 2, 3, 2)
        with self.assertRaises(ConfigError):
            theorem8_protocol(pair, agents=2, step_budget=5, trials=1, seed=0)
