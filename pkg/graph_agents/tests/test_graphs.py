from itertools import combinations

from django.test import SimpleTestCase
import networkx as nx
import numpy as np

from graph_agents.datasets import gen_lemma4_pair, random_connected_graph, random_graph, rook_graph, shrikhande_graph
from graph_agents.exceptions import BudgetExceeded, GraphError
from graph_agents.graphs import (
    AnchoredPattern, Graph, clique_profile_at, count_anchored_occurrences, count_cliques, count_cliques_at,
    count_cycles, count_cycles_through, disjoint_union, gamma_h, incident_nodes, is_isomorphic_small, mark_node,
    one_wl_equivalent, r_hop_neighborhood,
)

TRIANGLE = AnchoredPattern.from_edges(3, [(0, 1), (1, 2), (0, 2)])


def complete_graph(n):
    return Graph.from_edges(n, list(combinations(range(n), 2)))


def cycle_graph(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


class GraphConstructionTests(SimpleTestCase):
    def test_rejects_out_of_range_edge(self):
        with self.assertRaises(GraphError):
            Graph.from_edges(3, [(0, 3)])

    def test_rejects_duplicate_edge(self):
        with self.assertRaises(GraphError):
            Graph.from_edges(3, [(0, 1), (1, 0)])

    def test_rejects_self_loop(self):
        with self.assertRaises(GraphError):
            Graph.from_edges(2, [(1, 1)])

    def test_rejects_feature_row_mismatch(self):
        with self.assertRaises(GraphError):
            Graph.from_edges(3, [(0, 1)], np.ones((2, 1)))

    def test_default_features_are_constant(self):
        g = Graph.from_edges(3, [(0, 1), (1, 2)])
        self.assertEqual(g.feature_dim, 1)
        self.assertTrue(np.all(g.node_features == 1.0))
        self.assertEqual(g.max_degree, 2)

    def test_text_format_round_trip(self):
        g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)], [[0.5, 1.0], [1.0, 0.0], [0.25, 2.0], [3.0, 1e-17]])
        self.assertEqual(Graph.from_text(g.to_text()), g)

    def test_text_format_skips_comments(self):
        g = Graph.from_text("# a path\n3 1\n1\n1\n1\n0 1\n1 2\n")
        self.assertEqual(g.edge_count, 2)

    def test_text_format_missing_feature_line(self):
        with self.assertRaises(GraphError):
            Graph.from_text("3 1\n1\n1\n")

    def test_text_format_bad_edge_line(self):
        with self.assertRaises(GraphError):
            Graph.from_text("3 1\n1\n1\n1\n0 1 2\n")

    def test_relabel_moves_features_with_nodes(self):
        g = Graph.from_edges(3, [(0, 1), (1, 2)], [[1.0], [2.0], [3.0]])
        moved = g.relabel([2, 0, 1])
        self.assertEqual(moved.node_features[2, 0], 1.0)
        self.assertTrue(moved.has_edge(2, 0))
        self.assertTrue(is_isomorphic_small(g, moved))

    def test_relabel_rejects_non_permutation(self):
        with self.assertRaises(GraphError):
            cycle_graph(3).relabel([0, 0, 1])

    def test_disjoint_union_offsets(self):
        union, offsets = disjoint_union([cycle_graph(3), cycle_graph(4)])
        self.assertEqual(offsets, [0, 3])
        self.assertEqual(union.node_count, 7)
        self.assertEqual(union.edge_count, 7)
        self.assertFalse(union.has_edge(2, 3))

    def test_mark_node_appends_indicator(self):
        marked = mark_node(cycle_graph(4), 2)
        self.assertEqual(marked.feature_dim, 2)
        self.assertEqual(marked.node_features[:, 1].tolist(), [0.0, 0.0, 1.0, 0.0])


class NeighborhoodTests(SimpleTestCase):
    def test_r_hop_orders_by_distance(self):
        path = Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
        ball, mapping = r_hop_neighborhood(path, 2, 1)
        self.assertEqual(mapping, [2, 1, 3])
        self.assertEqual(sorted(ball.edges()), [(0, 1), (0, 2)])

    def test_r_hop_on_gadget(self):
        g1, _ = gen_lemma4_pair()
        ball, _ = r_hop_neighborhood(g1, 0, 1)
        self.assertEqual((ball.node_count, ball.edge_count), (4, 4))

    def test_radius_zero_is_single_node(self):
        ball, mapping = r_hop_neighborhood(cycle_graph(5), 3, 0)
        self.assertEqual(ball.node_count, 1)
        self.assertEqual(mapping, [3])

    def test_negative_radius(self):
        with self.assertRaises(GraphError):
            r_hop_neighborhood(cycle_graph(5), 0, -1)

    def test_out_of_range_center(self):
        with self.assertRaises(GraphError):
            r_hop_neighborhood(cycle_graph(5), 9, 1)

    def test_balls_match_networkx_on_random_graphs(self):
        rng = np.random.default_rng(11)
        for trial in range(12):
            g = random_connected_graph(int(rng.integers(2, 14)), 4, 6, rng) if trial % 2 else random_graph(10, 3, 0.4, rng)
            reference = nx.Graph()
            reference.add_nodes_from(range(g.node_count))
            reference.add_edges_from(g.edges())
            v = int(rng.integers(g.node_count))
            reach = max(nx.single_source_shortest_path_length(reference, v).values())
            previous = set()
            for r in range(reach + 1):
                ball, mapping = r_hop_neighborhood(g, v, r)
                expected = set(nx.single_source_shortest_path_length(reference, v, cutoff=r))
                self.assertEqual(set(mapping), expected, (trial, v, r))
                self.assertEqual(mapping[0], v)
                self.assertLessEqual(previous, set(mapping))
                self.assertEqual(ball.edge_count, reference.subgraph(mapping).number_of_edges())
                previous = set(mapping)


class CountingOracleTests(SimpleTestCase):
    def test_cliques_in_complete_graph(self):
        k4 = complete_graph(4)
        self.assertEqual(count_cliques_at(k4, 0, 3), 3)
        self.assertEqual(count_cliques_at(k4, 0, 4), 1)
        self.assertEqual(clique_profile_at(k4, 0), {3: 3, 4: 1})
        self.assertEqual(clique_profile_at(complete_graph(5), 0), {3: 6, 4: 4, 5: 1})
        self.assertEqual(clique_profile_at(complete_graph(5), 0, 6), {3: 6, 4: 4, 5: 1, 6: 0})
        self.assertEqual(clique_profile_at(cycle_graph(5), 0), {3: 0})

    def test_clique_size_below_two(self):
        with self.assertRaises(GraphError):
            count_cliques_at(complete_graph(3), 0, 1)

    def test_local_clique_counts_sum_to_global(self):
        g = random_graph(14, 5, 0.4, np.random.default_rng(7))
        for size in (3, 4):
            local = sum(count_cliques_at(g, v, size) for v in range(g.node_count))
            self.assertEqual(local, size * count_cliques(g, size))

    def test_cycles_through_node(self):
        self.assertEqual(count_cycles_through(cycle_graph(6), 0, 6), 1)
        self.assertEqual(count_cycles_through(cycle_graph(6), 0, 3), 0)
        k4 = complete_graph(4)
        self.assertEqual(count_cycles_through(k4, 0, 3), 3)
        self.assertEqual(count_cycles_through(k4, 0, 4), 3)
        self.assertEqual(count_cycles(k4, 3), 4)
        self.assertEqual(count_cycles(k4, 4), 3)

    def test_local_cycle_counts_sum_to_global(self):
        g = random_graph(12, 4, 0.45, np.random.default_rng(3))
        for c in (3, 4, 5):
            local = sum(count_cycles_through(g, v, c) for v in range(g.node_count))
            self.assertEqual(local, c * count_cycles(g, c))

    def test_cycle_length_below_three(self):
        with self.assertRaises(GraphError):
            count_cycles_through(cycle_graph(4), 0, 2)

    def test_anchored_triangle_on_gadgets(self):
        g1, g2 = gen_lemma4_pair()
        self.assertEqual(count_anchored_occurrences(g1, 0, TRIANGLE), 1)
        self.assertEqual(count_anchored_occurrences(g2, 0, TRIANGLE), 0)

    def test_raw_embeddings_count_anchored_automorphisms(self):
        k4 = complete_graph(4)
        self.assertEqual(count_anchored_occurrences(k4, 0, TRIANGLE), 3)
        self.assertEqual(count_anchored_occurrences(k4, 0, TRIANGLE, raw=True), 6)

    def test_pattern_budget(self):
        long_path = AnchoredPattern.from_edges(11, [(i, i + 1) for i in range(10)])
        with self.assertRaises(BudgetExceeded):
            count_anchored_occurrences(cycle_graph(12), 0, long_path)

    def test_pattern_must_be_connected(self):
        with self.assertRaises(GraphError):
            AnchoredPattern.from_edges(3, [(0, 1)])

    def test_incident_nodes_of_triangle(self):
        g = Graph.from_edges(4, [(0, 1), (1, 2), (0, 2), (0, 3)])
        self.assertEqual(incident_nodes(g, TRIANGLE), {0, 1, 2})
        self.assertEqual(gamma_h(g, TRIANGLE), 3)


class IsomorphismTests(SimpleTestCase):
    def test_rook_and_shrikhande_are_not_isomorphic(self):
        self.assertFalse(is_isomorphic_small(rook_graph(), shrikhande_graph()))

    def test_relabelled_rook_is_isomorphic(self):
        perm = np.random.default_rng(0).permutation(16)
        self.assertTrue(is_isomorphic_small(rook_graph(), rook_graph().relabel(perm)))

    def test_features_break_isomorphism(self):
        plain = cycle_graph(4)
        marked = plain.with_features([[1.0], [1.0], [1.0], [2.0]])
        self.assertFalse(is_isomorphic_small(plain, marked))

    def test_node_budget(self):
        with self.assertRaises(BudgetExceeded):
            is_isomorphic_small(Graph.from_edges(25, []), Graph.from_edges(25, []))

    def test_wl_cannot_separate_strongly_regular_pair(self):
        self.assertTrue(one_wl_equivalent(rook_graph(), shrikhande_graph()))

    def test_wl_separates_path_and_star(self):
        path = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
        star = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
        self.assertFalse(one_wl_equivalent(path, star))
