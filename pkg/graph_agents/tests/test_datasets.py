import tempfile
from pathlib import Path

from django.test import SimpleTestCase
import numpy as np

from graph_agents.datasets import (
    CSL_NODES, CSL_SKIPS, DATASET_FAMILIES, LabeledDataset, build_dataset, gen_csl, gen_four_cycles, gen_ladder,
    gen_lemma4_pair, gen_lemma7_pair, gen_lemma8_pair, gen_one_way_tree, gen_theorem8_pair, gen_two_wl_pair,
    ladder_graph, split_dataset, tree_size, wl_distinguishable_groups,
)
from graph_agents.exceptions import ConfigError
from graph_agents.graphs import count_cycles, is_isomorphic_small, one_wl_equivalent


class FourCyclesTests(SimpleTestCase):
    def setUp(self):
        self.dataset = gen_four_cycles(20, seed=0)

    def test_shape(self):
        self.assertEqual(len(self.dataset), 20)
        self.assertEqual(sorted(set(self.dataset.labels)), [0, 1])
        self.assertEqual(self.dataset.labels.count(1), 10)
        for g in self.dataset.graphs:
            self.assertEqual(g.node_count, 16)
            self.assertEqual(g.degree_histogram(), {2: 16})

    def test_label_is_presence_of_four_cycle(self):
        for g, label in self.dataset.items:
            self.assertEqual(count_cycles(g, 4) > 0, label == 1)

    def test_pairs_are_wl_indistinguishable(self):
        self.assertEqual(wl_distinguishable_groups(self.dataset), [])

    def test_same_seed_same_graphs(self):
        again = gen_four_cycles(20, seed=0)
        self.assertEqual(again.graphs, self.dataset.graphs)

    def test_odd_count(self):
        with self.assertRaises(ConfigError):
            gen_four_cycles(7, seed=0)


class CslTests(SimpleTestCase):
    def test_classes_and_regularity(self):
        dataset = gen_csl(seed=1, per_class=2)
        self.assertEqual(dataset.class_count, len(CSL_SKIPS))
        self.assertEqual(len(dataset), 2 * len(CSL_SKIPS))
        for g in dataset.graphs:
            self.assertEqual(g.node_count, CSL_NODES)
            self.assertEqual(g.degree_histogram(), {4: CSL_NODES})

    def test_default_size(self):
        self.assertEqual(len(gen_csl(seed=0)), 150)


class StronglyRegularPairTests(SimpleTestCase):
    def test_pair(self):
        dataset = gen_two_wl_pair()
        rook, shrikhande = dataset.graphs
        self.assertEqual(rook.degree_histogram(), {6: 16})
        self.assertEqual(shrikhande.degree_histogram(), {6: 16})
        self.assertFalse(is_isomorphic_small(rook, shrikhande))
        self.assertTrue(one_wl_equivalent(rook, shrikhande))
        self.assertEqual(wl_distinguishable_groups(dataset), [])


class LadderTests(SimpleTestCase):
    def test_plain_ladder(self):
        g = ladder_graph(3)
        self.assertEqual(g.node_count, 8)
        self.assertEqual(g.edge_count, 10)

    def test_crossed_cells_add_diagonals(self):
        dataset = gen_ladder(7, seed=2, pairs=5, crossed_count=2)
        plain_edges = ladder_graph(7).edge_count
        for g, label in dataset.items:
            self.assertEqual(g.edge_count, plain_edges + (4 if label else 0))
        self.assertEqual(dataset.metadata['mode'], 'count')
        self.assertEqual(dataset.metadata['crossed_per_pair'], [2] * 5)

    def test_density_mode_metadata(self):
        dataset = gen_ladder(6, seed=0, pairs=4)
        self.assertEqual(dataset.metadata['mode'], 'density')
        self.assertEqual(len(dataset.metadata['crossed_per_pair']), 4)
        self.assertEqual(dataset.metadata['cells'], 6)

    def test_too_few_cells(self):
        with self.assertRaises(ConfigError):
            gen_ladder(1, seed=0)

    def test_too_many_crossed(self):
        with self.assertRaises(ConfigError):
            gen_ladder(3, seed=0, crossed_count=4)


class OneWayTreeTests(SimpleTestCase):
    def test_levels(self):
        tree, g = gen_one_way_tree(2, 4)
        self.assertEqual(g.node_count, 15)
        self.assertEqual(len(tree.leaf_list), 8)
        self.assertEqual(int(tree.levels[tree.root]), 1)
        self.assertTrue(all(int(tree.levels[leaf]) == 4 for leaf in tree.leaf_list))
        self.assertEqual(tree_size(3, 3), 13)

    def test_invalid_branching(self):
        with self.assertRaises(ConfigError):
            gen_one_way_tree(1, 3)


class HubPairTests(SimpleTestCase):
    def test_sizes_and_degrees(self):
        g1, g2 = gen_theorem8_pair(3, 3, 4, 2)
        self.assertEqual(g1.node_count, 1 + 3 * (7 + 15))
        self.assertEqual(g2.node_count, 1 + 3 * 7 + 15)
        self.assertEqual(g1.max_degree, 3)
        self.assertEqual(g1.degree(0), 3)

    def test_equalized_pair_has_equal_size(self):
        pair = gen_theorem8_pair(3, 3, 4, 2, equalized=True)
        self.assertEqual(pair.g1.node_count, pair.g2.node_count)
        self.assertEqual(pair.layout1.roles.count('secondary'), pair.layout2.roles.count('secondary'))

    def test_levels_are_one_hot(self):
        pair = gen_theorem8_pair(2, 3, 4, 2)
        self.assertEqual(pair.g1.feature_dim, 5)
        self.assertTrue(np.all(pair.g1.node_features.sum(axis=1) == 1.0))

    def test_secondary_deeper_than_primary(self):
        with self.assertRaises(ConfigError):
            gen_theorem8_pair(3, 4, 4, 2)


class SmallConstructionTests(SimpleTestCase):
    def test_gadgets_have_degree_three_centers(self):
        g1, g2 = gen_lemma4_pair()
        self.assertEqual((g1.node_count, g2.node_count), (5, 7))
        self.assertEqual((g1.degree(0), g2.degree(0)), (3, 3))

    def test_path_with_fan(self):
        g1, g2 = gen_lemma7_pair(6, 10)
        self.assertEqual(g1.node_count, 16)
        self.assertEqual(g1.degree(0), 11)
        self.assertEqual(int(np.argmax(g1.node_features[5])), 1)
        self.assertEqual(int(np.argmax(g2.node_features[5])), 0)

    def test_two_cycle_components(self):
        g1, g2 = gen_lemma8_pair(5)
        self.assertEqual(g1.degree_histogram(), {2: 10})
        self.assertEqual(g1.adjacency, g2.adjacency)
        self.assertFalse(np.array_equal(g1.node_features, g2.node_features))


class BuildAndSplitTests(SimpleTestCase):
    def test_every_family_builds(self):
        small = {
            'four-cycles': {'count': 4},
            'csl': {'per_class': 1},
            'ladder': {'cells': 3, 'pairs': 2},
            'theorem8': {'b': 2, 'h1': 3, 'h2': 4, 'branching': 2},
            'lemma7': {'path_length': 4, 'fan_size': 3},
            'lemma8': {'component_size': 4},
        }
        for family in DATASET_FAMILIES:
            dataset = build_dataset(family, small.get(family, {}), seed=0)
            self.assertGreaterEqual(len(dataset), 2, family)

    def test_unknown_family(self):
        with self.assertRaises(ConfigError):
            build_dataset('petersen', {}, 0)

    def test_bad_params(self):
        with self.assertRaises(ConfigError):
            build_dataset('csl', {'bogus': 1}, 0)

    def test_split_keeps_pairs_together(self):
        dataset = gen_four_cycles(20, seed=4)
        train, test = split_dataset(dataset, 0.5, seed=1)
        self.assertEqual(len(train) + len(test), 20)
        self.assertFalse(set(train.pair_ids) & set(test.pair_ids))

    def test_split_is_stratified_without_pairs(self):
        train, test = split_dataset(gen_csl(seed=0, per_class=4), 0.5, seed=0)
        self.assertEqual(sorted(set(test.labels)), list(range(len(CSL_SKIPS))))
        self.assertEqual(len(test), 2 * len(CSL_SKIPS))

    def test_two_graph_datasets_train_and_test_on_both(self):
        dataset = gen_two_wl_pair()
        train, test = split_dataset(dataset, 0.5, seed=0)
        self.assertIs(train, dataset)
        self.assertIs(test, dataset)

    def test_json_round_trip(self):
        dataset = gen_ladder(4, seed=3, pairs=2)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'ladder.json'
            dataset.save_json(path)
            loaded = LabeledDataset.load_json(path)
        self.assertEqual(loaded.graphs, dataset.graphs)
        self.assertEqual(loaded.labels, dataset.labels)
        self.assertEqual(loaded.pair_ids, dataset.pair_ids)
        self.assertEqual(loaded.metadata, dataset.metadata)

    def test_wl_certificate_flags_separable_pairs(self):
        dataset = gen_ladder(4, seed=0, pairs=3, crossed_count=1)
        self.assertEqual(wl_distinguishable_groups(dataset), [0, 1, 2])
