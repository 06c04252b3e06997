"""
Synthetic Datasets Module

This module contains deterministic, seeded generators for every synthetic graph
family the lab trains and reasons on: regularized 4-cycles, circular skip
links, the Rook/Shrikhande pair, crossed ladders, one-way trees and the
hand-made constructions used by the deterministic-agent theory.

Every generator is a pure function of its parameters and seed; identical
inputs produce bit-identical datasets.
"""

from dataclasses import dataclass, field
import itertools
import json
import logging

import numpy as np

from .exceptions import BudgetExceeded, ConfigError, GraphError
from .graphs import Graph, disjoint_union, one_wl_equivalent, uniform_features

logger = logging.getLogger(__name__)

FOUR_CYCLES_NODES = 16
CSL_NODES = 41
CSL_SKIPS = (2, 3, 4, 5, 6, 9, 11, 12, 13, 16)
TREE_NODE_BUDGET = 10 ** 6


@dataclass
class LabeledDataset:
    """
    Graph classification dataset.

    params:
        items: List of (Graph, label) pairs
        class_count: Number of classes
        name: Family name
        generator_seed: Seed the dataset was generated with
        pair_ids: Optional group id per item; items sharing an id never straddle a split
    """

    items: list
    class_count: int
    name: str
    generator_seed: int
    pair_ids: list = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        dims = {g.feature_dim for g, _ in self.items}
        if len(dims) > 1:
            raise GraphError(f"Dataset {self.name} mixes feature dims {sorted(dims)}")
        for _, label in self.items:
            if not 0 <= label < self.class_count:
                raise GraphError(f"Label {label} outside {self.class_count} classes in {self.name}")
        if self.pair_ids is not None and len(self.pair_ids) != len(self.items):
            raise GraphError("pair_ids must have one entry per item")

    def __len__(self):
        return len(self.items)

    @property
    def graphs(self):
        return [g for g, _ in self.items]

    @property
    def labels(self):
        return [label for _, label in self.items]

    @property
    def feature_dim(self):
        return self.items[0][0].feature_dim if self.items else 1

    @property
    def max_nodes(self):
        return max((g.node_count for g, _ in self.items), default=0)

    def subset(self, indices, name=None):
        indices = list(indices)
        return LabeledDataset(
            items=[self.items[i] for i in indices],
            class_count=self.class_count,
            name=name or self.name,
            generator_seed=self.generator_seed,
            pair_ids=[self.pair_ids[i] for i in indices] if self.pair_ids is not None else None,
            metadata=dict(self.metadata),
        )

    def to_dict(self):
        return {
            'name': self.name,
            'class_count': self.class_count,
            'generator_seed': self.generator_seed,
            'metadata': self.metadata,
            'items': [
                {'graph': g.to_dict(), 'label': int(label)}
                | ({'pair_id': int(self.pair_ids[i])} if self.pair_ids is not None else {})
                for i, (g, label) in enumerate(self.items)
            ],
        }

    @classmethod
    def from_dict(cls, data):
        items = [(Graph.from_dict(item['graph']), int(item['label'])) for item in data['items']]
        pair_ids = None
        if data['items'] and 'pair_id' in data['items'][0]:
            pair_ids = [int(item['pair_id']) for item in data['items']]
        return cls(
            items=items,
            class_count=int(data['class_count']),
            name=data['name'],
            generator_seed=int(data['generator_seed']),
            pair_ids=pair_ids,
            metadata=data.get('metadata', {}),
        )

    def save_json(self, path):
        with open(path, 'w') as handle:
            json.dump(self.to_dict(), handle, sort_keys=True)

    @classmethod
    def load_json(cls, path):
        with open(path) as handle:
            return cls.from_dict(json.load(handle))


@dataclass
class OneWayTree:
    """
    Complete tree whose node features name their level.

    Levels run 1..depth; the root sits at level 1 and the leaves at level
    `depth`, so ascending is always a move to the unique smaller-level
    neighbor while every child looks alike from above.

    params:
        branching: Children per internal node
        depth: Number of levels h
        root: Root node id
        leaf_list: Leaf ids in construction order
        levels: Level of every node
    """

    branching: int
    depth: int
    root: int
    leaf_list: list
    levels: np.ndarray


def tree_size(branching, depth):
    return sum(branching ** i for i in range(depth))


def _tree_edges(branching, depth, offset=0):
    """Edges, levels and leaves of a one-way tree laid out level by level from `offset`."""
    levels, edges = [1], []
    frontier = [offset]
    next_id = offset + 1
    for level in range(2, depth + 1):
        new_frontier = []
        for parent in frontier:
            for _ in range(branching):
                edges.append((parent, next_id))
                levels.append(level)
                new_frontier.append(next_id)
                next_id += 1
        frontier = new_frontier
    return edges, levels, frontier


def gen_one_way_tree(branching, depth):
    """
    One-way tree with the level index as its single node feature.

    params:
        branching: Children per internal node, at least 2
        depth: Number of levels, at least 1

    returns:
        (OneWayTree, Graph)

    raises:
        ConfigError: On invalid sizes
        BudgetExceeded: If the tree would exceed TREE_NODE_BUDGET nodes
    """
    if branching < 2 or depth < 1:
        raise ConfigError(f"One-way tree needs branching >= 2 and depth >= 1, got {branching}, {depth}")
    size = tree_size(branching, depth)
    if size > TREE_NODE_BUDGET:
        raise BudgetExceeded(f"One-way tree with {size} nodes exceeds {TREE_NODE_BUDGET}", {'size': size})
    edges, levels, leaves = _tree_edges(branching, depth)
    levels = np.array(levels, dtype=np.int64)
    graph = Graph.from_edges(size, edges, levels.astype(np.float64).reshape(-1, 1))
    return OneWayTree(branching, depth, 0, leaves, levels), graph


def _cycle_union(lengths, rng):
    #random relabeling so cycle structure is not visible in id order
    n = sum(lengths)
    perm = rng.permutation(n)
    edges, start = [], 0
    for length in lengths:
        for i in range(length):
            edges.append((perm[start + i], perm[start + (i + 1) % length]))
        start += length
    return Graph.from_edges(n, edges, uniform_features(n))


def _partitions(total, smallest):
    if total == 0:
        yield ()
        return
    for part in range(smallest, total + 1):
        for rest in _partitions(total - part, part):
            yield (part,) + rest


def gen_four_cycles(count, seed):
    """
    Balanced 4-cycle detection dataset of 16-node 2-regular graphs.

    Each pair holds one disjoint union of cycles containing a C4 (label 1)
    and one without (label 0). All graphs are 2-regular on 16 nodes, so
    every pair is 1-WL indistinguishable.

    params:
        count: Number of graphs, even
        seed: Generator seed

    returns:
        LabeledDataset with pair ids
    """
    if count % 2:
        raise ConfigError(f"gen_four_cycles needs an even count, got {count}")
    rng = np.random.default_rng(seed)
    partitions = [p for p in _partitions(FOUR_CYCLES_NODES, 4)]
    with_four = [p for p in partitions if 4 in p]
    without_four = [p for p in partitions if 4 not in p]
    items, pair_ids = [], []
    for pair in range(count // 2):
        positive = with_four[rng.integers(len(with_four))]
        negative = without_four[rng.integers(len(without_four))]
        items.append((_cycle_union(positive, rng), 1))
        items.append((_cycle_union(negative, rng), 0))
        pair_ids.extend([pair, pair])
    logger.info(f"Generated four-cycles dataset: {count} graphs, seed {seed}")
    return LabeledDataset(items, 2, 'four-cycles', seed, pair_ids)


def csl_graph(skip, node_count=CSL_NODES):
    edges = set()
    for i in range(node_count):
        for j in ((i + 1) % node_count, (i + skip) % node_count):
            edges.add((min(i, j), max(i, j)))
    return Graph.from_edges(node_count, sorted(edges), uniform_features(node_count))


def gen_csl(seed, per_class=15):
    """
    Circular skip link dataset: 10 classes of 41-node cycles with chords.

    params:
        seed: Generator seed for the node relabelings
        per_class: Graphs per skip length

    returns:
        LabeledDataset where class c uses skip length CSL_SKIPS[c]
    """
    rng = np.random.default_rng(seed)
    items = []
    for label, skip in enumerate(CSL_SKIPS):
        base = csl_graph(skip)
        for _ in range(per_class):
            items.append((base.relabel(rng.permutation(CSL_NODES)), label))
    logger.info(f"Generated CSL dataset: {len(items)} graphs, seed {seed}")
    return LabeledDataset(items, len(CSL_SKIPS), 'csl', seed, metadata={'skips': list(CSL_SKIPS)})


def rook_graph():
    edges = [
        (4 * r1 + c1, 4 * r2 + c2)
        for r1 in range(4) for c1 in range(4)
        for r2 in range(4) for c2 in range(4)
        if (r1 == r2) != (c1 == c2) and 4 * r1 + c1 < 4 * r2 + c2
    ]
    return Graph.from_edges(16, edges, uniform_features(16))


def shrikhande_graph():
    connection = [(1, 0), (3, 0), (0, 1), (0, 3), (1, 1), (3, 3)]
    edges = set()
    for a in range(4):
        for b in range(4):
            for da, db in connection:
                u, v = 4 * a + b, 4 * ((a + da) % 4) + (b + db) % 4
                edges.add((min(u, v), max(u, v)))
    return Graph.from_edges(16, sorted(edges), uniform_features(16))


def gen_two_wl_pair(seed=0):
    """Rook's 4x4 graph (label 0) and the Shrikhande graph (label 1)."""
    return LabeledDataset([(rook_graph(), 0), (shrikhande_graph(), 1)], 2, 'two-wl', seed)


def ladder_graph(cells, crossed_cells=()):
    """
    2 x (cells+1) ladder; rail nodes 0..cells on top and cells+1.. on the bottom.

    A crossed cell j gets both diagonals of the square between rungs j and j+1.
    """
    width = cells + 1
    edges = [(i, width + i) for i in range(width)]
    edges += [(i, i + 1) for i in range(cells)]
    edges += [(width + i, width + i + 1) for i in range(cells)]
    for j in crossed_cells:
        edges += [(j, width + j + 1), (j + 1, width + j)]
    return Graph.from_edges(2 * width, edges, uniform_features(2 * width))


def gen_ladder(cells, seed, pairs=50, crossed_density=0.5, crossed_count=None):
    """
    Plain ladders (label 0) paired with crossed ladders (label 1).

    params:
        cells: Number of ladder cells, at least 2
        seed: Generator seed
        pairs: Number of (plain, crossed) pairs
        crossed_density: Fraction of crossed cells in density mode
        crossed_count: Exact number of crossed cells; overrides the density mode

    returns:
        LabeledDataset with pair ids

    raises:
        ConfigError: If cells < 2 or more cells are crossed than exist
    """
    if cells < 2:
        raise ConfigError(f"Ladder needs at least 2 cells, got {cells}")
    if crossed_count is not None and crossed_count > cells:
        raise ConfigError(f"Cannot cross {crossed_count} of {cells} cells")
    rng = np.random.default_rng(seed)
    plain = ladder_graph(cells)
    items, pair_ids, crossed_sizes = [], [], []
    for pair in range(pairs):
        if crossed_count is not None:
            k = crossed_count
        else:
            expected = crossed_density * cells
            k = int(np.floor(expected)) + int(rng.random() < expected - np.floor(expected))
        chosen = sorted(rng.choice(cells, size=k, replace=False).tolist())
        items.append((plain, 0))
        items.append((ladder_graph(cells, chosen), 1))
        pair_ids.extend([pair, pair])
        crossed_sizes.append(k)
    mode = 'count' if crossed_count is not None else 'density'
    logger.info(f"Generated ladder dataset: {cells} cells, mode {mode}, {pairs} pairs, seed {seed}")
    return LabeledDataset(
        items, 2, 'ladder', seed, pair_ids,
        metadata={'cells': cells, 'mode': mode, 'crossed_per_pair': crossed_sizes},
    )


@dataclass
class Theorem8Layout:
    """
    Bookkeeping for one graph of the one-way-tree construction.

    params:
        hub: Hub node id, or None for the copies graph
        levels: Level symbol per node (0 = hub / padding)
        roles: Per node 'hub', 'primary', 'secondary' or 'padding'
        branch: Primary tree index per node (-1 for hub and padding)
        component: Connected component index per node
    """

    hub: object
    levels: np.ndarray
    roles: list
    branch: np.ndarray
    component: np.ndarray


@dataclass
class Theorem8Pair:
    g1: Graph
    g2: Graph
    layout1: Theorem8Layout
    layout2: Theorem8Layout
    b: int
    h1: int
    h2: int
    branching: int
    equalized: bool

    def __iter__(self):
        yield self.g1
        yield self.g2


def _hub_graph(b, h1, h2, branching, secondary_branches):
    levels, roles, branch, edges = [0], ['hub'], [-1], []
    next_id = 1
    for tree in range(b):
        root = next_id
        tree_edges, tree_levels, leaves = _tree_edges(branching, h1, offset=root)
        edges.append((0, root))
        edges.extend(tree_edges)
        levels.extend(tree_levels)
        roles.extend(['primary'] * len(tree_levels))
        branch.extend([tree] * len(tree_levels))
        next_id += len(tree_levels)
        if tree in secondary_branches:
            sec_root = next_id
            sec_edges, sec_levels, _ = _tree_edges(branching, h2, offset=sec_root)
            edges.append((leaves[0], sec_root))
            edges.extend(sec_edges)
            levels.extend(sec_levels)
            roles.extend(['secondary'] * len(sec_levels))
            branch.extend([tree] * len(sec_levels))
            next_id += len(sec_levels)
    return next_id, edges, levels, roles, branch


def _one_hot_levels(levels, alphabet):
    features = np.zeros((len(levels), alphabet))
    features[np.arange(len(levels)), levels] = 1.0
    return features


def _layout(hub, levels, roles, branch, component):
    return Theorem8Layout(
        hub=hub,
        levels=np.asarray(levels, dtype=np.int64),
        roles=list(roles),
        branch=np.asarray(branch, dtype=np.int64),
        component=np.asarray(component, dtype=np.int64),
    )


def gen_theorem8_pair(b, h1, h2, branching, equalized=False):
    """
    Hub-and-trees pair separating two agents from one.

    G1 attaches a secondary tree of depth h2 to one leaf of every primary
    tree; G2 does so for the first primary tree only. With `equalized`,
    the pair becomes (G1 plus a padding path, b disjoint copies of G2),
    which have equal size and b secondary trees each.

    params:
        b: Number of primary trees, at least 2
        h1: Primary tree depth
        h2: Secondary tree depth, larger than h1
        branching: Children per internal tree node
        equalized: Apply the size equalization

    returns:
        Theorem8Pair, iterable as (G1, G2)
    """
    if b < 2 or h2 <= h1 or h1 < 1 or branching < 2:
        raise ConfigError(f"Invalid one-way-tree pair sizes b={b}, h1={h1}, h2={h2}, branching={branching}")
    total = 1 + b * (tree_size(branching, h1) + tree_size(branching, h2))
    if total * (b if equalized else 1) > TREE_NODE_BUDGET:
        raise BudgetExceeded(f"Construction with {total} nodes per graph exceeds budget", {'size': total})
    alphabet = max(h1, h2) + 1
    n1, e1, lv1, ro1, br1 = _hub_graph(b, h1, h2, branching, set(range(b)))
    n2, e2, lv2, ro2, br2 = _hub_graph(b, h1, h2, branching, {0})
    if not equalized:
        g1 = Graph.from_edges(n1, e1, _one_hot_levels(lv1, alphabet))
        g2 = Graph.from_edges(n2, e2, _one_hot_levels(lv2, alphabet))
        return Theorem8Pair(
            g1, g2, _layout(0, lv1, ro1, br1, [0] * n1), _layout(0, lv2, ro2, br2, [0] * n2),
            b, h1, h2, branching, False,
        )
    padding = (b - 1) * (1 + b * tree_size(branching, h1))
    pad_edges = [(n1 + i, n1 + i + 1) for i in range(padding - 1)]
    g1 = Graph.from_edges(n1 + padding, e1 + pad_edges, _one_hot_levels(lv1 + [0] * padding, alphabet))
    layout1 = _layout(
        0, lv1 + [0] * padding, ro1 + ['padding'] * padding, br1 + [-1] * padding,
        [0] * n1 + [1] * padding,
    )
    base = Graph.from_edges(n2, e2, _one_hot_levels(lv2, alphabet))
    g2, offsets = disjoint_union([base] * b)
    layout2 = _layout(
        None, lv2 * b, ro2 * b,
        [x if x < 0 else x + copy * b for copy in range(b) for x in br2],
        [copy for copy in range(b) for _ in range(n2)],
    )
    logger.info(f"Built equalized one-way-tree pair with {g1.node_count} nodes per graph")
    return Theorem8Pair(g1, g2, layout1, layout2, b, h1, h2, branching, True)


def gen_lemma4_pair():
    """
    The two degree-3 gadgets around v = 0.

    G1: a triangle (v, v1, v2) plus a path v - v3 - v3'.
    G2: three paths of length 2 leaving v.
    """
    g1 = Graph.from_edges(5, [(0, 1), (0, 2), (0, 3), (1, 2), (3, 4)], uniform_features(5))
    g2 = Graph.from_edges(7, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 5), (3, 6)], uniform_features(7))
    return g1, g2


def gen_lemma7_pair(path_length, fan_size):
    """
    Path with a fan of distractor nodes on its first node.

    Path nodes 0..path_length-1 carry feature 0 and fan nodes carry feature 1.
    The far endpoint carries feature 1 in G1 and 0 in G2.
    """
    if path_length < 2 or fan_size < 1:
        raise ConfigError(f"Invalid path construction sizes {path_length}, {fan_size}")
    n = path_length + fan_size
    edges = [(i, i + 1) for i in range(path_length - 1)]
    edges += [(0, path_length + j) for j in range(fan_size)]
    symbols = [0] * path_length + [1] * fan_size
    g2 = Graph.from_edges(n, edges, _one_hot_levels(symbols, 2))
    symbols[path_length - 1] = 1
    g1 = Graph.from_edges(n, edges, _one_hot_levels(symbols, 2))
    return g1, g2


def gen_lemma8_pair(component_size):
    """
    Two graphs of two equal cycles; only G2's second cycle has feature 1.
    """
    if component_size < 3:
        raise ConfigError(f"Cycle components need at least 3 nodes, got {component_size}")
    m = component_size
    edges = [(i, (i + 1) % m) for i in range(m)] + [(m + i, m + (i + 1) % m) for i in range(m)]
    g1 = Graph.from_edges(2 * m, edges, _one_hot_levels([0] * (2 * m), 2))
    g2 = Graph.from_edges(2 * m, edges, _one_hot_levels([0] * m + [1] * m, 2))
    return g1, g2


def random_graph(node_count, max_degree, edge_probability, rng):
    """Random simple graph whose degrees never exceed `max_degree`."""
    degree = np.zeros(node_count, dtype=np.int64)
    edges = []
    pairs = [(u, v) for u in range(node_count) for v in range(u + 1, node_count)]
    for index in rng.permutation(len(pairs)):
        u, v = pairs[index]
        if degree[u] < max_degree and degree[v] < max_degree and rng.random() < edge_probability:
            edges.append((u, v))
            degree[u] += 1
            degree[v] += 1
    return Graph.from_edges(node_count, edges, uniform_features(node_count))


def random_connected_graph(node_count, max_degree, extra_edges, rng):
    """Random spanning tree under the degree cap plus up to `extra_edges` chords."""
    degree = np.zeros(node_count, dtype=np.int64)
    edges = set()
    for v in range(1, node_count):
        candidates = [u for u in range(v) if degree[u] < max_degree]
        u = int(candidates[rng.integers(len(candidates))])
        edges.add((u, v))
        degree[u] += 1
        degree[v] += 1
    for _ in range(extra_edges):
        u, v = sorted(int(x) for x in rng.choice(node_count, size=2, replace=False))
        if (u, v) not in edges and degree[u] < max_degree and degree[v] < max_degree:
            edges.add((u, v))
            degree[u] += 1
            degree[v] += 1
    return Graph.from_edges(node_count, sorted(edges), uniform_features(node_count))


def _pair_dataset(name, g1, g2, seed, metadata=None):
    return LabeledDataset([(g1, 0), (g2, 1)], 2, name, seed, metadata=metadata or {})


def build_dataset(family, params=None, seed=0):
    """
    Build a dataset by family name.

    params:
        family: One of DATASET_FAMILIES
        params: Generator keyword arguments
        seed: Generator seed

    returns:
        LabeledDataset; two-graph constructions are labelled 0 and 1 in order

    raises:
        ConfigError: On an unknown family or bad parameters
    """
    params = dict(params or {})
    try:
        if family == 'four-cycles':
            return gen_four_cycles(params.get('count', 200), seed)
        if family == 'csl':
            return gen_csl(seed, **params)
        if family == 'two-wl':
            return gen_two_wl_pair(seed)
        if family == 'ladder':
            return gen_ladder(params.pop('cells', 7), seed, **params)
        if family == 'theorem8':
            pair = gen_theorem8_pair(
                params.get('b', 10), params.get('h1', 4), params.get('h2', 8),
                params.get('branching', 3), params.get('equalized', False),
            )
            return _pair_dataset('theorem8', pair.g1, pair.g2, seed, params)
        if family == 'lemma4':
            return _pair_dataset('lemma4', *gen_lemma4_pair(), seed)
        if family == 'lemma7':
            return _pair_dataset('lemma7', *gen_lemma7_pair(params.get('path_length', 8), params.get('fan_size', 64)), seed, params)
        if family == 'lemma8':
            return _pair_dataset('lemma8', *gen_lemma8_pair(params.get('component_size', 8)), seed, params)
    except TypeError as e:
        raise ConfigError(f"Bad parameters for dataset family {family}: {e}")
    raise ConfigError(f"Unknown dataset family {family}", {'family': family})


DATASET_FAMILIES = ('four-cycles', 'csl', 'two-wl', 'ladder', 'theorem8', 'lemma4', 'lemma7', 'lemma8')


def split_dataset(dataset, test_fraction, seed):
    """
    Train/test split that respects the family's grouping.

    Two-graph expressiveness pairs train and test on the same graphs; datasets
    with pair ids split whole pairs; everything else is stratified by class.

    returns:
        (train, test) LabeledDatasets
    """
    if dataset.name == 'two-wl' or len(dataset) <= 2:
        return dataset, dataset
    rng = np.random.default_rng(seed)
    if dataset.pair_ids is not None:
        groups = sorted(set(dataset.pair_ids))
        order = rng.permutation(len(groups))
        test_groups = {groups[i] for i in order[: max(1, int(round(test_fraction * len(groups))))]}
        test = [i for i, pid in enumerate(dataset.pair_ids) if pid in test_groups]
        train = [i for i, pid in enumerate(dataset.pair_ids) if pid not in test_groups]
    else:
        train, test = [], []
        labels = np.array(dataset.labels)
        for label in range(dataset.class_count):
            members = np.flatnonzero(labels == label)
            members = members[rng.permutation(len(members))]
            cut = max(1, int(round(test_fraction * len(members))))
            test.extend(members[:cut].tolist())
            train.extend(members[cut:].tolist())
        train.sort()
        test.sort()
    return dataset.subset(train, f"{dataset.name}-train"), dataset.subset(test, f"{dataset.name}-test")


def wl_distinguishable_groups(dataset):
    """
    Groups whose differently-labelled members 1-WL color refinement can tell apart.

    Groups are the pair ids, or the whole dataset for two-graph constructions.
    An empty result certifies that no message-passing network bounded by
    1-WL can solve the dataset pair by pair.

    returns:
        Sorted list of offending group ids (0 for a two-graph dataset)
    """
    if dataset.pair_ids is not None:
        groups = {}
        for i, pid in enumerate(dataset.pair_ids):
            groups.setdefault(pid, []).append(i)
    elif len(dataset) == 2:
        groups = {0: [0, 1]}
    else:
        return []
    offending = []
    for pid, members in sorted(groups.items()):
        if any(
            dataset.items[a][1] != dataset.items[b][1]
            and not one_wl_equivalent(dataset.items[a][0], dataset.items[b][0])
            for a, b in itertools.combinations(members, 2)
        ):
            offending.append(pid)
    return offending
