"""
Graph Core Module

This module contains the graph representation every agent walks on, together
with the exact brute-force oracles that serve as ground truth for counting and
isomorphism claims: r-hop balls, clique and cycle counts through a node,
anchored pattern occurrences, small-graph isomorphism and 1-WL equivalence.

Graphs are undirected, simple, and carry a dense real feature vector per node.
They are immutable after construction and serialize to a line-oriented text
format (header `n d`, one feature line per node, one `u v` line per edge).
"""

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
import logging

import networkx as nx
from networkx.algorithms import isomorphism
import numpy as np

from .exceptions import BudgetExceeded, GraphError

logger = logging.getLogger(__name__)

PATTERN_NODE_BUDGET = 10
ISOMORPHISM_NODE_BUDGET = 24


class Graph:
    """
    Undirected simple graph with per-node feature vectors.

    Adjacency lists are sorted and ids are contiguous integers, so iteration
    order is deterministic everywhere downstream.

    params:
        adjacency: Sequence of neighbor-id sequences, one per node
        node_features: Array-like of shape (n, d) with d >= 1; defaults to a
            single constant feature per node
    """

    def __init__(self, adjacency, node_features=None):
        self.adjacency = tuple(tuple(sorted(int(u) for u in nbrs)) for nbrs in adjacency)
        self.node_count = len(self.adjacency)
        if node_features is None:
            node_features = np.ones((self.node_count, 1))
        features = np.array(node_features, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.ndim != 2 or features.shape[0] != self.node_count or features.shape[1] < 1:
            raise GraphError(
                f"Feature array of shape {features.shape} does not match {self.node_count} nodes",
                {'shape': list(features.shape), 'node_count': self.node_count},
            )
        features.flags.writeable = False
        self.node_features = features
        self._validate()
        self.max_degree = max((len(nbrs) for nbrs in self.adjacency), default=0)

    @classmethod
    def from_edges(cls, node_count, edges, node_features=None):
        """
        Build a graph from an edge list.

        params:
            node_count: Number of nodes n
            edges: Iterable of (u, v) pairs, each undirected edge listed once
            node_features: Optional (n, d) feature array

        returns:
            Graph instance

        raises:
            GraphError: On self-loops, duplicate edges or out-of-range ids
        """
        adjacency = [[] for _ in range(node_count)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise GraphError(f"Edge ({u}, {v}) out of range for {node_count} nodes")
            adjacency[u].append(v)
            adjacency[v].append(u)
        return cls(adjacency, node_features)

    def _validate(self):
        for i, nbrs in enumerate(self.adjacency):
            if len(set(nbrs)) != len(nbrs):
                raise GraphError(f"Node {i} has duplicate neighbors", {'node': i})
            for j in nbrs:
                if j == i:
                    raise GraphError(f"Node {i} has a self-loop", {'node': i})
                if not 0 <= j < self.node_count:
                    raise GraphError(f"Node {i} points to missing node {j}", {'node': i})
                if i not in self.neighbor_sets[j]:
                    raise GraphError(f"Adjacency is not symmetric at ({i}, {j})")

    @cached_property
    def neighbor_sets(self):
        return tuple(frozenset(nbrs) for nbrs in self.adjacency)

    @cached_property
    def csr(self):
        """Compressed adjacency as (indptr, indices) integer arrays."""
        degrees = np.array([len(nbrs) for nbrs in self.adjacency], dtype=np.int64)
        indptr = np.zeros(self.node_count + 1, dtype=np.int64)
        np.cumsum(degrees, out=indptr[1:])
        indices = np.fromiter(
            (j for nbrs in self.adjacency for j in nbrs), dtype=np.int64, count=int(indptr[-1])
        )
        return indptr, indices

    @cached_property
    def nx_graph(self):
        """networkx view with a hashable `feature` attribute on every node."""
        graph = nx.Graph()
        for i in range(self.node_count):
            graph.add_node(i, feature=self.feature_key(i))
        graph.add_edges_from(self.edges())
        return graph

    @property
    def feature_dim(self):
        return self.node_features.shape[1]

    def feature_key(self, i):
        return tuple(float(x) for x in self.node_features[i])

    def neighbors(self, i):
        self.check_node(i)
        return self.adjacency[i]

    def degree(self, i):
        return len(self.neighbors(i))

    def has_edge(self, u, v):
        return v in self.neighbor_sets[u]

    def edges(self):
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if u < v:
                    yield (u, v)

    @property
    def edge_count(self):
        return sum(len(nbrs) for nbrs in self.adjacency) // 2

    def check_node(self, i):
        if not 0 <= int(i) < self.node_count:
            raise GraphError(f"Node id {i} out of range for {self.node_count} nodes", {'node': int(i)})

    def degree_histogram(self):
        hist = {}
        for nbrs in self.adjacency:
            hist[len(nbrs)] = hist.get(len(nbrs), 0) + 1
        return dict(sorted(hist.items()))

    def relabel(self, permutation):
        """
        Apply a node permutation: old node i becomes permutation[i].

        params:
            permutation: Sequence holding a bijection of range(n)

        returns:
            New Graph with edges and features moved accordingly
        """
        perm = np.asarray(permutation, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.node_count)):
            raise GraphError("Relabeling is not a permutation of the node ids")
        features = np.empty_like(self.node_features)
        features[perm] = self.node_features
        edges = [(perm[u], perm[v]) for u, v in self.edges()]
        return Graph.from_edges(self.node_count, edges, features)

    def with_features(self, node_features):
        return Graph(self.adjacency, node_features)

    def induced_subgraph(self, nodes):
        """
        Induced subgraph on `nodes`; node nodes[k] becomes k.

        returns:
            (Graph, mapping) where mapping[k] is the original id of new node k
        """
        mapping = [int(u) for u in nodes]
        index = {u: k for k, u in enumerate(mapping)}
        edges = [
            (index[u], index[w])
            for u in mapping for w in self.adjacency[u]
            if w in index and index[u] < index[w]
        ]
        return Graph.from_edges(len(mapping), edges, self.node_features[mapping]), mapping

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.adjacency == other.adjacency and np.array_equal(self.node_features, other.node_features)

    def __hash__(self):
        return hash((self.adjacency, self.node_features.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.node_count}, m={self.edge_count}, d={self.feature_dim})"

    #serialization

    def to_text(self):
        lines = [f"{self.node_count} {self.feature_dim}"]
        for row in self.node_features:
            lines.append(' '.join(format(float(x), '.17g') for x in row))
        lines.extend(f"{u} {v}" for u, v in self.edges())
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text):
        """
        Parse the line-oriented text format.

        raises:
            GraphError: If the header, feature lines or edge lines are malformed
        """
        lines = [line.strip() for line in text.splitlines() if line.strip() and not line.startswith('#')]
        try:
            n, d = (int(x) for x in lines[0].split())
            features = np.array([[float(x) for x in lines[1 + i].split()] for i in range(n)], dtype=np.float64)
            edges = [tuple(int(x) for x in line.split()) for line in lines[1 + n:]]
        except (IndexError, ValueError) as e:
            raise GraphError(f"Malformed graph text: {e}")
        if n and features.shape != (n, d):
            raise GraphError(f"Expected {n} feature lines of width {d}")
        if any(len(edge) != 2 for edge in edges):
            raise GraphError("Edge lines must hold exactly two node ids")
        return cls.from_edges(n, edges, features if n else np.zeros((0, d)))

    def to_dict(self):
        return {
            'n': self.node_count,
            'd': self.feature_dim,
            'features': self.node_features.tolist(),
            'edges': [list(edge) for edge in self.edges()],
        }

    @classmethod
    def from_dict(cls, data):
        features = np.array(data['features'], dtype=np.float64).reshape(data['n'], data['d'])
        return cls.from_edges(data['n'], data['edges'], features)


def uniform_features(node_count):
    return np.ones((node_count, 1))


def disjoint_union(graphs):
    """
    Disjoint union with node ids offset graph by graph.

    returns:
        (Graph, offsets) where offsets[i] is the first id of graphs[i]
    """
    graphs = list(graphs)
    dims = {g.feature_dim for g in graphs}
    if len(dims) > 1:
        raise GraphError(f"Cannot unite graphs with feature dims {sorted(dims)}")
    offsets, edges, total = [], [], 0
    for g in graphs:
        offsets.append(total)
        edges.extend((u + total, v + total) for u, v in g.edges())
        total += g.node_count
    features = np.concatenate([g.node_features for g in graphs], axis=0) if graphs else np.zeros((0, 1))
    return Graph.from_edges(total, edges, features), offsets


def mark_node(g, node):
    """Append an indicator feature column that is 1 only at `node`."""
    column = np.zeros((g.node_count, 1))
    column[node] = 1.0
    return g.with_features(np.concatenate([g.node_features, column], axis=1))


@dataclass(frozen=True)
class AnchoredPattern:
    """
    Connected pattern H with a distinguished anchor and a radius bound.

    params:
        pattern: The pattern graph H
        anchor: Node id v0 inside H
        radius: Every node of H lies within this distance of the anchor
        match_features: When false, node features are ignored while matching
    """

    pattern: Graph
    anchor: int
    radius: int
    match_features: bool = True

    def __post_init__(self):
        self.pattern.check_node(self.anchor)
        distances = bfs_distances(self.pattern, self.anchor)
        if len(distances) != self.pattern.node_count:
            raise GraphError("Anchored pattern must be connected")
        if max(distances.values()) > self.radius:
            raise GraphError(
                f"Pattern reaches distance {max(distances.values())} from its anchor, above radius {self.radius}"
            )

    @classmethod
    def from_edges(cls, node_count, edges, anchor=0, node_features=None, match_features=None):
        pattern = Graph.from_edges(node_count, edges, node_features)
        radius = max(bfs_distances(pattern, anchor).values())
        if match_features is None:
            match_features = node_features is not None
        return cls(pattern, anchor, radius, match_features)

    @property
    def diameter(self):
        return max(max(bfs_distances(self.pattern, u).values()) for u in range(self.pattern.node_count))


def bfs_distances(g, v, cutoff=None):
    """Map node -> hop distance from v for every node within `cutoff`."""
    g.check_node(v)
    return dict(nx.single_source_shortest_path_length(g.nx_graph, v, cutoff=cutoff))


def r_hop_neighborhood(g, v, r):
    """
    Subgraph induced by all nodes at distance at most r from v.

    The start node becomes node 0; the remaining nodes are ordered by
    (distance, original id).

    params:
        g: Host graph
        v: Center node id
        r: Radius, r >= 0

    returns:
        (Graph, mapping) with mapping[k] the original id of node k

    raises:
        GraphError: If v is out of range or r is negative
    """
    if r < 0:
        raise GraphError(f"Radius must be non-negative, got {r}")
    distances = bfs_distances(g, v, cutoff=r)
    nodes = sorted(distances, key=lambda u: (distances[u], u))
    return g.induced_subgraph(nodes)


def count_cliques_at(g, v, size):
    """
    Number of cliques with exactly `size` nodes that contain v.

    Only subsets of N(v) are enumerated, since every clique through v lies
    in N(v) and v.
    """
    g.check_node(v)
    if size < 2:
        raise GraphError(f"Clique size must be at least 2, got {size}")
    neighbors = g.adjacency[v]
    count = 0
    for subset in combinations(neighbors, size - 1):
        if all(g.has_edge(a, b) for a, b in combinations(subset, 2)):
            count += 1
    return count


def clique_profile_at(g, v, max_size=None):
    """
    Clique counts through v keyed by size, from 3 up to `max_size`.

    When `max_size` is omitted the profile stops at the largest clique size
    through v, so only size 3 may be zero.
    """
    if max_size is None:
        max_size = 3
        while count_cliques_at(g, v, max_size + 1) > 0:
            max_size += 1
    return {size: count_cliques_at(g, v, size) for size in range(3, max_size + 1)}


def count_cliques(g, size):
    """Global number of `size`-cliques, enumerated by networkx."""
    return sum(1 for clique in nx.enumerate_all_cliques(g.nx_graph) if len(clique) == size)


def count_cycles_through(g, v, c):
    """
    Number of simple cycles of length c passing through v.

    Paths are grown from v and closed back at v; each cycle is kept in the
    orientation whose second node has the smaller id, so it counts once.
    """
    g.check_node(v)
    if c < 3:
        raise GraphError(f"Cycle length must be at least 3, got {c}")
    count = 0
    path = [v]
    on_path = {v}

    def extend(u):
        nonlocal count
        if len(path) == c:
            if g.has_edge(u, v) and path[1] < path[-1]:
                count += 1
            return
        for w in g.adjacency[u]:
            if w not in on_path:
                path.append(w)
                on_path.add(w)
                extend(w)
                path.pop()
                on_path.discard(w)

    extend(v)
    return count


def count_cycles(g, c):
    """
    Global number of simple c-cycles.

    Each cycle is rooted at its minimal node id and taken in the orientation
    whose second node is smaller than its last.
    """
    if c < 3:
        raise GraphError(f"Cycle length must be at least 3, got {c}")
    count = 0
    for start in range(g.node_count):
        path = [start]
        on_path = {start}

        def extend(u):
            nonlocal count
            if len(path) == c:
                if g.has_edge(u, start) and path[1] < path[-1]:
                    count += 1
                return
            for w in g.adjacency[u]:
                if w > start and w not in on_path:
                    path.append(w)
                    on_path.add(w)
                    extend(w)
                    path.pop()
                    on_path.discard(w)

        extend(start)
    return count


def _node_match(match_features):
    def match(a, b):
        if a.get('anchor', False) != b.get('anchor', False):
            return False
        return not match_features or a['feature'] == b['feature']
    return match


def _anchored_nx(g, anchor):
    graph = g.nx_graph.copy()
    nx.set_node_attributes(graph, False, 'anchor')
    graph.nodes[anchor]['anchor'] = True
    return graph


def count_anchored_occurrences(g, v, p, raw=False):
    """
    Count induced occurrences of an anchored pattern around v.

    The search runs on the r-hop ball of v (every copy with the anchor at v
    lies inside it) using networkx's VF2 induced-subgraph matcher.

    params:
        g: Host graph
        v: Node the anchor must map to
        p: AnchoredPattern with at most PATTERN_NODE_BUDGET nodes
        raw: Return raw embeddings instead of dividing by anchored automorphisms

    returns:
        Number of occurrences

    raises:
        BudgetExceeded: If the pattern has more than PATTERN_NODE_BUDGET nodes
    """
    if p.pattern.node_count > PATTERN_NODE_BUDGET:
        raise BudgetExceeded(
            f"Pattern has {p.pattern.node_count} nodes, budget is {PATTERN_NODE_BUDGET}",
            {'pattern_nodes': p.pattern.node_count, 'budget': PATTERN_NODE_BUDGET},
        )
    ball, _ = r_hop_neighborhood(g, v, p.radius)
    host = _anchored_nx(ball, 0)
    pattern = _anchored_nx(p.pattern, p.anchor)
    match = _node_match(p.match_features)
    embeddings = sum(
        1 for _ in isomorphism.GraphMatcher(host, pattern, node_match=match).subgraph_isomorphisms_iter()
    )
    if raw:
        return embeddings
    automorphisms = sum(
        1 for _ in isomorphism.GraphMatcher(pattern, pattern, node_match=match).isomorphisms_iter()
    )
    return embeddings // automorphisms


def incident_nodes(g, p):
    """Set of nodes of g that belong to at least one induced copy of the pattern."""
    if p.pattern.node_count > PATTERN_NODE_BUDGET:
        raise BudgetExceeded(f"Pattern has {p.pattern.node_count} nodes, budget is {PATTERN_NODE_BUDGET}")
    match = (lambda a, b: a['feature'] == b['feature']) if p.match_features else None
    matcher = isomorphism.GraphMatcher(g.nx_graph, p.pattern.nx_graph, node_match=match)
    covered = set()
    for mapping in matcher.subgraph_isomorphisms_iter():
        covered.update(mapping)
    return covered


def gamma_h(g, p):
    """Number of nodes incident to at least one induced copy of the pattern."""
    return len(incident_nodes(g, p))


def is_isomorphic_small(g1, g2):
    """
    Feature-preserving isomorphism test for graphs of at most 24 nodes.

    Cheap invariants (sizes, degree multiset, feature multiset) are compared
    first; the remaining cases go to networkx's VF2 backtracking matcher.

    raises:
        BudgetExceeded: If either graph exceeds ISOMORPHISM_NODE_BUDGET nodes
    """
    for g in (g1, g2):
        if g.node_count > ISOMORPHISM_NODE_BUDGET:
            raise BudgetExceeded(
                f"Isomorphism oracle is limited to {ISOMORPHISM_NODE_BUDGET} nodes, got {g.node_count}",
                {'node_count': g.node_count, 'budget': ISOMORPHISM_NODE_BUDGET},
            )
    if g1.node_count != g2.node_count or g1.edge_count != g2.edge_count:
        return False
    if g1.feature_dim != g2.feature_dim:
        return False
    if sorted(len(a) for a in g1.adjacency) != sorted(len(a) for a in g2.adjacency):
        return False
    if sorted(map(g1.feature_key, range(g1.node_count))) != sorted(map(g2.feature_key, range(g2.node_count))):
        return False
    return nx.is_isomorphic(g1.nx_graph, g2.nx_graph, node_match=lambda a, b: a['feature'] == b['feature'])


def wl_hash(g, iterations=None):
    """
    Weisfeiler-Lehman (1-WL color refinement) hash of a featured graph.

    params:
        g: Graph to hash
        iterations: Refinement rounds; defaults to n, enough to reach the
            stable coloring
    """
    graph = g.nx_graph.copy()
    nx.set_node_attributes(graph, {i: repr(g.feature_key(i)) for i in range(g.node_count)}, 'label')
    rounds = iterations if iterations is not None else max(g.node_count, 1)
    return nx.weisfeiler_lehman_graph_hash(graph, node_attr='label', iterations=rounds)


def one_wl_equivalent(g1, g2):
    """True when 1-WL color refinement cannot tell the graphs apart."""
    if g1.node_count != g2.node_count:
        return False
    rounds = max(g1.node_count, 1)
    return wl_hash(g1, rounds) == wl_hash(g2, rounds)
