"""
Deterministic Agents Module

This module contains executable walk state machines for the lab's theory
results. Every walk records a TraversalTrace and asserts its proven step
bound on each call: iterative deepening DFS over an r-hop ball, DFS over a
component, clique and cycle counting walks, canonical neighborhood
fingerprints, the random walk access model, the subgraph frequency
distinguisher and the one-way-tree protocols that separate two agents from
one.

Conventions: one step is one transition (staying counts), the initial
placement is step 0, and ties between eligible neighbors go to the lowest id.
"""

from collections import Counter
from dataclasses import dataclass, field
import logging

import numpy as np

from .exceptions import BudgetExceeded, ConfigError, GraphError, TraceIncomplete, WalkBoundError
from .graphs import (
    ISOMORPHISM_NODE_BUDGET,
    Graph,
    bfs_distances,
    clique_profile_at,
    count_cycles_through,
    gamma_h,
    incident_nodes,
)

logger = logging.getLogger(__name__)


@dataclass
class TraversalTrace:
    """
    Ordered record of a deterministic walk.

    params:
        start: Start node id
        radius: Ball radius the walk explores, or None for whole components
        steps: List of (t, node, arrived_from) with arrived_from None at t = 0
        observed_edges: Edges between visited nodes, registered when the
            second endpoint is first visited
        distances: Hop distance from the start for every visited node
        features: Feature tuple seen at every visited node
        complete: False when the walk was cut short
    """

    start: int
    radius: object = None
    steps: list = field(default_factory=list)
    observed_edges: set = field(default_factory=set)
    distances: dict = field(default_factory=dict)
    features: dict = field(default_factory=dict)
    complete: bool = False

    @property
    def move_count(self):
        return max(len(self.steps) - 1, 0)

    @property
    def visit_order(self):
        """Nodes in first-visit order."""
        seen, order = set(), []
        for _, node, _ in self.steps:
            if node not in seen:
                seen.add(node)
                order.append(node)
        return order


class _TraceRecorder:
    """Builds a trace one move at a time and remembers the last discovery."""

    def __init__(self, g, start, radius=None):
        g.check_node(start)
        self.g = g
        self.trace = TraversalTrace(start=start, radius=radius)
        self.visited = set()
        self.last_discovery = 0
        self._visit(start, None, 0)

    @property
    def current(self):
        return self.trace.steps[-1][1]

    def _visit(self, node, came_from, distance):
        self.trace.steps.append((len(self.trace.steps), node, came_from))
        if node in self.visited:
            return
        for w in self.g.adjacency[node]:
            if w in self.visited:
                self.trace.observed_edges.add((min(node, w), max(node, w)))
        self.visited.add(node)
        self.trace.distances[node] = distance
        self.trace.features[node] = self.g.feature_key(node)
        self.last_discovery = len(self.trace.steps) - 1

    def move(self, node, distance=None):
        here = self.current
        if node != here and not self.g.has_edge(here, node):
            raise GraphError(f"Walk tried to jump from {here} to non-neighbor {node}")
        self._visit(node, here, distance)

    def finish(self):
        #moves after the last discovery observe nothing new
        del self.trace.steps[self.last_discovery + 1:]
        self.trace.complete = True
        return self.trace


def _check_bound(name, moves, bound):
    if moves > bound:
        raise WalkBoundError(f"{name} used {moves} moves, bound is {bound}", {'moves': moves, 'bound': bound})


def iddfs_traverse(g, v, r):
    """
    Iteratively deepening DFS over the r-hop ball of v.

    Iteration d runs a DFS from v that expands only nodes known to lie at
    distance at most d-1, moves to the lowest-id neighbor not yet visited in
    this iteration, backtracks along the iteration's predecessor links, and
    ends back at v where iteration d+1 starts. Nodes first reached in
    iteration d are at distance exactly d.

    params:
        g: Host graph
        v: Start node
        r: Radius, r >= 0

    returns:
        Complete TraversalTrace covering N^r(v)

    raises:
        WalkBoundError: If the walk exceeds 2 * r * |N^r(v)| moves
    """
    if r < 0:
        raise GraphError(f"IDDFS radius must be non-negative, got {r}")
    recorder = _TraceRecorder(g, v, radius=r)
    distance = {v: 0}
    for depth in range(1, r + 1):
        seen = {v}
        predecessor = {v: None}
        cur = v
        while True:
            nxt = None
            if distance[cur] <= depth - 1:
                for w in g.adjacency[cur]:
                    if w not in seen:
                        nxt = w
                        break
            if nxt is not None:
                seen.add(nxt)
                predecessor[nxt] = cur
                distance.setdefault(nxt, depth)
                recorder.move(nxt, distance[nxt])
                cur = nxt
            elif cur == v:
                break
            else:
                cur = predecessor[cur]
                recorder.move(cur, distance[cur])
    trace = recorder.finish()
    _check_bound('iddfs_traverse', trace.move_count, 2 * r * len(trace.distances))
    return trace


def dfs_traverse_component(g, v):
    """
    Depth-first traversal of the connected component of v.

    returns:
        Complete TraversalTrace; the component is covered in at most
        2 * n0 - 3 moves

    raises:
        GraphError: If the component has fewer than 2 nodes
        WalkBoundError: If the bound is exceeded
    """
    g.check_node(v)
    if not g.adjacency[v]:
        raise GraphError(f"Component of node {v} has a single node")
    recorder = _TraceRecorder(g, v)
    stack = [v]
    depth = {v: 0}
    while stack:
        cur = stack[-1]
        nxt = next((w for w in g.adjacency[cur] if w not in depth), None)
        if nxt is not None:
            depth[nxt] = depth[cur] + 1
            recorder.move(nxt, None)
            stack.append(nxt)
        else:
            stack.pop()
            if stack:
                recorder.move(stack[-1], None)
    trace = recorder.finish()
    #the dfs tree depth is not a hop distance; fill in true distances
    trace.distances = _trace_distances(g, v, trace.visit_order)
    _check_bound('dfs_traverse_component', trace.move_count, 2 * len(depth) - 3)
    return trace


def _trace_distances(g, v, nodes):
    distances = bfs_distances(g, v)
    return {u: distances[u] for u in nodes}


def reconstruct_neighborhood(trace):
    """
    Rebuild the explored subgraph from a trace alone.

    returns:
        (Graph, mapping) where node 0 is the start and mapping[k] is the host id

    raises:
        TraceIncomplete: If the trace was cut short
    """
    if not trace.complete:
        raise TraceIncomplete(f"Trace from node {trace.start} is incomplete", {'start': trace.start})
    order = trace.visit_order
    index = {u: k for k, u in enumerate(order)}
    edges = [(index[a], index[b]) for a, b in sorted(trace.observed_edges)]
    features = np.array([trace.features[u] for u in order], dtype=np.float64)
    return Graph.from_edges(len(order), edges, features), order


@dataclass
class CliqueWalkResult:
    counts: dict
    steps: int


def clique_count_walk(g, v, max_size=None):
    """
    Count cliques through v with the alternating 1-hop walk.

    The agent alternates between an unvisited neighbor of v and v itself,
    registers every adjacency it sees, and counts cliques on the
    reconstructed 1-hop subgraph.

    returns:
        CliqueWalkResult with counts keyed by clique size and moves used
        (at most 2 * deg(v) - 1)
    """
    trace = iddfs_traverse(g, v, 1)
    _check_bound('clique_count_walk', trace.move_count, max(2 * g.degree(v) - 1, 0))
    local, _ = reconstruct_neighborhood(trace)
    return CliqueWalkResult(clique_profile_at(local, 0, max_size), trace.move_count)


@dataclass
class CycleWalkResult:
    count: int
    steps: int


def cycle_count_walk(g, v, c):
    """
    Count c-cycles through v from an IDDFS trace of radius floor(c/2).

    returns:
        CycleWalkResult with the count and the moves used
    """
    if c < 3:
        raise GraphError(f"Cycle length must be at least 3, got {c}")
    r = c // 2
    trace = iddfs_traverse(g, v, r)
    local, _ = reconstruct_neighborhood(trace)
    return CycleWalkResult(count_cycles_through(local, 0, c), trace.move_count)


def _refine(adjacency, colors):
    """Color refinement to the coarsest equitable partition finer than `colors`."""
    cells = len(set(colors))
    while True:
        signatures = [
            (colors[u], tuple(sorted(colors[w] for w in adjacency[u])))
            for u in range(len(adjacency))
        ]
        ranks = {sig: i for i, sig in enumerate(sorted(set(signatures)))}
        colors = [ranks[sig] for sig in signatures]
        if len(ranks) == cells:
            return colors
        cells = len(ranks)


def canonical_code(g, root=None):
    """
    Canonical byte code of a small featured graph.

    Individualization-refinement: refine the (root, feature, degree)
    coloring, branch on every node of the first non-singleton cell, and keep
    the lexicographically smallest code among the discrete leaves. Two graphs
    get equal codes iff they are isomorphic (root-preserving when a root is
    given).

    raises:
        BudgetExceeded: If the graph has more than ISOMORPHISM_NODE_BUDGET nodes
    """
    n = g.node_count
    if n > ISOMORPHISM_NODE_BUDGET:
        raise BudgetExceeded(f"Canonical labeling is limited to {ISOMORPHISM_NODE_BUDGET} nodes, got {n}")
    adjacency = g.adjacency
    keys = [(0 if u == root else 1, g.feature_key(u), len(adjacency[u])) for u in range(n)]
    ranks = {key: i for i, key in enumerate(sorted(set(keys)))}
    best = None
    stack = [[ranks[key] for key in keys]]
    while stack:
        colors = _refine(adjacency, stack.pop())
        sizes = Counter(colors)
        if len(sizes) == n:
            order = sorted(range(n), key=colors.__getitem__)
            bits = ''.join(
                '1' if g.has_edge(a, b) else '0'
                for i, a in enumerate(order) for b in order[i + 1:]
            )
            code = f"{n};{[keys[u][:2] for u in order]};{bits}"
            if best is None or code < best:
                best = code
            continue
        target = min(color for color, size in sizes.items() if size > 1)
        for u in reversed([u for u in range(n) if colors[u] == target]):
            stack.append([2 * target if w == u else 2 * c + 1 for w, c in enumerate(colors)])
    return best.encode()


def neighborhood_fingerprint(trace):
    """
    Canonical code of the rooted neighborhood reconstructed from an IDDFS trace.

    raises:
        TraceIncomplete: If the trace is truncated
    """
    local, _ = reconstruct_neighborhood(trace)
    return canonical_code(local, root=0)


class AccessModelSession:
    """
    Random walk access model around a moving agent.

    The agent may move to a uniformly random neighbor, ask for the degree of
    any discovered node, and ask whether two discovered nodes are adjacent.

    params:
        graph: Host graph
        start: Start node id
        rng: numpy Generator driving the moves
    """

    def __init__(self, graph, start, rng):
        graph.check_node(start)
        self.graph = graph
        self.rng = rng
        self.current = start
        self.discovered = [start]
        self._discovered_set = {start}
        self.degree_answers = {}
        self.adjacency_answers = {}
        self.step_count = 0

    def step(self):
        """Move to a uniformly random neighbor (stay on an isolated node)."""
        neighbors = self.graph.adjacency[self.current]
        if neighbors:
            self.current = neighbors[int(self.rng.integers(len(neighbors)))]
        self.step_count += 1
        if self.current not in self._discovered_set:
            self._discovered_set.add(self.current)
            self.discovered.append(self.current)
        return self.current

    def _require_discovered(self, node):
        if node not in self._discovered_set:
            raise GraphError(f"Node {node} has not been discovered yet", {'node': node})

    def degree_query(self, node=None):
        node = self.current if node is None else node
        self._require_discovered(node)
        degree = len(self.graph.adjacency[node])
        self.degree_answers[node] = degree
        return degree

    def adjacency_query(self, i, j):
        self._require_discovered(i)
        self._require_discovered(j)
        answer = i != j and self.graph.has_edge(i, j)
        self.adjacency_answers[(i, j)] = answer
        return answer


def _incidence_walk(g, v, pattern, cache):
    """Whether the agent starting at v sees itself inside a copy of the pattern."""
    if v not in cache:
        radius = pattern.diameter
        trace = iddfs_traverse(g, v, radius)
        local, _ = reconstruct_neighborhood(trace)
        cache[v] = 0 in incident_nodes(local, pattern)
    return cache[v]


def frequency_distinguisher(g1, g2, pattern, k, trials, seed, step_budget=None):
    """
    Tell two graphs apart by how many random agents sit on the pattern.

    Per trial k agents are placed independently and uniformly on each graph;
    each reports whether its start is incident to an induced copy of the
    pattern (from its own IDDFS reconstruction). A graph is called "frequent"
    when the reported sum exceeds gamma' * k, gamma' being the mean incident
    fraction of the two graphs from the oracle.

    params:
        g1, g2: Graphs to separate
        pattern: AnchoredPattern H
        k: Agents per graph
        trials: Monte Carlo trials
        seed: Root seed
        step_budget: Optional walk budget; the pattern must fit inside it

    returns:
        Fraction of trials in which both graphs were classified correctly
    """
    if step_budget is not None and pattern.diameter > step_budget:
        raise ConfigError(f"Pattern diameter {pattern.diameter} exceeds the walk budget {step_budget}")
    fractions = [gamma_h(g, pattern) / g.node_count for g in (g1, g2)]
    threshold = 0.5 * (fractions[0] + fractions[1]) * k
    high = 0 if fractions[0] >= fractions[1] else 1
    rng = np.random.default_rng(seed)
    caches = ({}, {})
    correct = 0
    for _ in range(trials):
        verdicts = []
        for index, g in enumerate((g1, g2)):
            starts = rng.integers(g.node_count, size=k)
            total = sum(_incidence_walk(g, int(v), pattern, caches[index]) for v in starts)
            verdicts.append(total > threshold)
        if verdicts[high] and not verdicts[1 - high]:
            correct += 1
    return correct / trials


@dataclass
class FrequencySweep:
    ks: list
    failure_rates: list
    slope: float


def frequency_sweep(g1, g2, pattern, ks, trials, seed):
    """
    Failure rate of the frequency distinguisher per agent count.

    The slope is a least-squares fit of log(failure) on k, with failures
    floored at half a trial so zero rates stay finite.
    """
    rates = [1.0 - frequency_distinguisher(g1, g2, pattern, k, trials, seed + i) for i, k in enumerate(ks)]
    floor = 0.5 / trials
    slope = float(np.polyfit(np.asarray(ks, dtype=float), np.log(np.maximum(rates, floor)), 1)[0])
    return FrequencySweep(list(ks), rates, slope)


def node_level(g, u):
    """Level symbol of a node: the scalar feature, or the hot index of a one-hot feature."""
    row = g.node_features[u]
    return int(row[0]) if row.shape[0] == 1 else int(np.argmax(row))


def ascent_step(g, u, came_from=None):
    """
    One root-seeking move in a hub-and-trees graph.

    From level L > 1 move to the neighbor at level L-1; from a level-1 node
    move to the hub if adjacent, otherwise (a secondary root) to its
    highest-level neighbor, the primary leaf it hangs from. Level-0 nodes
    stay put.
    """
    level = node_level(g, u)
    if level == 0:
        return u
    neighbors = g.adjacency[u]
    if level == 1:
        hub = [w for w in neighbors if node_level(g, w) == 0]
        if hub:
            return hub[0]
        if not neighbors:
            return u
        return max(neighbors, key=lambda w: (node_level(g, w), -w))
    parents = [w for w in neighbors if node_level(g, w) == level - 1 and w != came_from]
    return parents[0] if parents else u


def root_seeking_walk(g, start, budget):
    """
    Ascend a one-way tree until a level-1 node is reached.

    returns:
        Number of moves used (level - 1 from any start)
    """
    u, moves = start, 0
    while node_level(g, u) > 1 and moves < budget:
        u = ascent_step(g, u)
        moves += 1
    _check_bound('root_seeking_walk', moves, max(node_level(g, start) - 1, 0))
    return moves


@dataclass
class _Ascent:
    path: list
    from_secondary: bool
    branch_root: object


def _ascend(g, start, budget, h1):
    path, prev = [start], None
    from_secondary, branch_root = False, None
    for _ in range(budget):
        u = path[-1]
        nxt = ascent_step(g, u, prev)
        if node_level(g, u) == 1 and node_level(g, nxt) == h1:
            from_secondary = True
        if node_level(g, u) == 1 and node_level(g, nxt) == 0:
            branch_root = u
        prev = u if nxt != u else prev
        path.append(nxt)
    return _Ascent(path, from_secondary, branch_root)


def _two_agent_verdict(g, starts, budget, h1):
    """True when the pair concludes the two-secondary structure is present."""
    first, second = (_ascend(g, int(s), budget, h1) for s in starts)
    if not (first.from_secondary and second.from_secondary):
        return False
    shared = set(first.path) & set(second.path)
    return bool(shared) and all(node_level(g, u) == 0 for u in shared)


def _one_agent_verdict(g, start, budget, h1, rng):
    ascent = _ascend(g, int(start), budget, h1)
    hub_index = next((i for i, u in enumerate(ascent.path) if node_level(g, u) == 0), None)
    if hub_index is None:
        return False
    hub = ascent.path[hub_index]
    remaining = budget - hub_index
    roots = [w for w in g.adjacency[hub] if node_level(g, w) == 1 and w != ascent.branch_root]
    while roots and remaining >= h1:
        u = roots[int(rng.integers(len(roots)))]
        for level in range(2, h1 + 1):
            children = [w for w in g.adjacency[u] if node_level(g, w) == level]
            u = children[int(rng.integers(len(children)))]
        if any(node_level(g, w) == 1 for w in g.adjacency[u]):
            return True
        remaining -= 2 * h1
    return False


def expected_two_agent_rate(layout):
    """
    Probability that two uniform agents land in different secondary trees of
    one connected component, the only case where the pair answers "present".
    """
    n = len(layout.roles)
    sizes = Counter(
        (int(layout.component[u]), int(layout.branch[u]))
        for u in range(n) if layout.roles[u] == 'secondary'
    )
    per_component = {}
    for (component, _), size in sizes.items():
        per_component.setdefault(component, []).append(size / n)
    return float(sum(sum(shares) ** 2 - sum(s * s for s in shares) for shares in per_component.values()))


@dataclass
class Theorem8Result:
    success_g1: float
    success_g2: float
    success_pair: float
    expected_g1: object = None


def theorem8_protocol(pair, agents, step_budget, trials, seed):
    """
    Run the one-way-tree recognition protocol on both graphs of a pair.

    With 2 agents both start uniformly at random, ascend by the one-way-tree
    rule for `step_budget` moves, and answer "present" iff both came out of
    secondary trees and their trajectories first share the hub. With 1
    agent, the agent ascends to the hub and spends the remaining budget on
    uniform random descents into other primary trees, answering "present"
    iff a leaf with a secondary tree is found.

    params:
        pair: Theorem8Pair
        agents: 1 or 2
        step_budget: Moves per agent (h1 + h2 for the 2-agent protocol)
        trials: Monte Carlo trials per graph
        seed: Root seed

    returns:
        Theorem8Result with per-graph success and the pair mean
    """
    if agents not in (1, 2):
        raise ConfigError(f"Protocol runs with 1 or 2 agents, got {agents}")
    if step_budget < pair.h2:
        raise ConfigError(f"Budget {step_budget} is smaller than the secondary depth {pair.h2}")
    if pair.h1 < 3:
        raise ConfigError("The ascent rule needs primary depth h1 >= 3")
    rng = np.random.default_rng(seed)
    hits = [0, 0]
    for index, g in enumerate(pair):
        for _ in range(trials):
            if agents == 2:
                verdict = _two_agent_verdict(g, rng.integers(g.node_count, size=2), step_budget, pair.h1)
            else:
                verdict = _one_agent_verdict(g, rng.integers(g.node_count), step_budget, pair.h1, rng)
            #the first graph holds the structure, the second does not
            hits[index] += verdict if index == 0 else not verdict
    success_g1, success_g2 = hits[0] / trials, hits[1] / trials
    expected = expected_two_agent_rate(pair.layout1) if agents == 2 else None
    logger.debug(f"Hub-pair protocol with {agents} agent(s): G1 {success_g1:.3f}, G2 {success_g2:.3f}")
    return Theorem8Result(success_g1, success_g2, 0.5 * (success_g1 + success_g2), expected)


def lemma7_protocol(pair, path_length, agents, step_budget, trials, seed):
    """
    Path-end recognition with fan distractors.

    Agents start uniformly; a fan agent steps onto the path start, path
    agents walk away from the fan (mid-path starts pick a direction at
    random), and the graph is called G1 when some agent reaches the far
    endpoint and sees feature 1 there.

    returns:
        Fraction of trials in which both graphs were classified correctly
    """
    rng = np.random.default_rng(seed)
    end = path_length - 1
    correct = 0
    for _ in range(trials):
        verdicts = []
        for g in pair:
            seen_marked_end = False
            for start in rng.integers(g.node_count, size=agents):
                u, prev = int(start), None
                for _ in range(step_budget):
                    if u == end:
                        break
                    if u >= path_length:
                        nxt = 0
                    elif u == 0:
                        nxt = 1
                    else:
                        options = [w for w in (u - 1, u + 1) if w != prev]
                        nxt = options[int(rng.integers(len(options)))] if prev is None else options[0]
                    prev, u = u, nxt
                if u == end and node_level(g, end) == 1:
                    seen_marked_end = True
            verdicts.append(seen_marked_end)
        if verdicts[0] and not verdicts[1]:
            correct += 1
    return correct / trials
