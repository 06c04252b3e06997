"""
AgentNet Model Module

This module contains the neural agent rollout: k agents are placed on a
graph, and for ℓ steps they update the nodes they stand on, aggregate those
nodes' neighborhoods, update themselves from their node, and move to a node
of their closed neighborhood through a straight-through Gumbel-softmax
choice. Agent embeddings are pooled after every agent update and summed into
class logits.

Three transition variants are supported:
    full: exploration-indicator biases plus query/key attention
    simplified: per-agent MLP producing the four indicator weights
    random_walk: uniform move to a neighbor (stay only on isolated nodes)

A batch of graphs is rolled out as one disjoint union; every agent belongs to
exactly one graph and never leaves it.
"""

from dataclasses import asdict, dataclass, field
import logging
import math

import numpy as np

from .autodiff import (
    Tensor, add, concat, gumbel_softmax_st, index_select, log_scaled_sum, matmul, mul,
    reshape, sample_gumbel, segment_argmax, segment_max, segment_mean, segment_sum, tensor_sum,
)
from .exceptions import ConfigError, GraphError, ShapeError
from .nn import Linear, MlpBlock, sinusoidal_time_embedding

logger = logging.getLogger(__name__)

VARIANTS = ('full', 'simplified', 'random_walk')

#prev, current, explored, unexplored
EXPLORATION_BIAS = (0.0, -1.0, 0.0, 5.0)


@dataclass(frozen=True)
class ModelConfig:
    """
    Architecture and rollout settings of one AgentNet variant.

    params:
        variant: One of VARIANTS
        agents: Number of agents k per graph
        steps: Number of steps ℓ
        hidden: Stream width h (even)
        class_count: Number of output classes
        feature_dim: Width of the input node features
        temperature: Gumbel-softmax temperature
        exploration_decay: Per-step decay of exploration marks
        disable_node_update: Skip the node update step
        disable_neighborhood_update: Skip the neighborhood aggregation step
        neighborhood_update_for_all: Aggregate neighborhoods at every node
        global_agent_communication: Feed the mean of all agents into node updates
        exploration_bias: Start the transition biases at [0, -1, 0, 5] instead of 0
        stochastic_eval: Keep Gumbel sampling at evaluation (else argmax)
        dtype: 'float64' or 'float32'
    """

    variant: str = 'full'
    agents: int = 16
    steps: int = 16
    hidden: int = 64
    class_count: int = 2
    feature_dim: int = 1
    temperature: float = 2.0 / 3.0
    exploration_decay: float = 0.9
    disable_node_update: bool = False
    disable_neighborhood_update: bool = False
    neighborhood_update_for_all: bool = False
    global_agent_communication: bool = True
    exploration_bias: bool = True
    stochastic_eval: bool = True
    dtype: str = 'float64'

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"Unknown variant '{self.variant}'", {'choices': list(VARIANTS)})
        if self.agents < 1 or self.steps < 1:
            raise ConfigError(f"Need at least one agent and one step, got k={self.agents}, l={self.steps}")
        if self.hidden < 2 or self.hidden % 2:
            raise ConfigError(f"Hidden width must be even and >= 2, got {self.hidden}")
        if self.class_count < 1 or self.feature_dim < 1:
            raise ConfigError("class_count and feature_dim must be positive")
        if self.temperature <= 0 or not 0.0 <= self.exploration_decay <= 1.0:
            raise ConfigError("temperature must be positive and exploration_decay within [0, 1]")
        if self.neighborhood_update_for_all and not self.disable_node_update:
            raise ConfigError("neighborhood_update_for_all requires disable_node_update")
        if self.neighborhood_update_for_all and self.disable_neighborhood_update:
            raise ConfigError("neighborhood_update_for_all contradicts disable_neighborhood_update")
        if self.dtype not in ('float32', 'float64'):
            raise ConfigError(f"Unsupported dtype '{self.dtype}'")

    @property
    def numpy_dtype(self):
        return np.dtype(self.dtype)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown model fields: {sorted(unknown)}")
        return cls(**data)


class AgentNetParams:
    """
    All learnable weights of one model.

    Every parameter is a named Tensor; `parameters()` returns them in a stable
    order and `load_state` copies values from a checkpoint dict.
    """

    def __init__(self, config, rng):
        h, dtype = config.hidden, config.numpy_dtype
        self.config = config
        self.input_encoder = MlpBlock(
            config.feature_dim, h, h, rng, name='input_encoder', pre_norm=False, zero_output=False, dtype=dtype,
        )
        self.agent_start = Tensor(rng.normal(size=(config.agents, h)).astype(dtype), requires_grad=True,
                                  name='agent_start')
        node_inputs = 3 * h if config.global_agent_communication else 2 * h
        self.node_update = MlpBlock(node_inputs, h, h, rng, name='node_update', dtype=dtype)
        self.neighborhood_update = MlpBlock(2 * h, h, h, rng, name='neighborhood_update', dtype=dtype)
        self.agent_update = MlpBlock(2 * h, h, h, rng, name='agent_update', dtype=dtype)
        self.agent_readout = MlpBlock(h, h, h, rng, name='agent_readout', dtype=dtype)
        self.output = Linear(2 * h, config.class_count, rng, name='output', dtype=dtype)
        bias = np.asarray(EXPLORATION_BIAS if config.exploration_bias else (0.0,) * 4, dtype=dtype)
        self.query = self.key = self.transition_bias = self.policy = None
        if config.variant == 'full':
            self.query = Linear(h, h, rng, name='query', dtype=dtype)
            self.key = Linear(2 * h, h, rng, name='key', dtype=dtype)
            self.transition_bias = Tensor(bias.copy(), requires_grad=True, name='transition_bias')
        elif config.variant == 'simplified':
            self.policy = MlpBlock(h, h, 4, rng, name='policy', dtype=dtype)
            self.policy.output.bias.values[:] = bias

    def parameters(self):
        params = {}
        params.update(self.input_encoder.parameters())
        params[self.agent_start.name] = self.agent_start
        for block in (self.node_update, self.neighborhood_update, self.agent_update, self.agent_readout, self.output):
            params.update(block.parameters())
        if self.query is not None:
            params.update(self.query.parameters())
            params.update(self.key.parameters())
            params[self.transition_bias.name] = self.transition_bias
        if self.policy is not None:
            params.update(self.policy.parameters())
        return params

    def load_state(self, state):
        """
        Copy values from a name -> Tensor (or array) dict into these parameters.

        raises:
            ShapeError: On a missing name or a shape mismatch
        """
        params = self.parameters()
        missing = sorted(set(params) - set(state))
        if missing:
            raise ShapeError(f"Checkpoint lacks parameters: {missing[:5]}")
        for name, p in params.items():
            values = state[name].values if isinstance(state[name], Tensor) else np.asarray(state[name])
            if values.shape != p.shape:
                raise ShapeError(f"Parameter {name}: checkpoint shape {values.shape} vs model {p.shape}")
            p.values[...] = values
        return self

    def zero_grad(self):
        for p in self.parameters().values():
            p.zero_grad()


class RolloutBatch:
    """
    Disjoint union of the graphs rolled out together.

    Node ids are offset graph by graph; agents are numbered graph-major, k per
    graph.
    """

    def __init__(self, graphs, agents):
        graphs = list(graphs)
        if not graphs:
            raise GraphError("Empty batch")
        for g in graphs:
            if g.node_count == 0:
                raise GraphError("Cannot roll out on an empty graph")
        dims = {g.feature_dim for g in graphs}
        if len(dims) > 1:
            raise GraphError(f"Mixed feature dims in one batch: {sorted(dims)}")
        self.graphs = graphs
        self.agents = agents
        self.sizes = np.array([g.node_count for g in graphs], dtype=np.int64)
        self.offsets = np.zeros(len(graphs) + 1, dtype=np.int64)
        np.cumsum(self.sizes, out=self.offsets[1:])
        self.node_count = int(self.offsets[-1])
        self.node_graph = np.repeat(np.arange(len(graphs)), self.sizes)
        self.agent_graph = np.repeat(np.arange(len(graphs)), agents)
        self.agent_count = len(graphs) * agents
        self.features = np.concatenate([g.node_features for g in graphs], axis=0)
        indptrs, indices = [], []
        edge_offset = 0
        for g, offset in zip(graphs, self.offsets[:-1]):
            indptr, idx = g.csr
            indptrs.append(indptr[:-1] + edge_offset)
            indices.append(idx + offset)
            edge_offset += int(indptr[-1])
        self.indptr = np.append(np.concatenate(indptrs), edge_offset)
        self.indices = np.concatenate(indices)
        self.degrees = np.diff(self.indptr)

    @property
    def graph_count(self):
        return len(self.graphs)

    def neighbor_lists(self, nodes):
        """
        Flattened neighbors of `nodes`.

        returns:
            (neighbor ids, owner index into `nodes`) arrays
        """
        nodes = np.asarray(nodes, dtype=np.int64)
        counts = self.degrees[nodes]
        owner = np.repeat(np.arange(nodes.shape[0]), counts)
        starts = np.repeat(self.indptr[nodes], counts)
        within = np.arange(owner.shape[0]) - np.repeat(np.cumsum(counts) - counts, counts)
        return self.indices[starts + within], owner


@dataclass
class RunState:
    """
    Mutable state of one (batched) rollout.

    exploration holds one row per agent over its own graph's local node ids,
    padded to the largest graph in the batch.
    """

    node_emb: Tensor
    agent_emb: Tensor
    positions: np.ndarray
    prev_positions: np.ndarray
    exploration: np.ndarray
    selection: Tensor
    step: int = 0
    visit_counts: np.ndarray = None
    trajectory: list = field(default_factory=list)
    agent_history: list = field(default_factory=list)


class NoiseSource:
    """
    Gumbel noise per (step, graph), drawn from each graph's own generator.

    With `frozen=True` the first draw for a key is cached and replayed, which
    holds the noise fixed across repeated forward passes.
    """

    def __init__(self, rngs, frozen=False):
        self.rngs = list(rngs)
        self.frozen = frozen
        self._cache = {}

    def __call__(self, step, graph_index, size, dtype):
        key = (step, graph_index, size)
        if self.frozen and key in self._cache:
            return self._cache[key]
        noise = sample_gumbel(self.rngs[graph_index], size, dtype)
        if self.frozen:
            self._cache[key] = noise
        return noise


def _time(t, width, dtype):
    return Tensor(sinusoidal_time_embedding(t, width, dtype))


def init_rollout(batch, params, config, rngs, placements=None):
    """
    Encode node features, reset agents and place them uniformly at random.

    params:
        batch: RolloutBatch
        params: AgentNetParams
        config: ModelConfig
        rngs: One numpy Generator per graph (placement draws)
        placements: Optional (graph_count, k) local node ids overriding the draw

    returns:
        RunState
    """
    dtype = config.numpy_dtype
    node_emb = params.input_encoder(Tensor(batch.features.astype(dtype)))
    agent_emb = index_select(params.agent_start, np.tile(np.arange(config.agents), batch.graph_count))
    if placements is None:
        local = np.stack([rng.integers(0, n, size=config.agents) for rng, n in zip(rngs, batch.sizes)])
    else:
        local = np.asarray(placements, dtype=np.int64).reshape(batch.graph_count, config.agents)
        if np.any(local < 0) or np.any(local >= batch.sizes[:, None]):
            raise GraphError("Placement outside its graph")
    positions = (local + batch.offsets[:-1, None]).reshape(-1)
    exploration = np.zeros((batch.agent_count, int(batch.sizes.max())), dtype=dtype)
    exploration[np.arange(batch.agent_count), local.reshape(-1)] = 1.0
    visit_counts = np.bincount(positions, minlength=batch.node_count)
    return RunState(
        node_emb=node_emb,
        agent_emb=agent_emb,
        positions=positions,
        prev_positions=np.full(batch.agent_count, -1, dtype=np.int64),
        exploration=exploration,
        selection=Tensor(np.ones((batch.agent_count, 1), dtype=dtype)),
        visit_counts=visit_counts,
        trajectory=[positions.copy()],
    )


def step_node_update(state, params, config, batch):
    """Residual update of every occupied node from the agents standing on it."""
    if config.disable_node_update:
        return state
    occupied, slot = np.unique(state.positions, return_inverse=True)
    present = mul(state.agent_emb, state.selection)
    current = index_select(state.node_emb, occupied)
    parts = [current, log_scaled_sum(present, slot, occupied.shape[0])]
    if config.global_agent_communication:
        mean_agents = segment_mean(state.agent_emb, batch.agent_graph, batch.graph_count)
        parts.append(index_select(mean_agents, batch.node_graph[occupied]))
    inputs = concat(parts)
    inputs = add(inputs, _time(state.step, inputs.shape[-1], config.numpy_dtype))
    delta = params.node_update(inputs)
    state.node_emb = add(state.node_emb, segment_sum(delta, occupied, batch.node_count))
    return state


def step_neighborhood_aggregation(state, params, config, batch):
    """GIN-like residual update from the log-scaled neighbor sum."""
    if config.disable_neighborhood_update:
        return state
    if config.neighborhood_update_for_all:
        targets = np.arange(batch.node_count)
    else:
        targets = np.unique(state.positions)
    neighbors, owner = batch.neighbor_lists(targets)
    gathered = index_select(state.node_emb, neighbors)
    neighbor_sum = log_scaled_sum(gathered, owner, targets.shape[0], allow_empty=True)
    inputs = concat([index_select(state.node_emb, targets), neighbor_sum])
    inputs = add(inputs, _time(state.step, inputs.shape[-1], config.numpy_dtype))
    delta = params.neighborhood_update(inputs)
    state.node_emb = add(state.node_emb, segment_sum(delta, targets, batch.node_count))
    return state


def step_agent_update(state, params, config):
    """Every agent reads the current embedding of its node."""
    here = mul(index_select(state.node_emb, state.positions), state.selection)
    inputs = concat([state.agent_emb, here])
    inputs = add(inputs, _time(state.step, inputs.shape[-1], config.numpy_dtype))
    state.agent_emb = params.agent_update(inputs, residual=state.agent_emb)
    state.agent_history.append(state.agent_emb)
    return state


@dataclass
class Candidates:
    """
    Flattened move candidates of all agents.

    nodes[m] is a global node id; owner[m] is the agent it belongs to;
    indicators[m] = [is previous, is current, explored mark, 1 - mark].
    """

    nodes: np.ndarray
    owner: np.ndarray
    indicators: np.ndarray


def candidate_moves(state, config, batch):
    positions = state.positions
    neighbors, owner = batch.neighbor_lists(positions)
    if config.variant == 'random_walk':
        isolated = np.flatnonzero(batch.degrees[positions] == 0)
        nodes = np.concatenate([neighbors, positions[isolated]])
        owner = np.concatenate([owner, isolated])
    else:
        nodes = np.concatenate([positions, neighbors])
        owner = np.concatenate([np.arange(positions.shape[0]), owner])
    order = np.argsort(owner, kind='stable')
    nodes, owner = nodes[order], owner[order]
    local = nodes - batch.offsets[batch.agent_graph[owner]]
    marks = state.exploration[owner, local]
    indicators = np.stack([
        (nodes == state.prev_positions[owner]).astype(marks.dtype),
        (nodes == positions[owner]).astype(marks.dtype),
        marks,
        1.0 - marks,
    ], axis=1)
    return Candidates(nodes, owner, indicators)


def transition_logits(state, params, config, batch, candidates=None):
    """
    Logits over every agent's candidate set N(V(a)) ∪ {V(a)}.

    returns:
        (logits Tensor of shape (m,), Candidates)
    """
    if candidates is None:
        candidates = candidate_moves(state, config, batch)
    dtype = config.numpy_dtype
    indicators = Tensor(candidates.indicators.astype(dtype))
    if config.variant == 'random_walk':
        return Tensor(np.zeros(candidates.nodes.shape[0], dtype=dtype)), candidates
    if config.variant == 'simplified':
        weights = index_select(params.policy(state.agent_emb), candidates.owner)
        return tensor_sum(mul(weights, indicators), axis=-1), candidates
    bias = reshape(matmul(indicators, reshape(params.transition_bias, (4, 1))), (-1,))
    query = index_select(params.query(state.agent_emb), candidates.owner)
    here = index_select(state.node_emb, state.positions[candidates.owner])
    there = index_select(state.node_emb, candidates.nodes)
    key = params.key(concat([here, there]))
    attention = mul(tensor_sum(mul(query, key), axis=-1), 1.0 / math.sqrt(config.hidden))
    return add(bias, attention), candidates


def step_transition(state, params, config, batch, noise, training=True, hard=True):
    """
    Sample each agent's next node and update the exploration marks.

    The chosen one-hot entry becomes the agent's `selection` weight, which
    multiplies everything the agent reads from or writes to its new node, so
    gradients reach the transition logits.
    """
    logits, candidates = transition_logits(state, params, config, batch)
    dtype = config.numpy_dtype
    if training or config.stochastic_eval:
        per_graph = np.bincount(batch.agent_graph[candidates.owner], minlength=batch.graph_count)
        draws = np.concatenate([
            noise(state.step, b, int(size), dtype) for b, size in enumerate(per_graph)
        ])
    else:
        draws = np.zeros(candidates.nodes.shape[0], dtype=dtype)
    sample = gumbel_softmax_st(
        logits, config.temperature, segments=candidates.owner, num_segments=batch.agent_count,
        noise=draws, hard=hard,
    )
    choice = segment_argmax((logits.values + draws) / config.temperature, candidates.owner, batch.agent_count)
    state.selection = index_select(reshape(sample, (-1, 1)), choice)
    new_positions = candidates.nodes[choice]
    state.prev_positions = state.positions
    state.positions = new_positions
    state.exploration *= config.exploration_decay
    local = new_positions - batch.offsets[batch.agent_graph]
    state.exploration[np.arange(batch.agent_count), local] = 1.0
    state.visit_counts += np.bincount(new_positions, minlength=batch.node_count)
    state.trajectory.append(new_positions.copy())
    return state


def readout(agent_history, params, config, batch):
    """
    Sum over steps of the affine readout of [mean ‖ max] pooled agent outputs.

    returns:
        (graph_count, class_count) logits Tensor
    """
    if not agent_history:
        raise ShapeError("Readout needs at least one step of agent embeddings")
    logits = None
    for t, agent_emb in enumerate(agent_history, start=1):
        inputs = add(agent_emb, _time(t, config.hidden, config.numpy_dtype))
        out = params.agent_readout(inputs, residual=agent_emb)
        pooled = concat([
            segment_mean(out, batch.agent_graph, batch.graph_count),
            segment_max(out, batch.agent_graph, batch.graph_count),
        ])
        step_logits = params.output(pooled)
        logits = step_logits if logits is None else add(logits, step_logits)
    return logits


@dataclass
class RolloutResult:
    logits: Tensor
    visit_counts: list
    trajectory: np.ndarray


def forward_batch(graphs, params, config, rngs, training=False, noise=None, placements=None, hard=True):
    """
    Roll out every graph of a batch and return per-graph class logits.

    params:
        graphs: List of Graph
        params: AgentNetParams
        config: ModelConfig
        rngs: One numpy Generator per graph; placements and noise come from it
        training: Training mode (always samples transitions)
        noise: Optional NoiseSource overriding the generators for Gumbel draws
        placements: Optional (graph_count, k) local placements
        hard: Straight-through one-hot forward (False emits the soft sample)

    returns:
        RolloutResult with (graph_count, class_count) logits, per-graph visit
        counts and the (ℓ+1, graph_count·k) global position trajectory
    """
    batch = RolloutBatch(graphs, config.agents)
    if len(rngs) != batch.graph_count:
        raise ShapeError(f"Need one generator per graph, got {len(rngs)} for {batch.graph_count}")
    noise = noise or NoiseSource(rngs)
    state = init_rollout(batch, params, config, rngs, placements)
    for t in range(1, config.steps + 1):
        state.step = t
        step_node_update(state, params, config, batch)
        step_neighborhood_aggregation(state, params, config, batch)
        step_agent_update(state, params, config)
        step_transition(state, params, config, batch, noise, training=training, hard=hard)
    logits = readout(state.agent_history, params, config, batch)
    counts = [state.visit_counts[batch.offsets[b]:batch.offsets[b + 1]] for b in range(batch.graph_count)]
    return RolloutResult(logits, counts, np.stack(state.trajectory))


def forward(g, params, config, rng, training=False, noise=None, placements=None, hard=True):
    """
    Single-graph rollout.

    returns:
        (class logits Tensor of shape (class_count,), visit_counts array)
    """
    result = forward_batch([g], params, config, [rng], training, noise, placements, hard)
    return reshape(result.logits, (-1,)), result.visit_counts[0]