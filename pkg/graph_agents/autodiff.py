"""
Tensor Autodiff Module

This module contains a minimal dense tensor engine with reverse-mode
differentiation, built on numpy. Operations record themselves on the active
Tape; `Tape.backward` replays the recorded nodes in reverse and accumulates
gradients into every tensor that requires them.

Usage:
    with Tape() as tape:
        loss = cross_entropy(logits_fn(params), labels)
    tape.backward(loss)

Outside an active tape, operations only compute values (inference mode).
"""

from contextvars import ContextVar
from dataclasses import dataclass, field
import logging

import numpy as np

from .exceptions import NonFiniteError, ShapeError

logger = logging.getLogger(__name__)

_active_tape = ContextVar('active_tape', default=None)

LEAKY_SLOPE = 0.01


class Tensor:
    """
    Dense array that can take part in a gradient tape.

    params:
        values: Array-like data; integers are promoted to float64
        requires_grad: Whether gradients should be accumulated into `grad`
        name: Optional label used by checkpoints and diagnostics
    """

    __slots__ = ('values', 'requires_grad', 'grad', 'tape_node', 'name')
    __array_priority__ = 100

    def __init__(self, values, requires_grad=False, name=None, dtype=None):
        array = np.asarray(values, dtype=dtype)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)
        self.values = array
        self.requires_grad = requires_grad
        self.grad = None
        self.tape_node = None
        self.name = name

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    @property
    def dtype(self):
        return self.values.dtype

    def numpy(self):
        return self.values

    def item(self):
        return float(self.values.reshape(-1)[0])

    def detach(self):
        return Tensor(self.values, dtype=self.values.dtype)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        label = f" '{self.name}'" if self.name else ''
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


@dataclass
class TapeNode:
    op: str
    inputs: tuple
    output: Tensor
    backward: object
    saved: dict = field(default_factory=dict)


class Tape:
    """
    Append-only record of differentiable operations.

    Nodes are appended in execution order, so every node's inputs precede it
    and a single reverse sweep visits each node exactly once.
    """

    def __init__(self):
        self.nodes = []
        self._token = None

    def __enter__(self):
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _active_tape.reset(self._token)
        self._token = None
        return False

    def record(self, op, inputs, output, backward, **saved):
        node = TapeNode(op, tuple(inputs), output, backward, saved)
        self.nodes.append(node)
        output.tape_node = node
        return node

    def backward(self, loss, grad=None):
        """
        Accumulate d(loss)/d(x) into `x.grad` for every tensor on the tape.

        params:
            loss: Output tensor, usually a scalar
            grad: Seed gradient; defaults to ones shaped like the loss
        """
        seed = np.ones_like(loss.values) if grad is None else np.asarray(grad, dtype=loss.values.dtype)
        loss.grad = seed if loss.grad is None else loss.grad + seed
        for node in reversed(self.nodes):
            upstream = node.output.grad
            if upstream is None:
                continue
            grads = node.backward(upstream)
            for tensor, g in zip(node.inputs, grads):
                if g is None or not tensor.requires_grad:
                    continue
                if g.shape != tensor.shape:
                    raise ShapeError(f"{node.op} produced gradient {g.shape} for input {tensor.shape}")
                tensor.grad = g if tensor.grad is None else tensor.grad + g


def active_tape():
    return _active_tape.get()


def as_tensor(value, like=None):
    if isinstance(value, Tensor):
        return value
    dtype = like.values.dtype if like is not None else None
    return Tensor(np.asarray(value, dtype=dtype))


def _result(op, inputs, values, backward, **saved):
    out = Tensor(values)
    tape = _active_tape.get()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(op, inputs, out, backward, **saved)
    return out


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _pair(a, b):
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


def _check_broadcast(op, a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast")


def _check_segments(segments, num_segments, rows):
    segments = np.asarray(segments, dtype=np.int64)
    if segments.shape != (rows,):
        raise ShapeError(f"Expected {rows} group ids, got shape {segments.shape}")
    if rows and (segments.min() < 0 or segments.max() >= num_segments):
        raise ShapeError(f"Group id out of range for {num_segments} groups")
    return segments


def add(a, b):
    a, b = _pair(a, b)
    _check_broadcast('add', a, b)
    return _result(
        'add', (a, b), a.values + b.values,
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a, b):
    a, b = _pair(a, b)
    _check_broadcast('sub', a, b)
    return _result(
        'sub', (a, b), a.values - b.values,
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a, b):
    a, b = _pair(a, b)
    _check_broadcast('mul', a, b)
    return _result(
        'mul', (a, b), a.values * b.values,
        lambda g: (_unbroadcast(g * b.values, a.shape), _unbroadcast(g * a.values, b.shape)),
    )


def matmul(a, b):
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    return _result('matmul', (a, b), a.values @ b.values, lambda g: (g @ b.values.T, a.values.T @ g))


def reshape(a, shape):
    return _result('reshape', (a,), a.values.reshape(shape), lambda g: (g.reshape(a.shape),))


def tensor_sum(a, axis=None):
    """Sum over one axis (keeping nothing) or over everything."""
    values = a.values.sum(axis=axis)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _result('sum', (a,), values, backward)


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    try:
        values = np.concatenate([t.values for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeError(f"concat: {e}")
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _result('concat', tuple(tensors), values, backward)


def index_select(a, index):
    """Rows of `a` at `index` (repeats allowed)."""
    index = np.asarray(index, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= a.shape[0]):
        raise ShapeError(f"index_select: index out of range for {a.shape[0]} rows")

    def backward(g):
        grad = np.zeros_like(a.values)
        np.add.at(grad, index, g)
        return (grad,)

    return _result('index_select', (a,), a.values[index], backward)


def segment_sum(a, segments, num_segments):
    """Per-group row sums; empty groups give zero rows."""
    segments = _check_segments(segments, num_segments, a.shape[0])
    values = np.zeros((num_segments,) + a.shape[1:], dtype=a.values.dtype)
    np.add.at(values, segments, a.values)
    return _result('segment_sum', (a,), values, lambda g: (g[segments],))


def segment_counts(segments, num_segments):
    return np.bincount(np.asarray(segments, dtype=np.int64), minlength=num_segments)


def segment_mean(a, segments, num_segments, allow_empty=False):
    counts = segment_counts(segments, num_segments)
    if not allow_empty and np.any(counts == 0):
        raise ShapeError("segment_mean over an empty group")
    scale = np.where(counts > 0, 1.0 / np.maximum(counts, 1), 0.0).astype(a.values.dtype)
    return mul(segment_sum(a, segments, num_segments), Tensor(scale.reshape((-1,) + (1,) * (a.ndim - 1))))


def segment_max(a, segments, num_segments):
    """
    Per-group, per-column maximum of 2-D rows.

    The gradient goes to the first row attaining the maximum.
    """
    segments = _check_segments(segments, num_segments, a.shape[0])
    if np.any(segment_counts(segments, num_segments) == 0):
        raise ShapeError("segment_max over an empty group")
    values = np.full((num_segments, a.shape[1]), -np.inf, dtype=a.values.dtype)
    np.maximum.at(values, segments, a.values)
    rows = np.arange(a.shape[0])[:, None]
    candidates = np.where(a.values == values[segments], rows, a.shape[0])
    first = np.full((num_segments, a.shape[1]), a.shape[0], dtype=np.int64)
    np.minimum.at(first, segments, candidates)
    columns = np.broadcast_to(np.arange(a.shape[1]), first.shape)

    def backward(g):
        grad = np.zeros_like(a.values)
        np.add.at(grad, (first.ravel(), columns.ravel()), g.ravel())
        return (grad,)

    return _result('segment_max', (a,), values, backward)


def leaky_relu(a, slope=LEAKY_SLOPE):
    #right derivative at the kink
    slopes = np.where(a.values >= 0, 1.0, slope).astype(a.values.dtype)
    return _result('leaky_relu', (a,), a.values * slopes, lambda g: (g * slopes,))


def layer_norm(x, gain, bias, eps=1e-5):
    """Normalize the last axis to zero mean and unit variance, then scale and shift."""
    if gain.shape != x.shape[-1:] or bias.shape != x.shape[-1:]:
        raise ShapeError(f"layer_norm: gain {gain.shape} / bias {bias.shape} vs input {x.shape}")
    mean = x.values.mean(axis=-1, keepdims=True)
    centered = x.values - mean
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std

    def backward(g):
        d_normed = g * gain.values
        d_x = inv_std * (
            d_normed
            - d_normed.mean(axis=-1, keepdims=True)
            - normed * (d_normed * normed).mean(axis=-1, keepdims=True)
        )
        flat_g = g.reshape(-1, g.shape[-1])
        d_gain = (flat_g * normed.reshape(-1, g.shape[-1])).sum(axis=0)
        return d_x, d_gain, flat_g.sum(axis=0)

    return _result('layer_norm', (x, gain, bias), normed * gain.values + bias.values, backward)


def softmax(x):
    shifted = x.values - x.values.max(axis=-1, keepdims=True)
    y = np.exp(shifted)
    y /= y.sum(axis=-1, keepdims=True)
    return _result('softmax', (x,), y, lambda g: (y * (g - (g * y).sum(axis=-1, keepdims=True)),))


def log(x):
    with np.errstate(divide='ignore', invalid='ignore'):
        values = np.log(x.values)
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("log of a non-positive value")
    return _result('log', (x,), values, lambda g: (g / x.values,))


def cross_entropy(logits, labels):
    """
    Mean softmax cross-entropy of (B, C) logits against integer labels.

    returns:
        Scalar Tensor
    """
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"cross_entropy: logits {logits.shape} vs labels {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        raise ShapeError("cross_entropy: label out of range")
    shifted = logits.values - logits.values.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    batch = logits.shape[0]
    loss = -log_probs[np.arange(batch), labels].mean()

    def backward(g):
        grad = np.exp(log_probs)
        grad[np.arange(batch), labels] -= 1.0
        return (grad * (g / batch),)

    return _result('cross_entropy', (logits,), np.asarray(loss, dtype=logits.values.dtype), backward)


def log_scaled_sum(x, segments, num_segments, allow_empty=False):
    """
    Per-group mean scaled by ln(|group| + 1).

    params:
        x: (rows, h) tensor
        segments: Group id per row
        num_segments: Number of groups
        allow_empty: Give empty groups a zero vector instead of failing

    raises:
        ShapeError: On an empty group when `allow_empty` is false
    """
    counts = segment_counts(_check_segments(segments, num_segments, x.shape[0]), num_segments)
    if not allow_empty and np.any(counts == 0):
        raise ShapeError("log_scaled_sum over an empty group")
    scale = np.where(counts > 0, np.log(counts + 1.0) / np.maximum(counts, 1), 0.0).astype(x.values.dtype)
    return mul(segment_sum(x, segments, num_segments), Tensor(scale.reshape((-1,) + (1,) * (x.ndim - 1))))


def sample_gumbel(rng, shape, dtype=np.float64):
    """Standard Gumbel noise -ln(-ln(U)) with U uniform on (0, 1)."""
    uniform = rng.random(shape)
    uniform = np.clip(uniform, np.finfo(np.float64).tiny, 1.0 - np.finfo(np.float64).eps)
    return (-np.log(-np.log(uniform))).astype(dtype)


def segment_argmax(values, segments, num_segments):
    """Index of the first maximal entry of a flat vector within each group."""
    segments = np.asarray(segments, dtype=np.int64)
    best = np.full(num_segments, -np.inf)
    np.maximum.at(best, segments, values)
    positions = np.arange(values.shape[0])
    candidates = np.where(values == best[segments], positions, values.shape[0])
    first = np.full(num_segments, values.shape[0], dtype=np.int64)
    np.minimum.at(first, segments, candidates)
    return first


def _segment_softmax(values, segments, num_segments):
    peak = np.full(num_segments, -np.inf)
    np.maximum.at(peak, segments, values)
    exp = np.exp(values - peak[segments])
    total = np.zeros(num_segments)
    np.add.at(total, segments, exp)
    return exp / total[segments]


def gumbel_softmax_st(logits, temperature, rng=None, segments=None, num_segments=None, noise=None, hard=True):
    """
    Straight-through Gumbel-softmax sample over a flat logit vector.

    The forward pass is the exact one-hot at the argmax of
    (logits + noise) / temperature within each group; the backward pass is
    the gradient of softmax((logits + noise) / temperature), as if the soft
    sample had been emitted. With `hard=False` the soft sample itself is
    emitted and the backward rule is unchanged.

    params:
        logits: (m,) tensor
        temperature: Softmax temperature, > 0
        rng: numpy Generator for the noise (unless `noise` is given)
        segments: Optional group id per entry; one categorical per group
        num_segments: Number of groups
        noise: Frozen Gumbel noise of shape (m,)
        hard: Emit the one-hot (true) or the soft sample (false)

    returns:
        (m,) Tensor

    raises:
        NonFiniteError: On non-finite logits
        ShapeError: On empty input or non-positive temperature
    """
    if logits.ndim != 1 or logits.shape[0] < 1:
        raise ShapeError(f"gumbel_softmax_st expects a non-empty vector, got {logits.shape}")
    if temperature <= 0:
        raise ShapeError(f"Temperature must be positive, got {temperature}")
    if not np.all(np.isfinite(logits.values)):
        raise NonFiniteError("gumbel_softmax_st received non-finite logits")
    m = logits.shape[0]
    if segments is None:
        segments, num_segments = np.zeros(m, dtype=np.int64), 1
    segments = _check_segments(segments, num_segments, m)
    if noise is None:
        noise = sample_gumbel(rng, m, logits.values.dtype)
    perturbed = (logits.values + noise) / temperature
    soft = _segment_softmax(perturbed, segments, num_segments).astype(logits.values.dtype)
    if hard:
        values = np.zeros_like(soft)
        values[segment_argmax(perturbed, segments, num_segments)] = 1.0
    else:
        values = soft

    def backward(g):
        weighted = np.zeros(num_segments, dtype=g.dtype)
        np.add.at(weighted, segments, g * soft)
        return (soft * (g - weighted[segments]) / temperature,)

    return _result('gumbel_softmax_st', (logits,), values, backward, noise=noise)


@dataclass
class GradCheckResult:
    """
    params:
        max_rel_error: Largest relative error over checked coordinates
        checked: Number of coordinates compared
        excluded: (parameter name, flat index) pairs skipped as kinks
    """

    max_rel_error: float
    checked: int
    excluded: list


def _named(params):
    if isinstance(params, dict):
        return list(params.items())
    return [(p.name or f"param{i}", p) for i, p in enumerate(params)]


def grad_check(f, params, epsilon=1e-6, kink_tolerance=0.1, max_coordinates=None, seed=0, atol=1e-9):
    """
    Compare tape gradients with central finite differences.

    Coordinates where the one-sided differences disagree by more than
    `kink_tolerance` (relative) sit on a nondifferentiable point and are
    reported in `excluded` instead of failing the check.

    params:
        f: Zero-argument callable returning a scalar Tensor; every stochastic
            choice inside must be frozen
        params: Dict name -> Tensor or list of Tensors to perturb
        epsilon: Finite-difference step
        kink_tolerance: Relative disagreement that marks a kink
        max_coordinates: Optional cap on sampled coordinates per parameter
        seed: Seed for coordinate sampling
        atol: Absolute difference below which a coordinate counts as exact

    returns:
        GradCheckResult

    raises:
        NonFiniteError: If f produces a non-finite value
    """
    named = _named(params)
    for _, p in named:
        p.zero_grad()
    with Tape() as tape:
        loss = f()
    tape.backward(loss)
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.values)) for name, p in named}

    def evaluate():
        value = float(f().values)
        if not np.isfinite(value):
            raise NonFiniteError("Finite-difference evaluation produced a non-finite value")
        return value

    rng = np.random.default_rng(seed)
    base = evaluate()
    worst, checked, excluded = 0.0, 0, []
    for name, p in named:
        flat = p.values.reshape(-1)
        coordinates = np.arange(flat.size)
        if max_coordinates is not None and flat.size > max_coordinates:
            coordinates = np.sort(rng.choice(flat.size, size=max_coordinates, replace=False))
        for index in coordinates:
            original = flat[index]
            flat[index] = original + epsilon
            plus = evaluate()
            flat[index] = original - epsilon
            minus = evaluate()
            flat[index] = original
            forward, backward = (plus - base) / epsilon, (base - minus) / epsilon
            if abs(forward - backward) > kink_tolerance * max(abs(forward), abs(backward), 1e-8) \
                    and abs(forward - backward) > 1e3 * epsilon:
                excluded.append((name, int(index)))
                continue
            numeric = (plus - minus) / (2 * epsilon)
            exact = analytic[name].reshape(-1)[index]
            error = abs(numeric - exact)
            if error > atol:
                worst = max(worst, error / max(abs(numeric), abs(exact), 1e-8))
            checked += 1
    if excluded:
        logger.debug(f"grad_check skipped {len(excluded)} kink coordinates")
    return GradCheckResult(worst, checked, excluded)
