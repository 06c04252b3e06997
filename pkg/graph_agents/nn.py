"""
Neural Building Blocks Module

This module contains the training-side numerics of the lab: affine layers,
Pre-LN residual MLP blocks, the sinusoidal time embedding, AdamW with
decoupled weight decay, the cosine learning-rate schedule, global-norm
clipping and the JSON parameter checkpoint format.

Checkpoint format (JSON):
    {
        "format": "agentnet-lab-params/1",
        "metadata": {...},
        "parameters": [{"name": str, "shape": [int, ...], "values": [float, ...]}, ...]
    }
Values are stored flat in row-major order; floats are written with Python's
shortest round-tripping repr, so save/load is lossless.
"""

from dataclasses import dataclass, field
import hashlib
import json
import logging
import math
from pathlib import Path

import numpy as np

from .autodiff import Tensor, add, layer_norm, leaky_relu, matmul
from .exceptions import ConfigError, NonFiniteError, ShapeError

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 'agentnet-lab-params/1'


def _parameter(values, name, dtype):
    return Tensor(np.asarray(values, dtype=dtype), requires_grad=True, name=name)


class Linear:
    """
    Affine map x @ W + b.

    params:
        in_dim: Input width
        out_dim: Output width
        rng: numpy Generator used for the fan-in uniform init
        name: Prefix for parameter names
        zero_init: Start with W = 0 and b = 0
        dtype: Parameter dtype
    """

    def __init__(self, in_dim, out_dim, rng=None, name='linear', zero_init=False, dtype=np.float64):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.name = name
        if zero_init:
            weight = np.zeros((in_dim, out_dim))
        else:
            bound = 1.0 / math.sqrt(in_dim)
            weight = rng.uniform(-bound, bound, size=(in_dim, out_dim))
        self.weight = _parameter(weight, f"{name}.weight", dtype)
        self.bias = _parameter(np.zeros(out_dim), f"{name}.bias", dtype)

    def __call__(self, x):
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f"{self.name}: expected width {self.in_dim}, got {x.shape[-1]}")
        return add(matmul(x, self.weight), self.bias)

    def parameters(self):
        return {self.weight.name: self.weight, self.bias.name: self.bias}


class MlpBlock:
    """
    Pre-LN two-layer perceptron with an optional residual stream.

    block(inputs, residual) = residual + W2 · leaky(W1 · LN(inputs))

    The output layer starts at zero, so a fresh block returns its residual
    input unchanged. The input encoder turns both the norm and the zero
    start off (`pre_norm=False`, `zero_output=False`).
    """

    def __init__(self, input_dim, hidden_dim, output_dim, rng, name='block',
                 pre_norm=True, zero_output=True, dtype=np.float64):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.output_dim = output_dim
        self.name = name
        self.pre_norm = pre_norm
        self.norm_gain = self.norm_bias = None
        if pre_norm:
            self.norm_gain = _parameter(np.ones(input_dim), f"{name}.norm.gain", dtype)
            self.norm_bias = _parameter(np.zeros(input_dim), f"{name}.norm.bias", dtype)
        self.hidden = Linear(input_dim, hidden_dim, rng, name=f"{name}.hidden", dtype=dtype)
        self.output = Linear(hidden_dim, output_dim, rng, name=f"{name}.output", zero_init=zero_output, dtype=dtype)

    def __call__(self, inputs, residual=None):
        x = layer_norm(inputs, self.norm_gain, self.norm_bias) if self.pre_norm else inputs
        out = self.output(leaky_relu(self.hidden(x)))
        if residual is None:
            return out
        if residual.shape != out.shape:
            raise ShapeError(f"{self.name}: residual {residual.shape} vs output {out.shape}")
        return add(residual, out)

    def parameters(self):
        params = {}
        if self.pre_norm:
            params[self.norm_gain.name] = self.norm_gain
            params[self.norm_bias.name] = self.norm_bias
        params.update(self.hidden.parameters())
        params.update(self.output.parameters())
        return params


def sinusoidal_time_embedding(t, dim, dtype=np.float64):
    """
    Transformer-style time embedding with interleaved sin/cos.

    emb[2i] = sin(t / 10000^(2i/dim)), emb[2i+1] = cos(t / 10000^(2i/dim))

    raises:
        ShapeError: If dim is odd or not positive
    """
    if dim <= 0 or dim % 2:
        raise ShapeError(f"Time embedding width must be positive and even, got {dim}")
    frequencies = np.power(10000.0, -np.arange(0, dim, 2) / dim)
    angles = t * frequencies
    emb = np.empty(dim)
    emb[0::2] = np.sin(angles)
    emb[1::2] = np.cos(angles)
    return emb.astype(dtype)


@dataclass
class AdamWState:
    """
    Optimizer state, mutated only by `adamw_step`.

    params:
        lr: Base learning rate (overridden per step by the schedule)
        betas: Moment decay rates
        weight_decay: Decoupled decay coefficient
        eps: Denominator floor
    """

    lr: float = 1e-4
    betas: tuple = (0.9, 0.999)
    weight_decay: float = 0.1
    eps: float = 1e-8
    step: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)


def adamw_step(state, params, grads=None, lr=None):
    """
    Apply one AdamW update in place.

    params:
        state: AdamWState
        params: Dict name -> Tensor
        grads: Dict name -> array; defaults to each tensor's `.grad`
        lr: Learning rate for this step; defaults to `state.lr`

    returns:
        The params dict, updated in place

    raises:
        NonFiniteError: If any gradient is non-finite; nothing is updated
    """
    if grads is None:
        grads = {name: p.grad for name, p in params.items()}
    for name, g in grads.items():
        if g is not None and not np.all(np.isfinite(g)):
            raise NonFiniteError(f"Non-finite gradient for {name}", {'parameter': name, 'step': state.step})
    lr = state.lr if lr is None else lr
    beta1, beta2 = state.betas
    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.values)
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(p.values)
            v = np.zeros_like(p.values)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        state.first_moment[name] = m
        state.second_moment[name] = v
        if state.weight_decay:
            p.values -= lr * state.weight_decay * p.values
        p.values -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    return params


def cosine_lr(step, total_steps, lr_start=1e-4, lr_end=1e-11):
    """Cosine decay from lr_start at step 0 to lr_end at total_steps."""
    if total_steps <= 0:
        return lr_start
    progress = min(max(step, 0), total_steps) / total_steps
    return lr_end + 0.5 * (lr_start - lr_end) * (1.0 + math.cos(math.pi * progress))


def global_norm(grads):
    return math.sqrt(sum(float(np.sum(np.square(g))) for g in grads.values() if g is not None))


def clip_global_norm(grads, max_norm=1.0):
    """
    Rescale all gradients together when their joint L2 norm exceeds max_norm.

    returns:
        (clipped grads dict, norm before clipping)
    """
    norm = global_norm(grads)
    if norm <= max_norm:
        return dict(grads), norm
    scale = max_norm / norm
    return {name: (g * scale if g is not None else None) for name, g in grads.items()}, norm


def parameter_hash(params):
    """Content hash of a parameter dict, stable across dict order."""
    digest = hashlib.sha256()
    for name in sorted(params):
        values = np.ascontiguousarray(params[name].values, dtype='<f8')
        digest.update(name.encode())
        digest.update(json.dumps(list(values.shape)).encode())
        digest.update(values.tobytes())
    return digest.hexdigest()


def save_checkpoint(path, params, metadata=None):
    """
    Write parameters as JSON.

    returns:
        The parameter hash
    """
    payload = {
        'format': CHECKPOINT_FORMAT,
        'metadata': metadata or {},
        'hash': parameter_hash(params),
        'parameters': [
            {
                'name': name,
                'shape': list(params[name].shape),
                'values': [float(x) for x in params[name].values.reshape(-1)],
            }
            for name in sorted(params)
        ],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload))
    logger.debug(f"Saved {len(params)} parameters to {path}")
    return payload['hash']


def load_checkpoint(path, dtype=np.float64):
    """
    Read a checkpoint written by `save_checkpoint`.

    returns:
        (dict name -> Tensor, metadata dict)

    raises:
        ConfigError: If the file is missing or not a parameter checkpoint
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"Checkpoint not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Checkpoint {path} is not valid JSON: {e}")
    if payload.get('format') != CHECKPOINT_FORMAT:
        raise ConfigError(f"Unsupported checkpoint format in {path}: {payload.get('format')}")
    params = {}
    for entry in payload['parameters']:
        values = np.asarray(entry['values'], dtype=dtype).reshape(entry['shape'])
        params[entry['name']] = _parameter(values, entry['name'], dtype)
    return params, payload.get('metadata', {})
