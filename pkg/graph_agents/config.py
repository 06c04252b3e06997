"""
Experiment Configuration Module

This module contains the reproducible description of an experiment
(dataset, model and training recipe), its JSON form and content hash, and
the seed-stream scheme every random draw in the lab goes through.

Seed streams:
    substream(root_seed, purpose, *path) returns
    Generator(Philox(SeedSequence([root_seed, purpose, *path]))).
    Philox is counter based, so the stream for (seed index, step, rollout)
    is reachable without drawing any other stream first, and results do not
    depend on worker count or job order.
"""

from dataclasses import asdict, dataclass, field, replace
import hashlib
import json
import logging
from pathlib import Path

from django.conf import settings
import numpy as np

from .datasets import build_dataset, split_dataset
from .exceptions import ConfigError
from .forms import DatasetSpecForm, ModelConfigForm, TrainingConfigForm, validated
from .model import ModelConfig

logger = logging.getLogger(__name__)

#purpose ids of the seed-stream path
STREAM_DATASET = 1
STREAM_SPLIT = 2
STREAM_PARAMS = 3
STREAM_BATCH = 4
STREAM_ROLLOUT = 5
STREAM_EVAL = 6
STREAM_THEORY = 7

DEFAULT_SEEDS = tuple(range(10))


def substream(root_seed, *path):
    """
    Independent generator for one consumer of randomness.

    params:
        root_seed: The run's --seed
        path: Small non-negative integers naming the consumer

    returns:
        numpy Generator
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(root_seed), *map(int, path)])))


def stream_seed(root_seed, *path):
    """A 32-bit integer seed drawn from a substream, for APIs that take plain ints."""
    return int(substream(root_seed, *path).integers(0, 2 ** 32 - 1))


@dataclass(frozen=True)
class DatasetSpec:
    family: str = 'four-cycles'
    params: dict = field(default_factory=dict)
    seed: int = 0
    test_fraction: float = 0.5

    def build(self):
        """
        Generate the dataset and split it.

        returns:
            (full, train, test) LabeledDatasets
        """
        dataset = build_dataset(self.family, self.params, self.seed)
        train, test = split_dataset(dataset, self.test_fraction, stream_seed(self.seed, STREAM_SPLIT))
        logger.info(f"Built {self.family} dataset: {len(dataset)} graphs, {len(train)} train / {len(test)} test")
        return dataset, train, test

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        defaults = cls().to_dict()
        cleaned = validated(DatasetSpecForm, {**defaults, **(data or {})}, 'dataset')
        return cls(**cleaned)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything needed to reproduce a run.

    params:
        name: Label used in output files and the ledger
        dataset: DatasetSpec
        model: ModelConfig; feature_dim and class_count are taken from the dataset
        batch_size: Graphs per optimizer step (sampled with replacement)
        training_steps: Optimizer step budget
        seeds: Seeds to train, one model each
        lr: Initial learning rate of the cosine schedule
        lr_end: Final learning rate of the cosine schedule
        weight_decay: AdamW decoupled weight decay
        eval_every: Evaluation cadence in steps
        eval_rollouts: Stochastic rollouts per graph for two-graph datasets
        early_stop_patience: Consecutive 100%-train-accuracy steps before stopping; 0 disables
        grid: Axis -> values; axes are `batch_size`, `lr`, or `model.<field>`
    """

    name: str = 'experiment'
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    model: ModelConfig = field(default_factory=ModelConfig)
    batch_size: int = 50
    training_steps: int = field(default_factory=lambda: settings.AGENTLAB_TRAINING_STEPS)
    seeds: tuple = DEFAULT_SEEDS
    lr: float = 1e-4
    lr_end: float = 1e-11
    weight_decay: float = 0.1
    eval_every: int = 500
    eval_rollouts: int = field(default_factory=lambda: settings.AGENTLAB_EVAL_ROLLOUTS)
    early_stop_patience: int = field(default_factory=lambda: settings.AGENTLAB_EARLY_STOP_PATIENCE)
    grid: dict = field(default_factory=dict)

    def to_dict(self):
        data = asdict(self)
        data['seeds'] = list(self.seeds)
        data['dataset'] = self.dataset.to_dict()
        data['model'] = self.model.to_dict()
        return data

    @classmethod
    def from_dict(cls, data):
        """
        Validate and build a config from its JSON form.

        raises:
            ConfigError: With the per-field error map of the failing section
        """
        if not isinstance(data, dict):
            raise ConfigError("Experiment config must be a JSON object")
        data = dict(data)
        dataset = DatasetSpec.from_dict(data.pop('dataset', {}))
        model_defaults = ModelConfig(dtype=settings.AGENTLAB_DTYPE).to_dict()
        model_raw = data.pop('model', {}) or {}
        unknown = set(model_raw) - set(model_defaults)
        if unknown:
            raise ConfigError(f"Unknown model fields: {sorted(unknown)}")
        model_data = validated(ModelConfigForm, {**model_defaults, **model_raw}, 'model')
        defaults = cls().to_dict()
        defaults.pop('dataset')
        defaults.pop('model')
        unknown = set(data) - set(defaults)
        if unknown:
            raise ConfigError(f"Unknown config fields: {sorted(unknown)}")
        training = validated(TrainingConfigForm, {**defaults, **data}, 'training')
        training['seeds'] = tuple(training['seeds'])
        return cls(dataset=dataset, model=ModelConfig(**model_data), **training)

    @property
    def config_hash(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def with_dataset_shape(self, dataset):
        """Model config with feature_dim and class_count set from a dataset."""
        return replace(self.model, feature_dim=dataset.feature_dim, class_count=dataset.class_count)

    def with_overrides(self, overrides):
        """
        Apply grid overrides such as {'batch_size': 300, 'model.hidden': 128}.

        raises:
            ConfigError: On an unknown axis
        """
        top, model = {}, {}
        for axis, value in overrides.items():
            if axis.startswith('model.'):
                model[axis[len('model.'):]] = value
            else:
                top[axis] = value
        data = self.to_dict()
        data['model'].update(model)
        data.update(top)
        data['grid'] = {}
        return ExperimentConfig.from_dict(data)

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))


def load_config(path):
    """
    Read an ExperimentConfig from a JSON file.

    raises:
        ConfigError: If the file is missing, unparsable or invalid
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}")
    return ExperimentConfig.from_dict(data)
