"""
Graph Agents Services Module

This module contains the experiment harness: seeded training of AgentNet
models, evaluation, grid search, the experiment tables (variant table,
ladder density sweep, step ablations, agent-count sweep), heatmap export and
the run recorder that writes every run's artifact trail.

Artifact trail of a run directory:
    config.json     the resolved configuration
    metrics.json    deterministic results (no timestamps or wall-clock)
    run.json        wall-clock, timestamps, worker count
    results.csv     one row per seed per cell
    checkpoints/cell<C>/params_seed<S>.json
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, field, replace
import itertools
import json
import logging
from pathlib import Path
import time

from django.conf import settings
from django.db import DatabaseError
from django.utils import timezone
import numpy as np

from .autodiff import Tape, cross_entropy
from .config import (
    STREAM_BATCH, STREAM_EVAL, STREAM_PARAMS, STREAM_ROLLOUT, DatasetSpec, ExperimentConfig, substream,
)
from .datasets import build_dataset
from .exceptions import LabError, NonFiniteError, TrainingDiverged
from .model import AgentNetParams, ModelConfig, forward_batch
from .models import ExperimentRun, GridCell, SeedResult
from .nn import AdamWState, adamw_step, clip_global_norm, cosine_lr, load_checkpoint, parameter_hash, save_checkpoint

logger = logging.getLogger(__name__)

EVAL_CHUNK = 64

TABLE1_VARIANTS = ('full', 'simplified', 'random_walk')
TABLE1_DATASETS = ('four-cycles', 'csl', 'two-wl')
FIG3_SIZES = (16, 32, 64, 128, 256, 512, 1024)
AGENT_SWEEP_COUNTS = (2, 4, 8, 16, 32)

ABLATION_ROWS = (
    ('Full', {}),
    ('No Node Update', {'disable_node_update': True}),
    ('No Neighborhood Update', {'disable_neighborhood_update': True}),
    ('No Node Update and Neighborhood Update For All',
     {'disable_node_update': True, 'neighborhood_update_for_all': True}),
)


@dataclass
class SeedOutcome:
    """
    Result of training one seed.

    params:
        trajectory: [{step, loss, train_accuracy, test_accuracy}] at eval cadence
        stopped_step: Number of optimizer steps taken
        early_stopped: Whether the patience rule ended training
    """

    seed: int
    cell_index: int
    test_accuracy: float
    train_accuracy: float
    stopped_step: int
    early_stopped: bool
    initial_loss: object
    final_loss: object
    parameter_hash: str
    trajectory: list = field(default_factory=list)
    wall_clock_seconds: float = 0.0

    def to_dict(self, deterministic=True):
        data = asdict(self)
        if deterministic:
            data.pop('wall_clock_seconds')
        return data


@dataclass
class Metrics:
    """Per-seed finals with their mean and (population) standard deviation."""

    config_hash: str
    outcomes: list
    wall_clock_seconds: float = 0.0

    @property
    def accuracies(self):
        return [o.test_accuracy for o in self.outcomes]

    @property
    def mean_accuracy(self):
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self):
        return float(np.std(self.accuracies))

    def to_dict(self):
        return {
            'config_hash': self.config_hash,
            'mean_accuracy': self.mean_accuracy,
            'std_accuracy': self.std_accuracy,
            'seeds': [o.to_dict() for o in self.outcomes],
        }


@dataclass
class CellResult:
    index: int
    label: dict
    config: ExperimentConfig
    metrics: Metrics

    def to_dict(self):
        return {'cell_index': self.index, 'label': self.label, **self.metrics.to_dict()}


def rollouts_per_graph(dataset, eval_rollouts):
    """Two-graph datasets are scored over repeated stochastic rollouts."""
    return eval_rollouts if len(dataset) <= 2 else 1


def evaluate_accuracy(params, model_config, dataset, root_seed, seed, rollouts=1):
    """
    Classification accuracy of a parameter set on a dataset.

    Every (graph, rollout) pair owns the substream
    (root_seed, EVAL, seed, graph index, rollout), so the result does not
    depend on chunking.

    returns:
        Fraction of correct (graph, rollout) predictions
    """
    jobs = [(i, r) for i in range(len(dataset)) for r in range(rollouts)]
    graphs, labels = dataset.graphs, np.asarray(dataset.labels)
    correct = 0
    for start in range(0, len(jobs), EVAL_CHUNK):
        chunk = jobs[start:start + EVAL_CHUNK]
        rngs = [substream(root_seed, STREAM_EVAL, seed, i, r) for i, r in chunk]
        result = forward_batch([graphs[i] for i, _ in chunk], params, model_config, rngs, training=False)
        predictions = np.argmax(result.logits.values, axis=1)
        correct += int(np.sum(predictions == labels[[i for i, _ in chunk]]))
    return correct / len(jobs) if jobs else 0.0


def train_seed(config, root_seed, seed, cell_index=0, checkpoint_dir=None):
    """
    Train one model with the fixed recipe.

    Loop: sample a batch with replacement, roll out, cross-entropy, backward,
    clip the global gradient norm to 1, AdamW with the cosine schedule.
    Training stops early once the batch accuracy has been 100% for
    `early_stop_patience` consecutive steps.

    params:
        config: ExperimentConfig
        root_seed: The run's --seed
        seed: Model seed from config.seeds
        cell_index: Grid cell the seed belongs to
        checkpoint_dir: Directory for params_seed<S>.json, or None

    returns:
        SeedOutcome

    raises:
        TrainingDiverged: On a non-finite loss or gradient
    """
    started = time.perf_counter()
    dataset, train, test = config.dataset.build()
    model_config = config.with_dataset_shape(dataset)
    params = AgentNetParams(model_config, substream(root_seed, STREAM_PARAMS, seed))
    named = params.parameters()
    optimizer = AdamWState(lr=config.lr, weight_decay=config.weight_decay)
    batch_rng = substream(root_seed, STREAM_BATCH, seed)
    labels = np.asarray(train.labels)
    rollouts = rollouts_per_graph(train, config.eval_rollouts)
    diagnostics = {'config_hash': config.config_hash, 'seed': seed, 'cell_index': cell_index}

    logger.info(f"Training seed {seed} of {config.name} (cell {cell_index}, {config.training_steps} steps)")
    trajectory, initial_loss, loss_value = [], None, None
    streak, step, early_stopped = 0, 0, False
    while step < config.training_steps:
        picks = batch_rng.integers(len(train), size=config.batch_size)
        rngs = [substream(root_seed, STREAM_ROLLOUT, seed, step, j) for j in range(config.batch_size)]
        params.zero_grad()
        with Tape() as tape:
            result = forward_batch([train.graphs[i] for i in picks], params, model_config, rngs, training=True)
            loss = cross_entropy(result.logits, labels[picks])
        loss_value = float(loss.values)
        if not np.isfinite(loss_value):
            logger.error(f"Non-finite loss at step {step} for seed {seed}")
            raise TrainingDiverged(f"Loss became non-finite at step {step}", {**diagnostics, 'step': step})
        if initial_loss is None:
            initial_loss = loss_value
        tape.backward(loss)
        grads, _ = clip_global_norm({name: p.grad for name, p in named.items()}, 1.0)
        try:
            adamw_step(optimizer, named, grads, cosine_lr(step, config.training_steps, config.lr, config.lr_end))
        except NonFiniteError as e:
            raise TrainingDiverged(e.message, {**diagnostics, 'step': step, **e.details})
        step += 1

        batch_accuracy = float(np.mean(np.argmax(result.logits.values, axis=1) == labels[picks]))
        streak = streak + 1 if batch_accuracy == 1.0 else 0
        if step % config.eval_every == 0:
            point = {
                'step': step,
                'loss': loss_value,
                'train_accuracy': evaluate_accuracy(params, model_config, train, root_seed, seed, rollouts),
                'test_accuracy': evaluate_accuracy(params, model_config, test, root_seed, seed, rollouts),
            }
            trajectory.append(point)
            logger.debug(f"seed {seed} step {step}: loss {loss_value:.4f}, test {point['test_accuracy']:.3f}")
        if config.early_stop_patience and streak >= config.early_stop_patience:
            early_stopped = True
            logger.info(f"Seed {seed} held 100% batch accuracy for {streak} steps; stopping at step {step}")
            break

    test_accuracy = evaluate_accuracy(params, model_config, test, root_seed, seed, rollouts)
    train_accuracy = evaluate_accuracy(params, model_config, train, root_seed, seed, rollouts)
    digest = parameter_hash(named)
    if checkpoint_dir is not None:
        save_checkpoint(
            Path(checkpoint_dir) / f"params_seed{seed}.json", named,
            {'config': config.to_dict(), 'model': model_config.to_dict(), 'seed': seed, 'root_seed': root_seed},
        )
    outcome = SeedOutcome(
        seed=seed,
        cell_index=cell_index,
        test_accuracy=test_accuracy,
        train_accuracy=train_accuracy,
        stopped_step=step,
        early_stopped=early_stopped,
        initial_loss=initial_loss,
        final_loss=loss_value,
        parameter_hash=digest,
        trajectory=trajectory,
        wall_clock_seconds=time.perf_counter() - started,
    )
    logger.info(f"Seed {seed} of {config.name}: test accuracy {test_accuracy:.3f} after {step} steps")
    return outcome


def _train_job(job):
    config_data, root_seed, seed, cell_index, checkpoint_dir = job
    config = ExperimentConfig.from_dict(config_data)
    return train_seed(config, root_seed, seed, cell_index, checkpoint_dir)


def run_seed_jobs(cells, root_seed, workers=1, out_dir=None):
    """
    Train every seed of every cell, in parallel when workers > 1.

    params:
        cells: List of (cell_index, ExperimentConfig)
        root_seed: The run's --seed
        workers: Process count
        out_dir: Run directory for checkpoints, or None

    returns:
        Dict cell_index -> list of SeedOutcome sorted by seed
    """
    jobs = []
    for cell_index, config in cells:
        checkpoint_dir = str(Path(out_dir) / 'checkpoints' / f"cell{cell_index}") if out_dir else None
        jobs.extend((config.to_dict(), root_seed, seed, cell_index, checkpoint_dir) for seed in config.seeds)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_train_job, jobs))
    else:
        outcomes = [_train_job(job) for job in jobs]
    grouped = {}
    for outcome in sorted(outcomes, key=lambda o: (o.cell_index, o.seed)):
        grouped.setdefault(outcome.cell_index, []).append(outcome)
    return grouped


def grid_cells(axes):
    """Cartesian product of grid axes in sorted-axis order."""
    names = sorted(axes)
    return [dict(zip(names, values)) for values in itertools.product(*(axes[n] for n in names))]


def agentnet_grid(node_count, lr_grid=False):
    """Synthetic-task grid: batch size, hidden width and k in {2, n}."""
    axes = {'batch_size': [50, 300], 'model.hidden': [64, 128], 'model.agents': sorted({2, node_count})}
    if lr_grid:
        axes['lr'] = [1e-3, 5e-4, 1e-4]
    return axes


class RunRecorder:
    """
    Writes a run's files and mirrors it into the ledger tables.

    If the ledger is unavailable (tables missing, database down) a warning
    is logged once and the run continues with files only.

    params:
        command: Command name
        name: Run name
        config: JSON-able config of the run
        config_hash: Content hash of the config
        root_seed: The run's --seed
        out_dir: Run directory
        workers: Worker count, recorded in run.json
        persist: Mirror into the ledger; defaults to settings.AGENTLAB_PERSIST_RUNS
    """

    def __init__(self, command, name, config, config_hash, root_seed, out_dir, workers=1, persist=None):
        self.command = command
        self.name = name
        self.config = config
        self.config_hash = config_hash
        self.root_seed = root_seed
        self.out_dir = Path(out_dir)
        self.workers = workers
        self.persist = settings.AGENTLAB_PERSIST_RUNS if persist is None else persist
        self.run = None
        self._started = None
        self._started_at = None

    def _ledger(self, action, fn):
        if not self.persist:
            return None
        try:
            return fn()
        except DatabaseError as e:
            logger.warning(f"Run ledger unavailable while trying to {action}: {e}; continuing with files only")
            self.persist = False
            return None

    def start(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._started = time.perf_counter()
        self._started_at = timezone.now()
        self.write_json('config.json', self.config)
        self.run = self._ledger('open the run', lambda: ExperimentRun.objects.create(
            command=self.command, name=self.name, config=self.config, config_hash=self.config_hash,
            root_seed=self.root_seed, output_dir=str(self.out_dir),
        ))
        logger.info(f"Started {self.command} run '{self.name}' ({self.config_hash}) in {self.out_dir}")
        return self

    def write_json(self, filename, payload):
        path = self.out_dir / filename
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + '\n')
        return path

    def record_cells(self, cells, best_index=None):
        """Write results.csv and mirror cells and seeds into the ledger."""
        path = self.out_dir / 'results.csv'
        with path.open('w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow([
                'cell_index', 'label', 'seed', 'test_accuracy', 'train_accuracy', 'stopped_step',
                'early_stopped', 'initial_loss', 'final_loss', 'parameter_hash',
            ])
            for cell in cells:
                label = ';'.join(f"{k}={v}" for k, v in sorted(cell.label.items()))
                for o in cell.metrics.outcomes:
                    writer.writerow([
                        cell.index, label, o.seed, repr(o.test_accuracy), repr(o.train_accuracy), o.stopped_step,
                        int(o.early_stopped), repr(o.initial_loss), repr(o.final_loss), o.parameter_hash,
                    ])
        if self.run is None:
            return path
        def mirror():
            for cell in cells:
                GridCell.objects.create(
                    run=self.run, cell_index=cell.index, overrides=cell.label,
                    mean_accuracy=cell.metrics.mean_accuracy, std_accuracy=cell.metrics.std_accuracy,
                    is_best=cell.index == best_index,
                )
                SeedResult.objects.bulk_create([
                    SeedResult(
                        run=self.run, cell_index=cell.index, seed=o.seed, test_accuracy=o.test_accuracy,
                        train_accuracy=o.train_accuracy, stopped_step=o.stopped_step,
                        parameter_hash=o.parameter_hash, trajectory=o.trajectory,
                        wall_clock_seconds=o.wall_clock_seconds,
                    )
                    for o in cell.metrics.outcomes
                ])

        self._ledger('record results', mirror)
        return path

    def finish(self, metrics):
        """Write metrics.json and run.json and close the ledger entry."""
        elapsed = time.perf_counter() - self._started
        self.write_json('metrics.json', metrics)
        self.write_json('run.json', {
            'command': self.command,
            'name': self.name,
            'config_hash': self.config_hash,
            'root_seed': self.root_seed,
            'workers': self.workers,
            'started_at': self._started_at.isoformat(),
            'finished_at': timezone.now().isoformat(),
            'wall_clock_seconds': elapsed,
        })
        if self.run is not None:
            self.run.status = 'finished'
            self.run.summary = metrics
            self.run.finished_at = timezone.now()
            self._ledger('close the run', lambda: self.run.save())
        logger.info(f"Finished {self.command} run '{self.name}' in {elapsed:.1f}s")

    def fail(self, error):
        if self.run is not None:
            self.run.status = 'failed'
            self.run.summary = error.as_dict() if isinstance(error, LabError) else {'message': str(error)}
            self.run.finished_at = timezone.now()
            self._ledger('mark the run failed', lambda: self.run.save())


class TrainingService:
    """
    Trains configs seed by seed and grids cell by cell.

    params:
        root_seed: The run's --seed
        workers: Process count for seed/cell jobs
        out_dir: Run directory for checkpoints (None keeps nothing on disk)
    """

    def __init__(self, root_seed=None, workers=None, out_dir=None):
        self.root_seed = settings.AGENTLAB_DEFAULT_SEED if root_seed is None else root_seed
        self.workers = settings.AGENTLAB_WORKERS if workers is None else workers
        self.out_dir = out_dir

    def run_cells(self, labelled_configs):
        """
        Train a list of (label, ExperimentConfig) cells.

        returns:
            List of CellResult in input order
        """
        indexed = list(enumerate(labelled_configs))
        grouped = run_seed_jobs([(i, cfg) for i, (_, cfg) in indexed], self.root_seed, self.workers, self.out_dir)
        results = []
        for index, (label, cfg) in indexed:
            outcomes = grouped[index]
            metrics = Metrics(cfg.config_hash, outcomes, sum(o.wall_clock_seconds for o in outcomes))
            results.append(CellResult(index, label, cfg, metrics))
            logger.info(f"Cell {index} {label}: {metrics.mean_accuracy:.3f} ± {metrics.std_accuracy:.3f}")
        return results

    def train(self, config):
        """
        Train every seed of one config.

        returns:
            Metrics
        """
        return self.run_cells([({}, config)])[0].metrics

    def grid_search(self, base, axes=None):
        """
        Train every cell of a grid and pick the best by mean held-out accuracy.

        Ties go to the lower cell index.

        returns:
            (best CellResult, list of all CellResults)
        """
        axes = base.grid if axes is None else axes
        cells = [(overrides, base.with_overrides(overrides)) for overrides in grid_cells(axes)] or [({}, base)]
        results = self.run_cells(cells)
        best = best_cell(results)
        logger.info(f"Best grid cell {best.index}: {best.label} at {best.metrics.mean_accuracy:.3f}")
        return best, results


def _experiment_config(name, family, params=None, dataset_seed=0, **model_fields):
    return {
        'name': name,
        'dataset': DatasetSpec(family=family, params=params or {}, seed=dataset_seed),
        'model': ModelConfig(**model_fields),
    }


def _node_count(family, params=None):
    dataset = build_dataset(family, params or {}, 0)
    return max(g.node_count for g in dataset.graphs)


@dataclass
class PlannedCell:
    """
    One row of an experiment table before training.

    params:
        label: The row's identifying fields, e.g. {'variant': 'full', 'dataset': 'csl'}
        config: The row's base config
        cells: [(overrides, ExperimentConfig)] to train; one entry when not gridded
    """

    label: dict
    config: ExperimentConfig
    cells: list


def best_cell(results):
    """Highest mean held-out accuracy; ties go to the lower cell index."""
    return max(results, key=lambda cell: (cell.metrics.mean_accuracy, -cell.index))


class ExperimentService(TrainingService):
    """
    The synthetic experiment tables.

    `recipe` holds ExperimentConfig overrides applied to every cell
    (training_steps, seeds, batch_size, ...), which is how desk-scale runs
    shrink the default budget. Every table is planned first (plan_*), so
    a bad config fails before anything is trained or written, and then run
    with run_plans.

    params:
        steps: Walk length for every cell
        hidden: Pinned hidden width (None uses 64 and lets the grid vary it)
        grid: None for the synthetic-task grid, {} for no grid, or explicit axes
        lr_grid: Add the learning-rate axis to the synthetic-task grid
    """

    def __init__(self, root_seed=None, workers=None, out_dir=None, recipe=None, steps=16, hidden=None,
                 grid=None, lr_grid=False):
        super().__init__(root_seed, workers, out_dir)
        self.recipe = dict(recipe or {})
        self.steps = steps
        self.hidden = hidden
        self.grid = grid
        self.lr_grid = lr_grid

    def _config(self, name, family, params=None, **model_fields):
        fields = {'steps': self.steps, 'hidden': self.hidden or 64, **model_fields}
        return replace(ExperimentConfig(**_experiment_config(name, family, params, **fields)), **self.recipe)

    def _grid_axes(self, node_count):
        #axes pinned by the recipe or by --hidden are not searched
        if self.grid is not None:
            return dict(self.grid)
        axes = agentnet_grid(node_count, self.lr_grid)
        for axis in self.recipe:
            axes.pop(axis, None)
        if self.hidden is not None:
            axes.pop('model.hidden', None)
        return axes

    @staticmethod
    def _plan(label, config, axes=None):
        cells = [(overrides, config.with_overrides(overrides)) for overrides in grid_cells(axes or {})]
        return PlannedCell(label, config, cells or [({}, config)])

    def run_plans(self, plans):
        """
        Train every cell of every planned row and keep each row's best cell.

        returns:
            (rows, list of all CellResults)
        """
        flat = [({**plan.label, **overrides}, cfg) for plan in plans for overrides, cfg in plan.cells]
        results = self.run_cells(flat)
        rows, offset = [], 0
        for plan in plans:
            group = results[offset:offset + len(plan.cells)]
            offset += len(plan.cells)
            best = best_cell(group)
            row = {
                **plan.label, 'mean_accuracy': best.metrics.mean_accuracy,
                'std_accuracy': best.metrics.std_accuracy, 'seeds': len(best.metrics.outcomes),
                'cells': len(group),
            }
            if len(group) > 1:
                row['best_cell'] = best.index
                row['best_overrides'] = {k: v for k, v in best.label.items() if k not in plan.label}
                logger.info(f"Best cell for {plan.label}: {row['best_overrides']} at {best.metrics.mean_accuracy:.3f}")
            rows.append(row)
        return rows, results

    def plan_table1(self, variants=TABLE1_VARIANTS, datasets=TABLE1_DATASETS):
        """Each variant on 4-cycles, CSL and the 2-WL pair with k = n, grid-searched."""
        plans = []
        for variant, family in itertools.product(variants, datasets):
            n = _node_count(family)
            config = self._config(f"table1-{variant}-{family}", family, variant=variant, agents=n)
            plans.append(self._plan({'variant': variant, 'dataset': family}, config, self._grid_axes(n)))
        return plans

    def plan_fig3_density_sweep(self, sizes=FIG3_SIZES, agents=16):
        """
        Crossed-vs-plain ladders of growing size with k = 16, ℓ = 16 fixed.

        Two modes: half of the cells crossed, or exactly two crossed cells.
        """
        plans = []
        for size in sizes:
            ladder_cells = size // 2 - 1
            for mode, params in (('density', {'crossed_density': 0.5}), ('fixed2', {'crossed_count': 2})):
                config = self._config(
                    f"fig3-{mode}-{size}", 'ladder', {'cells': ladder_cells, **params}, agents=agents,
                )
                plans.append(self._plan({'size': size, 'mode': mode}, config))
        return plans

    def plan_appendix_j(self, datasets=TABLE1_DATASETS):
        """The step ablations of the Full model on each dataset, grid-searched."""
        plans = []
        for (row, flags), family in itertools.product(ABLATION_ROWS, datasets):
            n = _node_count(family)
            config = self._config(
                f"ablation-{family}-{len(plans)}", family, variant='full', agents=n, **flags,
            )
            plans.append(self._plan({'ablation': row, 'dataset': family}, config, self._grid_axes(n)))
        return plans

    def plan_agent_sweep(self, counts=AGENT_SWEEP_COUNTS, family='four-cycles'):
        """Agent-count sweep around k = n on a synthetic task."""
        return [
            self._plan({'agents': k, 'dataset': family}, self._config(f"agents-{family}-{k}", family, agents=k))
            for k in counts
        ]

    def run_table1(self, *args, **kwargs):
        return self.run_plans(self.plan_table1(*args, **kwargs))

    def run_fig3_density_sweep(self, *args, **kwargs):
        return self.run_plans(self.plan_fig3_density_sweep(*args, **kwargs))

    def run_appendix_j(self, *args, **kwargs):
        return self.run_plans(self.plan_appendix_j(*args, **kwargs))

    def run_agent_sweep(self, *args, **kwargs):
        return self.run_plans(self.plan_agent_sweep(*args, **kwargs))


def load_trained_params(config, checkpoint, root_seed=0):
    """Build parameters for a config's dataset and fill them from a checkpoint."""
    dataset, train, test = config.dataset.build()
    model_config = config.with_dataset_shape(dataset)
    params = AgentNetParams(model_config, substream(root_seed, STREAM_PARAMS, 0))
    if checkpoint is not None:
        state, _ = load_checkpoint(checkpoint, model_config.numpy_dtype)
        params.load_state(state)
    return params, model_config, dataset, train, test


def evaluate_checkpoint(config, checkpoint, root_seed):
    """
    Recompute accuracies of a saved parameter file on a config's dataset.

    returns:
        Dict with train/test accuracy and the parameter hash
    """
    params, model_config, _, train, test = load_trained_params(config, checkpoint, root_seed)
    rollouts = rollouts_per_graph(test, config.eval_rollouts)
    return {
        'config_hash': config.config_hash,
        'parameter_hash': parameter_hash(params.parameters()),
        'train_accuracy': evaluate_accuracy(params, model_config, train, root_seed, 0, rollouts),
        'test_accuracy': evaluate_accuracy(params, model_config, test, root_seed, 0, rollouts),
    }


def export_heatmaps(config, checkpoint, root_seed, out_dir):
    """
    Visit counts of one rollout per dataset graph, one CSV per graph.

    Each file heatmap_<index>.csv has the header node_id,visit_count.

    returns:
        List of written paths
    """
    params, model_config, dataset, _, _ = load_trained_params(config, checkpoint, root_seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for index, g in enumerate(dataset.graphs):
        result = forward_batch([g], params, model_config, [substream(root_seed, STREAM_EVAL, 0, index, 0)])
        path = out_dir / f"heatmap_{index}.csv"
        with path.open('w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['node_id', 'visit_count'])
            writer.writerows((node, int(count)) for node, count in enumerate(result.visit_counts[0]))
        paths.append(path)
    logger.info(f"Wrote {len(paths)} heatmaps to {out_dir}")
    return paths
