import csv
import json
import tempfile
from pathlib import Path

from unittest import mock

from django.test import SimpleTestCase, TestCase

from graph_agents.config import ExperimentConfig
from graph_agents.exceptions import ConfigError, TrainingDiverged
from graph_agents.models import ExperimentRun, GridCell, SeedResult
from graph_agents.services import (
    CellResult, ExperimentService, Metrics, PlannedCell, RunRecorder, SeedOutcome, TrainingService, agentnet_grid,
    best_cell, evaluate_checkpoint, export_heatmaps, grid_cells,
)

TINY = {
    'name': 'tiny',
    'dataset': {'family': 'four-cycles', 'params': {'count': 8}, 'seed': 0},
    'model': {'variant': 'full', 'agents': 2, 'steps': 2, 'hidden': 4},
    'training_steps': 3,
    'seeds': [0, 1],
    'batch_size': 2,
    'eval_every': 2,
    'eval_rollouts': 2,
    'early_stop_patience': 0,
}


def tiny_config(**overrides):
    return ExperimentConfig.from_dict({**TINY, **overrides})


def outcome(seed, accuracy):
    return SeedOutcome(
        seed=seed, cell_index=0, test_accuracy=accuracy, train_accuracy=accuracy, stopped_step=1,
        early_stopped=False, initial_loss=0.7, final_loss=0.6, parameter_hash='0' * 64,
    )


class MetricsTests(SimpleTestCase):
    def test_population_statistics(self):
        metrics = Metrics('abc', [outcome(0, 0.5), outcome(1, 1.0)])
        self.assertAlmostEqual(metrics.mean_accuracy, 0.75)
        self.assertAlmostEqual(metrics.std_accuracy, 0.25)

    def test_serialized_metrics_have_no_wall_clock(self):
        metrics = Metrics('abc', [outcome(0, 0.5)], wall_clock_seconds=3.0)
        self.assertNotIn('wall_clock_seconds', json.dumps(metrics.to_dict()))

    def test_grid_cells_product(self):
        cells = grid_cells({'lr': [1e-3, 1e-4], 'batch_size': [2]})
        self.assertEqual(cells, [{'batch_size': 2, 'lr': 1e-3}, {'batch_size': 2, 'lr': 1e-4}])

    def test_agentnet_grid(self):
        axes = agentnet_grid(16)
        self.assertEqual(axes['model.agents'], [2, 16])
        self.assertNotIn('lr', axes)
        self.assertEqual(agentnet_grid(2, lr_grid=True)['model.agents'], [2])
        self.assertIn('lr', agentnet_grid(2, lr_grid=True))


class TrainingServiceTests(SimpleTestCase):
    def test_training_is_deterministic(self):
        config = tiny_config()
        first = TrainingService(root_seed=0, workers=1).train(config)
        second = TrainingService(root_seed=0, workers=1).train(config)
        self.assertEqual(first.to_dict(), second.to_dict())
        self.assertEqual([o.seed for o in first.outcomes], [0, 1])

    def test_budget_and_trajectory(self):
        metrics = TrainingService(root_seed=1, workers=1).train(tiny_config(seeds=[0]))
        seed = metrics.outcomes[0]
        self.assertEqual(seed.stopped_step, 3)
        self.assertFalse(seed.early_stopped)
        self.assertEqual([point['step'] for point in seed.trajectory], [2])
        self.assertTrue(0.0 <= seed.test_accuracy <= 1.0)

    def test_root_seed_changes_parameters(self):
        config = tiny_config(seeds=[0])
        first = TrainingService(root_seed=0, workers=1).train(config).outcomes[0]
        second = TrainingService(root_seed=5, workers=1).train(config).outcomes[0]
        self.assertNotEqual(first.parameter_hash, second.parameter_hash)

    def test_grid_ties_go_to_lower_index(self):
        config = tiny_config(seeds=[0], grid={'lr': [1e-4, 1e-4]})
        best, cells = TrainingService(root_seed=0, workers=1).grid_search(config)
        self.assertEqual(len(cells), 2)
        self.assertEqual(cells[0].metrics.mean_accuracy, cells[1].metrics.mean_accuracy)
        self.assertEqual(best.index, 0)

    def test_checkpoint_reproduces_evaluation(self):
        config = tiny_config(seeds=[0])
        with tempfile.TemporaryDirectory() as tmp:
            service = TrainingService(root_seed=2, workers=1, out_dir=tmp)
            seed = service.train(config).outcomes[0]
            checkpoint = Path(tmp) / 'checkpoints' / 'cell0' / 'params_seed0.json'
            self.assertTrue(checkpoint.exists())
            evaluation = evaluate_checkpoint(config, checkpoint, 2)
            paths = export_heatmaps(config, checkpoint, 2, Path(tmp) / 'heatmaps')
            with paths[0].open() as handle:
                rows = list(csv.reader(handle))
        self.assertEqual(evaluation['parameter_hash'], seed.parameter_hash)
        self.assertEqual(evaluation['test_accuracy'], seed.test_accuracy)
        self.assertEqual(len(paths), 8)
        self.assertEqual(rows[0], ['node_id', 'visit_count'])
        self.assertEqual(sum(int(count) for _, count in rows[1:]), 2 * (2 + 1))


class ExperimentServiceTests(SimpleTestCase):
    def test_agent_sweep_rows(self):
        recipe = {'training_steps': 1, 'seeds': (0,), 'batch_size': 2, 'eval_every': 1, 'eval_rollouts': 1}
        service = ExperimentService(root_seed=0, workers=1, recipe=recipe, steps=1, hidden=4)
        rows, cells = service.run_agent_sweep(counts=(1, 2), family='lemma4')
        self.assertEqual([row['agents'] for row in rows], [1, 2])
        self.assertEqual([cell.config.model.agents for cell in cells], [1, 2])
        self.assertTrue(all(row['seeds'] == 1 for row in rows))

    def test_two_wl_table_row_searches_the_synthetic_grid(self):
        plans = ExperimentService(root_seed=0, workers=1).plan_table1(variants=('full',), datasets=('two-wl',))
        plan = plans[0]
        n = plan.config.model.agents
        self.assertEqual(len(plan.cells), 4 * len(agentnet_grid(n)['model.agents']))
        self.assertEqual({cfg.batch_size for _, cfg in plan.cells}, {50, 300})
        self.assertEqual({cfg.model.hidden for _, cfg in plan.cells}, {64, 128})

    def test_pinned_axes_are_not_searched(self):
        service = ExperimentService(root_seed=0, workers=1, recipe={'batch_size': 2}, hidden=8)
        plan = service.plan_table1(variants=('full',), datasets=('two-wl',))[0]
        self.assertEqual([set(overrides) for overrides, _ in plan.cells], [{'model.agents'}] * len(plan.cells))
        self.assertTrue(all(cfg.batch_size == 2 and cfg.model.hidden == 8 for _, cfg in plan.cells))

    def test_no_grid_plans_one_cell_per_row(self):
        plans = ExperimentService(root_seed=0, workers=1, grid={}).plan_appendix_j(datasets=('two-wl',))
        self.assertEqual([len(plan.cells) for plan in plans], [1, 1, 1, 1])

    def test_odd_hidden_fails_while_planning(self):
        with self.assertRaises(ConfigError):
            ExperimentService(root_seed=0, workers=1, hidden=3).plan_agent_sweep(counts=(2,), family='lemma4')

    def test_row_reports_the_better_grid_cell(self):
        base = tiny_config()
        narrow, wide = {'model.hidden': 4}, {'model.hidden': 8}
        plan = PlannedCell({'dataset': 'four-cycles'}, base,
                           [(narrow, base.with_overrides(narrow)), (wide, base.with_overrides(wide))])

        def fake_cells(cells):
            return [
                CellResult(index, label, cfg, Metrics(cfg.config_hash, [outcome(0, accuracy)]))
                for index, ((label, cfg), accuracy) in enumerate(zip(cells, [0.5, 0.9]))
            ]

        service = ExperimentService(root_seed=0, workers=1)
        with mock.patch.object(ExperimentService, 'run_cells', side_effect=fake_cells):
            rows, cells = service.run_plans([plan])
        self.assertEqual(len(cells), 2)
        self.assertEqual(rows[0]['best_cell'], 1)
        self.assertEqual(rows[0]['best_overrides'], wide)
        self.assertEqual(rows[0]['mean_accuracy'], 0.9)
        self.assertEqual(rows[0]['cells'], 2)
        self.assertIs(best_cell(cells), cells[1])


class RunRecorderTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.config = tiny_config(seeds=[0])
        self.cells = TrainingService(root_seed=0, workers=1).run_cells([({}, self.config)])

    def recorder(self, persist):
        return RunRecorder(
            'train', self.config.name, self.config.to_dict(), self.config.config_hash, 0,
            Path(self.tmp.name) / 'run', persist=persist,
        )

    def test_files_and_ledger(self):
        recorder = self.recorder(True).start()
        recorder.record_cells(self.cells, best_index=0)
        recorder.finish(self.cells[0].metrics.to_dict())
        run_dir = Path(self.tmp.name) / 'run'
        for name in ('config.json', 'metrics.json', 'run.json', 'results.csv'):
            self.assertTrue((run_dir / name).exists(), name)
        metrics = json.loads((run_dir / 'metrics.json').read_text())
        self.assertEqual(metrics['config_hash'], self.config.config_hash)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, 'finished')
        self.assertEqual(run.config_hash, self.config.config_hash)
        self.assertTrue(GridCell.objects.get(run=run).is_best)
        self.assertEqual(SeedResult.objects.filter(run=run).count(), 1)

    def test_files_only(self):
        recorder = self.recorder(False).start()
        recorder.record_cells(self.cells)
        recorder.finish(self.cells[0].metrics.to_dict())
        self.assertFalse(ExperimentRun.objects.exists())
        self.assertTrue((Path(self.tmp.name) / 'run' / 'results.csv').exists())

    def test_failed_run(self):
        recorder = self.recorder(True).start()
        recorder.fail(TrainingDiverged("Loss became non-finite at step 3", {'step': 3}))
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, 'failed')
        self.assertEqual(run.summary['error'], 'training_diverged')
