"""
Graph Agents Models Module

This module contains the Django models of the run ledger. Files under the
run's output directory are the primary artifact trail; these tables mirror
each run's config, per-seed results and grid cells so runs can be queried
after the fact.
"""

from django.db import models
from django.utils import timezone
import uuid


class ExperimentRun(models.Model):
    """
    One invocation of an experiment command.

    params:
        id: UUID primary key
        command: Command name (train, grid, table1, ...)
        name: Experiment name from the config
        config: Full config JSON
        config_hash: Content hash of the config
        root_seed: The run's --seed
        status: running, finished or failed
        summary: Deterministic metrics summary
        output_dir: Where the run's files were written
        created_at: Start timestamp
        finished_at: End timestamp
    """

    STATUS_CHOICES = [
        ('running', 'Running'),
        ('finished', 'Finished'),
        ('failed', 'Failed'),
    ]

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    command = models.CharField(max_length=50)
    name = models.CharField(max_length=200)
    config = models.JSONField(default=dict)
    config_hash = models.CharField(max_length=64, db_index=True)
    root_seed = models.PositiveIntegerField(default=0)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='running')
    summary = models.JSONField(default=dict)
    output_dir = models.CharField(max_length=500, blank=True)
    created_at = models.DateTimeField(default=timezone.now)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        """
        String representation of the run.

        returns:
            Command, name and config hash
        """
        return f"{self.command}:{self.name} ({self.config_hash})"


class GridCell(models.Model):
    """Aggregate result of one grid cell."""

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='cells')
    cell_index = models.PositiveIntegerField()
    overrides = models.JSONField(default=dict)
    mean_accuracy = models.FloatField()
    std_accuracy = models.FloatField()
    is_best = models.BooleanField(default=False)

    class Meta:
        ordering = ['cell_index']
        unique_together = [('run', 'cell_index')]

    def __str__(self):
        return f"cell {self.cell_index} of {self.run_id}: {self.mean_accuracy:.3f}"


class SeedResult(models.Model):
    """
    Result of training one seed of one cell.

    params:
        run: Owning ExperimentRun
        cell_index: Grid cell the seed belongs to (0 for single runs)
        seed: Training seed
        test_accuracy: Final held-out accuracy
        train_accuracy: Final training accuracy
        stopped_step: Step the loop ended at (early stop or budget)
        parameter_hash: Content hash of the trained parameters
        trajectory: Evaluation trajectory [{step, loss, train_accuracy, test_accuracy}]
        wall_clock_seconds: Training time
    """

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='seed_results')
    cell_index = models.PositiveIntegerField(default=0)
    seed = models.PositiveIntegerField()
    test_accuracy = models.FloatField()
    train_accuracy = models.FloatField()
    stopped_step = models.PositiveIntegerField()
    parameter_hash = models.CharField(max_length=64)
    trajectory = models.JSONField(default=list)
    wall_clock_seconds = models.FloatField(default=0.0)
    created_at = models.DateTimeField(default=timezone.now)

    class Meta:
        ordering = ['cell_index', 'seed']

    def __str__(self):
        return f"seed {self.seed} cell {self.cell_index}: {self.test_accuracy:.3f}"
