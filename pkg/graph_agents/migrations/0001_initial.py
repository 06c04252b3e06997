# Generated by Django 4.2.23

import django.db.models.deletion
import django.utils.timezone
import uuid
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('command', models.CharField(max_length=50)),
                ('name', models.CharField(max_length=200)),
                ('config', models.JSONField(default=dict)),
                ('config_hash', models.CharField(db_index=True, max_length=64)),
                ('root_seed', models.PositiveIntegerField(default=0)),
                ('status', models.CharField(choices=[('running', 'Running'), ('finished', 'Finished'), ('failed', 'Failed')], default='running', max_length=20)),
                ('summary', models.JSONField(default=dict)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('created_at', models.DateTimeField(default=django.utils.timezone.now)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='SeedResult',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('cell_index', models.PositiveIntegerField(default=0)),
                ('seed', models.PositiveIntegerField()),
                ('test_accuracy', models.FloatField()),
                ('train_accuracy', models.FloatField()),
                ('stopped_step', models.PositiveIntegerField()),
                ('parameter_hash', models.CharField(max_length=64)),
                ('trajectory', models.JSONField(default=list)),
                ('wall_clock_seconds', models.FloatField(default=0.0)),
                ('created_at', models.DateTimeField(default=django.utils.timezone.now)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='seed_results', to='graph_agents.experimentrun')),
            ],
            options={
                'ordering': ['cell_index', 'seed'],
            },
        ),
        migrations.CreateModel(
            name='GridCell',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('cell_index', models.PositiveIntegerField()),
                ('overrides', models.JSONField(default=dict)),
                ('mean_accuracy', models.FloatField()),
                ('std_accuracy', models.FloatField()),
                ('is_best', models.BooleanField(default=False)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='cells', to='graph_agents.experimentrun')),
            ],
            options={
                'ordering': ['cell_index'],
                'unique_together': {('run', 'cell_index')},
            },
        ),
    ]
