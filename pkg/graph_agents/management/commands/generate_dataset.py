import json
from pathlib import Path

from django.conf import settings

from graph_agents.config import DatasetSpec
from graph_agents.datasets import DATASET_FAMILIES, wl_distinguishable_groups
from graph_agents.exceptions import ConfigError, FlagError

from ._base import LabCommand


class Command(LabCommand):
    help = 'Generate a synthetic dataset and write it as a JSON container'

    def add_arguments(self, parser):
        parser.add_argument('--family', required=True, choices=DATASET_FAMILIES, help='Dataset family')
        parser.add_argument('--params', default='{}', help='Generator parameters as a JSON object, e.g. {"cells": 15}')
        parser.add_argument('--seed', type=int, default=settings.AGENTLAB_DEFAULT_SEED, help='Generator seed')
        parser.add_argument('--out', required=True, help='Path of the JSON file to write')

    def handle(self, *args, **options):
        try:
            params = json.loads(options['params'])
        except json.JSONDecodeError as e:
            raise FlagError(f"--params is not valid JSON: {e}")
        try:
            spec = DatasetSpec.from_dict({'family': options['family'], 'params': params, 'seed': options['seed']})
        except ConfigError as e:
            raise FlagError(e.message, e.details)
        if not options['out'].strip():
            raise FlagError("--out must not be empty")
        out = Path(options['out'])

        dataset, _, _ = spec.build()
        out.parent.mkdir(parents=True, exist_ok=True)
        dataset.save_json(out)
        self.emit({
            'status': 'ok',
            'command': 'generate-dataset',
            'path': str(out),
            'family': spec.family,
            'seed': spec.seed,
            'graphs': len(dataset),
            'class_count': dataset.class_count,
            'max_nodes': dataset.max_nodes,
            'wl_distinguishable_groups': wl_distinguishable_groups(dataset),
        })
