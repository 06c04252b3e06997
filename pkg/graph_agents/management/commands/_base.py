"""
Shared plumbing of the lab's management commands.

Every lab command validates its flags before touching the filesystem and
reports failures as one JSON line on stderr:

    {"status": "error", "error": <code>, "message": ...}

Lab errors exit with status 1; usage errors (bad flags, unparseable
arguments) exit with status 2.
"""

import hashlib
import json
import logging
from pathlib import Path
import sys

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError, handle_default_options
from django.db import connections
import numpy as np

from graph_agents.config import load_config
from graph_agents.exceptions import ConfigError, FlagError, LabError, MissingFile
from graph_agents.forms import RunFlagsForm, validated
from graph_agents.services import ExperimentService, RunRecorder

logger = logging.getLogger(__name__)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def to_json(payload, indent=None):
    return json.dumps(payload, sort_keys=True, indent=indent, default=_json_default)


def error_payload(error):
    if isinstance(error, LabError):
        return error.as_dict()
    message = str(error)
    if message.startswith('Error: '):
        message = message[len('Error: '):]
    return {'status': 'error', 'error': 'usage_error', 'message': message}


def exit_status(error):
    return 2 if isinstance(error, (CommandError, FlagError)) else 1


class LabCommand(BaseCommand):
    """
    Base class of every lab command.

    Subclasses implement `handle` and call `emit` for their stdout payload.
    """

    requires_system_checks = []

    def run_from_argv(self, argv):
        parser = self.create_parser(argv[0], argv[1])
        options = None
        try:
            options = parser.parse_args(argv[2:])
            cmd_options = vars(options)
            args = cmd_options.pop('args', ())
            handle_default_options(options)
            self.execute(*args, **cmd_options)
        except (CommandError, LabError) as e:
            if options is not None and options.traceback:
                raise
            if isinstance(e, LabError):
                logger.error(f"{argv[1]} failed: {e.code}: {e.message}")
            self.stderr.write(to_json(error_payload(e)))
            sys.exit(exit_status(e))
        finally:
            connections.close_all()

    def emit(self, payload):
        self.stdout.write(to_json(payload))

    def emit_report(self, report, out=None):
        """Print a check report, and write it to `out` as well when given."""
        if out:
            path = Path(out)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(to_json(report, indent=2) + '\n')
        self.emit(report)

    #shared flags

    def add_run_arguments(self, parser):
        parser.add_argument('--seed', type=int, default=settings.AGENTLAB_DEFAULT_SEED, help='Root seed of every random stream')
        parser.add_argument('--workers', type=int, default=settings.AGENTLAB_WORKERS, help='Parallel seed/cell jobs; 1 is bit-reproducible')
        parser.add_argument('--out', default=None, help='Output directory (default: AGENTLAB_OUTPUT_DIR/<command>-<seed>)')

    def add_recipe_arguments(self, parser):
        parser.add_argument('--training-steps', type=int, default=None, help='Override the training step budget')
        parser.add_argument('--seeds', default=None, help='Comma-separated model seeds (default 0..9)')
        parser.add_argument('--batch-size', type=int, default=None, help='Override the batch size')
        parser.add_argument('--eval-every', type=int, default=None, help='Override the evaluation cadence')
        parser.add_argument('--steps', type=int, default=16, help='Walk length of every cell')
        parser.add_argument('--hidden', type=int, default=None, help='Pin the embedding width of every cell (default 64, or searched by the grid)')

    def run_flags(self, options, command):
        """
        Validate --seed/--workers/--out.

        returns:
            (seed, workers, out Path)

        raises:
            FlagError: On invalid values
        """
        out = options.get('out') or str(Path(settings.AGENTLAB_OUTPUT_DIR) / f"{command}-{options.get('seed')}")
        data = {'seed': options.get('seed'), 'workers': options.get('workers', 1), 'out': out}
        try:
            flags = validated(RunFlagsForm, data, 'flags')
        except LabError as e:
            raise FlagError(e.message, e.details)
        return flags['seed'], flags['workers'], Path(flags['out'])

    def recipe(self, options):
        """ExperimentConfig overrides collected from the recipe flags."""
        recipe = {}
        if options.get('training_steps') is not None:
            if options['training_steps'] < 0:
                raise FlagError("--training-steps must be non-negative")
            recipe['training_steps'] = options['training_steps']
        if options.get('batch_size') is not None:
            if options['batch_size'] < 1:
                raise FlagError("--batch-size must be positive")
            recipe['batch_size'] = options['batch_size']
        if options.get('eval_every') is not None:
            if options['eval_every'] < 1:
                raise FlagError("--eval-every must be positive")
            recipe['eval_every'] = options['eval_every']
        if options.get('seeds'):
            try:
                seeds = tuple(int(s) for s in options['seeds'].split(','))
            except ValueError:
                raise FlagError(f"--seeds must be comma-separated integers, got {options['seeds']!r}")
            if any(s < 0 for s in seeds):
                raise FlagError("--seeds must be non-negative")
            recipe['seeds'] = seeds
        if options.get('steps') is not None and options['steps'] < 1:
            raise FlagError("--steps must be positive")
        if options.get('hidden') is not None and (options['hidden'] < 2 or options['hidden'] % 2):
            raise FlagError(f"--hidden must be even and at least 2, got {options['hidden']}")
        return recipe

    def existing_file(self, path, flag):
        if not path:
            raise FlagError(f"{flag} is required")
        path = Path(path)
        if not path.is_file():
            raise MissingFile(f"{flag} file not found: {path}", {'path': str(path)})
        return path

    def load_config_flag(self, path):
        return load_config(self.existing_file(path, '--config'))

    def comma_list(self, value, cast, flag, choices=None):
        """Parse a comma-separated flag value, or return None when the flag is absent."""
        if value is None:
            return None
        try:
            items = tuple(cast(item.strip()) for item in value.split(',') if item.strip())
        except ValueError:
            raise FlagError(f"{flag} has an invalid value: {value!r}")
        if not items:
            raise FlagError(f"{flag} must not be empty")
        if choices is not None:
            unknown = [item for item in items if item not in choices]
            if unknown:
                raise FlagError(f"{flag} has unknown values {unknown}; choose from {list(choices)}")
        return items

    #experiment runs

    def run_experiment(self, command, name, config, seed, workers, out, work):
        """
        Run `work` inside a RunRecorder and print the run summary.

        params:
            command: Command name for the ledger
            name: Run name
            config: JSON-able description of the run
            seed: Root seed
            workers: Worker count
            out: Run directory
            work: Callable returning (metrics dict, cells, best cell index or None)

        returns:
            The metrics dict
        """
        config_hash = content_hash(config)
        recorder = RunRecorder(command, name, config, config_hash, seed, out, workers).start()
        try:
            metrics, cells, best_index = work()
        except LabError as e:
            recorder.fail(e)
            raise
        recorder.record_cells(cells, best_index)
        recorder.finish(metrics)
        self.emit({'status': 'ok', 'command': command, 'config_hash': config_hash, 'out': str(out), **summary(metrics)})
        return metrics


def content_hash(payload):
    canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'), default=_json_default)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def summary(metrics):
    return {key: metrics[key] for key in ('mean_accuracy', 'std_accuracy', 'best_cell', 'rows') if key in metrics}


class TableCommand(LabCommand):
    """
    Base of the experiment-table commands.

    Subclasses set `plan_method` to the ExperimentService planner they use
    and implement `table_arguments` to turn their flags into its keyword
    arguments. Gridded tables search the synthetic-task grid per row unless
    --no-grid is given.
    """

    plan_method = None
    gridded = False

    def add_arguments(self, parser):
        self.add_run_arguments(parser)
        self.add_recipe_arguments(parser)
        if self.gridded:
            parser.add_argument('--no-grid', action='store_true', help='Train one cell per row instead of searching the grid')
            parser.add_argument('--lr-grid', action='store_true', help='Add the learning-rate axis to the grid')

    def table_arguments(self, options):
        return {}

    def handle(self, *args, **options):
        command = self.method_command()
        seed, workers, out = self.run_flags(options, command)
        recipe = self.recipe(options)
        arguments = self.table_arguments(options)
        grid = {} if options.get('no_grid') else None
        service = ExperimentService(
            seed, workers, out, recipe, options['steps'], options['hidden'], grid, options.get('lr_grid', False),
        )
        try:
            plans = getattr(service, self.plan_method)(**arguments)
        except ConfigError as e:
            raise FlagError(e.message, e.details)
        config = {
            'command': command,
            'recipe': {key: list(value) if isinstance(value, tuple) else value for key, value in recipe.items()},
            'steps': options['steps'],
            'hidden': options['hidden'],
            'grid': not options.get('no_grid', False) and self.gridded,
            'lr_grid': options.get('lr_grid', False),
            'arguments': {key: list(value) if isinstance(value, tuple) else value for key, value in arguments.items()},
        }

        def work():
            rows, cells = service.run_plans(plans)
            return {'rows': rows, 'cells': [cell.to_dict() for cell in cells]}, cells, None

        self.run_experiment(command, command, config, seed, workers, out, work)

    def method_command(self):
        return self.__module__.rsplit('.', 1)[-1].replace('_', '-')
