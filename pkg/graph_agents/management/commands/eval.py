from django.conf import settings

from graph_agents.exceptions import FlagError
from graph_agents.services import evaluate_checkpoint

from ._base import LabCommand


class Command(LabCommand):
    help = "Recompute train and test accuracy of a saved parameter file on a config's dataset"

    def add_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True, help='params_seed<S>.json written by train or grid')
        parser.add_argument('--config', required=True, help='Experiment config JSON the checkpoint was trained with')
        parser.add_argument('--seed', type=int, default=settings.AGENTLAB_DEFAULT_SEED, help='Root seed of the evaluation rollouts')

    def handle(self, *args, **options):
        if options['seed'] < 0:
            raise FlagError("--seed must be non-negative")
        checkpoint = self.existing_file(options['checkpoint'], '--checkpoint')
        config = self.load_config_flag(options['config'])
        result = evaluate_checkpoint(config, checkpoint, options['seed'])
        self.emit({'status': 'ok', 'command': 'eval', 'checkpoint': str(checkpoint), **result})
