from django.conf import settings

from graph_agents.services import export_heatmaps

from ._base import LabCommand


class Command(LabCommand):
    help = 'Write per-node visit counts of one rollout per dataset graph as heatmap_<index>.csv (node_id,visit_count)'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Experiment config JSON naming the dataset and model')
        parser.add_argument('--checkpoint', default=None, help='Trained parameters; a fresh initialization when omitted')
        parser.add_argument('--seed', type=int, default=settings.AGENTLAB_DEFAULT_SEED, help='Root seed of parameters and rollouts')
        parser.add_argument('--out', default=None, help='Output directory')

    def handle(self, *args, **options):
        seed, _, out = self.run_flags(options, 'heatmap')
        checkpoint = self.existing_file(options['checkpoint'], '--checkpoint') if options['checkpoint'] else None
        config = self.load_config_flag(options['config'])
        paths = export_heatmaps(config, checkpoint, seed, out)
        self.emit({'status': 'ok', 'command': 'heatmap', 'out': str(out), 'files': [p.name for p in paths]})
