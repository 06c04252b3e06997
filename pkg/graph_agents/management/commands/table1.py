from graph_agents.services import TABLE1_DATASETS, TABLE1_VARIANTS

from ._base import TableCommand


class Command(TableCommand):
    help = 'Each AgentNet variant on 4-cycles, CSL and the 2-WL pair, with k = n agents'
    plan_method = 'plan_table1'
    gridded = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--variants', default=None, help=f"Comma-separated subset of {','.join(TABLE1_VARIANTS)}")
        parser.add_argument('--datasets', default=None, help=f"Comma-separated subset of {','.join(TABLE1_DATASETS)}")

    def table_arguments(self, options):
        arguments = {}
        variants = self.comma_list(options['variants'], str, '--variants', TABLE1_VARIANTS)
        datasets = self.comma_list(options['datasets'], str, '--datasets', TABLE1_DATASETS)
        if variants:
            arguments['variants'] = variants
        if datasets:
            arguments['datasets'] = datasets
        return arguments
