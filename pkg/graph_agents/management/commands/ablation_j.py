from graph_agents.services import TABLE1_DATASETS

from ._base import TableCommand


class Command(TableCommand):
    help = 'Step ablations of the Full model (no node update, no neighborhood update, both plus update-for-all)'
    plan_method = 'plan_appendix_j'
    gridded = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--datasets', default=None, help=f"Comma-separated subset of {','.join(TABLE1_DATASETS)}")

    def table_arguments(self, options):
        datasets = self.comma_list(options['datasets'], str, '--datasets', TABLE1_DATASETS)
        return {'datasets': datasets} if datasets else {}
