from graph_agents.exceptions import FlagError
from graph_agents.services import FIG3_SIZES

from ._base import TableCommand


class Command(TableCommand):
    help = 'Crossed-vs-plain ladder accuracy as the graph grows, with k and the walk length fixed'
    plan_method = 'plan_fig3_density_sweep'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--sizes', default=None, help=f"Comma-separated node counts (default {','.join(map(str, FIG3_SIZES))})")
        parser.add_argument('--agents', type=int, default=16, help='Agent count of every cell')

    def table_arguments(self, options):
        arguments = {}
        sizes = self.comma_list(options['sizes'], int, '--sizes')
        if sizes:
            if any(size < 6 or size % 2 for size in sizes):
                raise FlagError("--sizes must be even node counts of at least 6")
            arguments['sizes'] = sizes
        if options['agents'] < 1:
            raise FlagError("--agents must be positive")
        arguments['agents'] = options['agents']
        return arguments
