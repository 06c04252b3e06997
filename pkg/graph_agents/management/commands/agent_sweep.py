from graph_agents.datasets import DATASET_FAMILIES
from graph_agents.exceptions import FlagError
from graph_agents.services import AGENT_SWEEP_COUNTS

from ._base import TableCommand


class Command(TableCommand):
    help = 'Accuracy as a function of the agent count on a synthetic task'
    plan_method = 'plan_agent_sweep'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--counts', default=None, help=f"Comma-separated agent counts (default {','.join(map(str, AGENT_SWEEP_COUNTS))})")
        parser.add_argument('--family', default='four-cycles', choices=DATASET_FAMILIES, help='Dataset family')

    def table_arguments(self, options):
        arguments = {'family': options['family']}
        counts = self.comma_list(options['counts'], int, '--counts')
        if counts:
            if any(k < 1 for k in counts):
                raise FlagError("--counts must be positive")
            arguments['counts'] = counts
        return arguments
