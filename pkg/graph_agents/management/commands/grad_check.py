from django.conf import settings

from graph_agents.checks import GradCheckService
from graph_agents.exceptions import CheckFailed, FlagError

from ._base import LabCommand


class Command(LabCommand):
    help = 'Compare tape gradients with central finite differences for every op and a short AgentNet rollout'

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, default=settings.AGENTLAB_DEFAULT_SEED, help='Root seed of the evaluation points')
        parser.add_argument('--points', type=int, default=20, help='Random evaluation points per op')
        parser.add_argument('--out', default=None, help='Also write the report to this JSON file')

    def handle(self, *args, **options):
        if options['seed'] < 0:
            raise FlagError("--seed must be non-negative")
        if options['points'] < 1:
            raise FlagError("--points must be positive")
        result = GradCheckService(options['seed'], options['points']).run()
        self.emit_report(result, options['out'])
        if not result['passed']:
            failed = [c['name'] for c in result['checks'] if not c['pass']]
            raise CheckFailed(f"{len(failed)} gradient check(s) failed", {'failed': failed})
