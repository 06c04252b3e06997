from django.conf import settings

from graph_agents.checks import TheoryCheckService
from graph_agents.exceptions import CheckFailed, FlagError

from ._base import LabCommand


class Command(LabCommand):
    help = 'Run the walking-agent theory suite and print a JSON report of {name, bound, observed, pass} checks'

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, default=settings.AGENTLAB_DEFAULT_SEED, help='Root seed of every check')
        parser.add_argument('--quick', action='store_true', help='Small sample sizes (seconds instead of minutes)')
        parser.add_argument('--out', default=None, help='Also write the report to this JSON file')

    def handle(self, *args, **options):
        if options['seed'] < 0:
            raise FlagError("--seed must be non-negative")
        result = TheoryCheckService(options['seed'], options['quick']).run()
        self.emit_report(result, options['out'])
        if not result['passed']:
            failed = [c['name'] for c in result['checks'] if not c['pass']]
            raise CheckFailed(f"{len(failed)} theory check(s) failed", {'failed': failed})

