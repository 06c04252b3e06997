from graph_agents.services import TrainingService

from ._base import LabCommand


class Command(LabCommand):
    help = 'Train every seed of an experiment config and write config.json, metrics.json, results.csv and checkpoints under --out'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Experiment config JSON file')
        self.add_run_arguments(parser)

    def handle(self, *args, **options):
        seed, workers, out = self.run_flags(options, 'train')
        config = self.load_config_flag(options['config'])
        service = TrainingService(seed, workers, out)

        def work():
            cell = service.run_cells([({}, config)])[0]
            return cell.metrics.to_dict(), [cell], None

        self.run_experiment('train', config.name, config.to_dict(), seed, workers, out, work)
