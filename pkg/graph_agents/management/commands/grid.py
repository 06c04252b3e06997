from graph_agents.services import TrainingService, agentnet_grid

from ._base import LabCommand


class Command(LabCommand):
    help = (
        "Train every cell of a grid and select the best cell by mean held-out accuracy. "
        "The grid comes from the config's 'grid' section, or the default AgentNet grid when it is empty."
    )

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Base experiment config JSON file')
        parser.add_argument('--lr-grid', action='store_true', help='Add the learning-rate axis {1e-3, 5e-4, 1e-4} to the default grid')
        self.add_run_arguments(parser)

    def handle(self, *args, **options):
        seed, workers, out = self.run_flags(options, 'grid')
        config = self.load_config_flag(options['config'])
        axes = config.grid
        if not axes:
            dataset, _, _ = config.dataset.build()
            axes = agentnet_grid(dataset.max_nodes, options['lr_grid'])
        service = TrainingService(seed, workers, out)

        def work():
            best, cells = service.grid_search(config, axes)
            metrics = {
                'config_hash': config.config_hash,
                'axes': axes,
                'best_cell': best.index,
                'best_label': best.label,
                'cells': [cell.to_dict() for cell in cells],
            }
            return metrics, cells, best.index

        self.run_experiment('grid', config.name, {**config.to_dict(), 'grid': axes}, seed, workers, out, work)
