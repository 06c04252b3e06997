from graph_agents.exceptions import FlagError, GraphError
from graph_agents.graphs import (
    AnchoredPattern, Graph, clique_profile_at, count_anchored_occurrences, count_cycles_through, gamma_h,
    is_isomorphic_small, one_wl_equivalent, r_hop_neighborhood, wl_hash,
)

from ._base import LabCommand


class Command(LabCommand):
    help = 'Exact brute-force graph oracles over graphs in the text format; prints JSON'

    def add_arguments(self, parser):
        oracles = parser.add_subparsers(dest='oracle', required=True, metavar='{cliques|cycles|neighborhood|isomorphic|occurrences|wl}')

        cliques = oracles.add_parser('cliques', help='Clique counts through a node, by size')
        cliques.add_argument('--graph', required=True, help='Graph text file')
        cliques.add_argument('--node', type=int, required=True, help='Node id')
        cliques.add_argument('--max-size', type=int, default=None, help='Largest clique size to count')

        cycles = oracles.add_parser('cycles', help='Number of simple cycles of a given length through a node')
        cycles.add_argument('--graph', required=True, help='Graph text file')
        cycles.add_argument('--node', type=int, required=True, help='Node id')
        cycles.add_argument('--length', type=int, required=True, help='Cycle length, at least 3')

        neighborhood = oracles.add_parser('neighborhood', help='Induced r-hop neighborhood of a node')
        neighborhood.add_argument('--graph', required=True, help='Graph text file')
        neighborhood.add_argument('--node', type=int, required=True, help='Center node id')
        neighborhood.add_argument('--radius', type=int, required=True, help='Radius r >= 0')

        isomorphic = oracles.add_parser('isomorphic', help='Feature-preserving isomorphism test (at most 24 nodes)')
        isomorphic.add_argument('--graph', required=True, help='First graph text file')
        isomorphic.add_argument('--other', required=True, help='Second graph text file')

        occurrences = oracles.add_parser('occurrences', help='Induced occurrences of an anchored pattern around a node')
        occurrences.add_argument('--graph', required=True, help='Host graph text file')
        occurrences.add_argument('--node', type=int, required=True, help='Node the anchor maps to')
        occurrences.add_argument('--pattern', required=True, help='Pattern graph text file (at most 10 nodes)')
        occurrences.add_argument('--anchor', type=int, default=0, help='Anchor node of the pattern')
        occurrences.add_argument('--match-features', action='store_true', help='Require equal node features')

        wl = oracles.add_parser('wl', help='1-WL color refinement hash, and equivalence with a second graph')
        wl.add_argument('--graph', required=True, help='Graph text file')
        wl.add_argument('--other', default=None, help='Second graph text file')
        wl.add_argument('--iterations', type=int, default=None, help='Refinement rounds (default n)')

    def read_graph(self, path, flag='--graph'):
        path = self.existing_file(path, flag)
        try:
            return Graph.from_text(path.read_text())
        except GraphError as e:
            raise GraphError(f"{path}: {e.message}", {**e.details, 'path': str(path)})

    def handle(self, *args, **options):
        oracle = options['oracle']
        g = self.read_graph(options['graph'])
        payload = {'status': 'ok', 'command': 'oracle', 'oracle': oracle}

        if oracle == 'cliques':
            if options['max_size'] is not None and options['max_size'] < 3:
                raise FlagError("--max-size must be at least 3")
            profile = clique_profile_at(g, options['node'], options['max_size'])
            payload.update(node=options['node'], counts={str(size): count for size, count in profile.items()})
        elif oracle == 'cycles':
            if options['length'] < 3:
                raise FlagError("--length must be at least 3")
            count = count_cycles_through(g, options['node'], options['length'])
            payload.update(node=options['node'], length=options['length'], count=count)
        elif oracle == 'neighborhood':
            if options['radius'] < 0:
                raise FlagError("--radius must be non-negative")
            ball, mapping = r_hop_neighborhood(g, options['node'], options['radius'])
            payload.update(node=options['node'], radius=options['radius'], nodes=list(mapping), graph=ball.to_dict())
        elif oracle == 'isomorphic':
            payload['isomorphic'] = is_isomorphic_small(g, self.read_graph(options['other'], '--other'))
        elif oracle == 'occurrences':
            h = self.read_graph(options['pattern'], '--pattern')
            pattern = AnchoredPattern.from_edges(
                h.node_count, list(h.edges()), options['anchor'], h.node_features, options['match_features'],
            )
            payload.update(
                node=options['node'],
                count=count_anchored_occurrences(g, options['node'], pattern),
                incident_nodes=gamma_h(g, pattern),
            )
        else:
            if options['iterations'] is not None and options['iterations'] < 0:
                raise FlagError("--iterations must be non-negative")
            payload['hash'] = wl_hash(g, options['iterations'])
            if options['other']:
                payload['equivalent'] = one_wl_equivalent(g, self.read_graph(options['other'], '--other'))
        self.emit(payload)
