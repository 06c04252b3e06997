from django.test import SimpleTestCase

from graph_agents.checks import GradCheckService, TheoryCheckService, check, report


class ReportTests(SimpleTestCase):
    def test_all_passing(self):
        result = report('suite', 3, [check('a', 1.0, 0.5, True)])
        self.assertEqual(result['status'], 'ok')
        self.assertTrue(result['passed'])
        self.assertEqual(result['seed'], 3)

    def test_one_failure_fails_the_report(self):
        result = report('suite', 0, [check('a', 1.0, 0.5, True), check('b', 0, 2, False)])
        self.assertEqual(result['status'], 'failed')
        self.assertFalse(result['passed'])

    def test_pass_is_a_plain_bool(self):
        self.assertIs(check('a', 1, 1, 1)['pass'], True)


class TheoryCheckTests(SimpleTestCase):
    def setUp(self):
        self.service = TheoryCheckService(seed=0, quick=True)

    def assertAllPass(self, checks):
        self.assertTrue(checks)
        for c in checks:
            self.assertEqual(set(c), {'name', 'bound', 'observed', 'pass'})
            self.assertTrue(c['pass'], c)

    def test_exploration_bounds(self):
        self.assertAllPass(self.service.check_iddfs())
        self.assertAllPass(self.service.check_dfs())

    def test_counting_walks_agree_with_the_oracle(self):
        self.assertAllPass(self.service.check_clique_walk())
        self.assertAllPass(self.service.check_cycle_walk())

    def test_fingerprints(self):
        self.assertAllPass(self.service.check_fingerprints())
        self.assertAllPass(self.service.check_two_wl_fingerprint())

    def test_gadget_triangles(self):
        self.assertEqual(self.service.check_lemma4()[0]['observed'], [1, 0])

    def test_two_agent_bound_names_the_expected_rate(self):
        g1 = self.service.check_theorem8()[0]
        self.assertEqual(g1['name'], 'theorem8_two_agents_g1')
        self.assertEqual(set(g1['bound']), {'expected', 'floor'})
        self.assertTrue(0.0 < g1['bound']['floor'] < g1['bound']['expected'] < 1.0)
        self.assertTrue(g1['pass'], g1)

    def test_access_model(self):
        self.assertAllPass(self.service.check_access_model())

    def test_deterministic_in_the_seed(self):
        first = TheoryCheckService(seed=4, quick=True).check_placement()
        second = TheoryCheckService(seed=4, quick=True).check_placement()
        self.assertEqual(first, second)

    def test_report_shape(self):
        result = self.service.run()
        names = [c['name'] for c in result['checks']]
        self.assertEqual(len(names), len(set(names)))
        for name in ('iddfs_step_bound_ratio', 'theorem8_two_agents_g1', 'placement_uniformity_p_value'):
            self.assertIn(name, names)
        self.assertEqual(result['suite'], 'theory-check')


class GradCheckServiceTests(SimpleTestCase):
    def test_every_op_and_the_rollout_pass(self):
        result = GradCheckService(seed=0, points=2).run()
        failed = [c['name'] for c in result['checks'] if not c['pass']]
        self.assertEqual(failed, [])
        names = {c['name'] for c in result['checks']}
        self.assertIn('agentnet_rollout', names)
        self.assertIn('straight_through_reaches_transition_bias', names)
        self.assertTrue(any(name.startswith('op_') for name in names))
