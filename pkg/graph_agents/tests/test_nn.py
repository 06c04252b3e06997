import math
import tempfile
from pathlib import Path

from django.test import SimpleTestCase
import numpy as np

from graph_agents.autodiff import Tensor
from graph_agents.exceptions import ConfigError, NonFiniteError, ShapeError
from graph_agents.nn import (
    AdamWState, Linear, MlpBlock, adamw_step, clip_global_norm, cosine_lr, load_checkpoint, parameter_hash,
    save_checkpoint, sinusoidal_time_embedding,
)


def named(values, name='w'):
    return {name: Tensor(np.asarray(values, dtype=np.float64), requires_grad=True, name=name)}


class BlockTests(SimpleTestCase):
    def test_fresh_block_is_identity_on_residual(self):
        rng = np.random.default_rng(0)
        block = MlpBlock(6, 8, 4, rng)
        inputs = Tensor(rng.normal(size=(3, 6)))
        residual = Tensor(rng.normal(size=(3, 4)))
        self.assertTrue(np.array_equal(block(inputs, residual).values, residual.values))

    def test_encoder_block_has_no_norm(self):
        block = MlpBlock(3, 4, 4, np.random.default_rng(0), name='enc', pre_norm=False, zero_output=False)
        self.assertNotIn('enc.norm.gain', block.parameters())
        self.assertTrue(np.any(block.output.weight.values != 0))

    def test_residual_shape_mismatch(self):
        block = MlpBlock(4, 4, 4, np.random.default_rng(0))
        with self.assertRaises(ShapeError):
            block(Tensor(np.ones((2, 4))), Tensor(np.ones((2, 3))))

    def test_linear_width_check(self):
        layer = Linear(3, 2, np.random.default_rng(0))
        with self.assertRaises(ShapeError):
            layer(Tensor(np.ones((1, 4))))


class TimeEmbeddingTests(SimpleTestCase):
    def test_step_zero(self):
        emb = sinusoidal_time_embedding(0, 8)
        self.assertEqual(emb[0::2].tolist(), [0.0] * 4)
        self.assertEqual(emb[1::2].tolist(), [1.0] * 4)

    def test_norm_bound(self):
        for t in (1, 7, 250):
            self.assertLessEqual(np.linalg.norm(sinusoidal_time_embedding(t, 16)), math.sqrt(16) + 1e-12)

    def test_odd_width(self):
        with self.assertRaises(ShapeError):
            sinusoidal_time_embedding(1, 5)


class ScheduleTests(SimpleTestCase):
    def test_cosine_endpoints(self):
        self.assertAlmostEqual(cosine_lr(0, 1000), 1e-4)
        self.assertAlmostEqual(cosine_lr(1000, 1000), 1e-11, places=20)
        self.assertAlmostEqual(cosine_lr(500, 1000), (1e-4 + 1e-11) / 2)

    def test_cosine_is_nonincreasing(self):
        rates = [cosine_lr(t, 50, lr_start=1e-3, lr_end=1e-6) for t in range(-2, 55)]
        self.assertTrue(all(a >= b for a, b in zip(rates, rates[1:])))
        self.assertAlmostEqual(rates[0], 1e-3, places=15)
        self.assertAlmostEqual(rates[-1], 1e-6, places=15)

    def test_clip_scales_jointly(self):
        grads = {'a': np.array([2.0, 0.0]), 'b': np.array([0.0, 2.0 * math.sqrt(3.0)])}
        clipped, norm = clip_global_norm(grads, 1.0)
        self.assertAlmostEqual(norm, 4.0)
        np.testing.assert_allclose(clipped['a'], [0.5, 0.0])
        np.testing.assert_allclose(clipped['b'], [0.0, 0.5 * math.sqrt(3.0)])

    def test_clip_leaves_small_gradients(self):
        clipped, norm = clip_global_norm({'a': np.array([0.3, 0.4])}, 1.0)
        self.assertAlmostEqual(norm, 0.5)
        self.assertEqual(clipped['a'].tolist(), [0.3, 0.4])


class AdamWTests(SimpleTestCase):
    def test_zero_gradient_without_decay_is_a_no_op(self):
        params = named([1.0, -2.0])
        adamw_step(AdamWState(weight_decay=0.0), params, {'w': np.zeros(2)})
        self.assertEqual(params['w'].values.tolist(), [1.0, -2.0])

    def test_decoupled_decay(self):
        params = named([1.0, -2.0])
        adamw_step(AdamWState(lr=1e-4, weight_decay=0.1), params, {'w': np.zeros(2)})
        np.testing.assert_allclose(params['w'].values, np.array([1.0, -2.0]) * (1.0 - 1e-5), rtol=1e-15)

    def test_first_step_moves_by_lr_against_the_sign(self):
        params = named([0.5, 0.5, 0.5])
        adamw_step(AdamWState(lr=1e-3, weight_decay=0.0), params, {'w': np.array([3.0, -0.2, 1e-3])})
        np.testing.assert_allclose(params['w'].values, [0.499, 0.501, 0.499], rtol=1e-4)

    def test_three_steps_match_the_closed_form(self):
        beta1, beta2, lr, eps = 0.9, 0.999, 1e-2, 1e-8
        grads = [np.array([0.5, -2.0]), np.array([-1.0, 0.25]), np.array([3.0, 0.0])]
        w = Tensor(np.array([1.0, -1.0]))
        state = AdamWState(lr=lr, betas=(beta1, beta2), weight_decay=0.0, eps=eps)
        expected = w.values.copy()
        for t in range(1, 4):
            adamw_step(state, {'w': w}, {'w': grads[t - 1]})
            m = (1 - beta1) * sum(beta1 ** (t - i) * grads[i - 1] for i in range(1, t + 1))
            v = (1 - beta2) * sum(beta2 ** (t - i) * grads[i - 1] ** 2 for i in range(1, t + 1))
            expected = expected - lr * (m / (1 - beta1 ** t)) / (np.sqrt(v / (1 - beta2 ** t)) + eps)
            np.testing.assert_allclose(w.values, expected, rtol=1e-12, atol=1e-12)
        self.assertEqual(state.step, 3)

    def test_non_finite_gradient_updates_nothing(self):
        params = named([1.0, 1.0])
        state = AdamWState()
        with self.assertRaises(NonFiniteError):
            adamw_step(state, params, {'w': np.array([np.nan, 0.0])})
        self.assertEqual(params['w'].values.tolist(), [1.0, 1.0])
        self.assertEqual(state.step, 0)


class CheckpointTests(SimpleTestCase):
    def test_save_and_load_is_lossless(self):
        rng = np.random.default_rng(4)
        params = MlpBlock(3, 5, 2, rng, zero_output=False).parameters()
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'params.json'
            digest = save_checkpoint(path, params, {'seed': 4})
            loaded, metadata = load_checkpoint(path)
        self.assertEqual(digest, parameter_hash(params))
        self.assertEqual(parameter_hash(loaded), digest)
        self.assertEqual(metadata, {'seed': 4})

    def test_missing_checkpoint(self):
        with self.assertRaises(ConfigError):
            load_checkpoint('/nonexistent/params.json')

    def test_wrong_format(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'other.json'
            path.write_text('{"format": "something-else", "parameters": []}')
            with self.assertRaises(ConfigError):
                load_checkpoint(path)
