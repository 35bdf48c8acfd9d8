from .. import *
from ..learnerObject import combine_probabilities, member_params, weighted_ensemble_proba, weighted_vote

from pathlib import Path
import numpy as np
import unittest


class FixedProbabilities:
    """Stands in for a trained guru that always predicts the same class probabilities"""
    def __init__(self, probs):
        self.probs = np.asarray(probs, dtype=np.float64)
        self.m = len(self.probs)

    def predict_proba(self, features):
        return np.tile(self.probs, (len(np.atleast_2d(features)), 1))


def separable_batch(rng, count=64, d=8):
    """Two well separated clusters at -1 and +1 in every dimension"""
    labels = rng.integers(0, 2, count)
    features = (2 * labels[:, None] - 1) + rng.normal(0, 0.3, (count, d))
    return features.astype(np.float32), labels


class LearnerTests(unittest.TestCase):

    @staticmethod
    def _write_path(name):
        return Path(Path(__file__).parent, "Data", "Write", name)

    def test_param_count(self):
        model = MlpClassifier(784, 100, 10, seed=0)
        self.assertEqual(model.param_count(), 89610)
        self.assertEqual(member_params(784, 100, 10), model.param_count())
        self.assertEqual([p.shape for p in model.parameters],
                         [(784, 100), (100,), (100, 100), (100,), (100, 10), (10,)])

    def test_budget_inversion(self):
        self.assertEqual(ParameterBudget(89610 * 8, 8).hidden_width(784, 10), 100)
        self.assertEqual(ParameterBudget(member_params(784, 100, 10) * 8 + 7, 8).hidden_width(784, 10), 100)
        self.assertEqual(ParameterBudget(member_params(784, 101, 10) * 8, 8).hidden_width(784, 10), 101)

        # A single learner of width 256 keeps its own width
        self.assertEqual(ParameterBudget.from_reference(1).hidden_width(784, 10), 256)
        h = ParameterBudget.from_reference(8).hidden_width(784, 10)
        self.assertLessEqual(member_params(784, h, 10), member_params(784, 256, 10) / 8)
        self.assertGreater(member_params(784, h + 1, 10), member_params(784, 256, 10) / 8)

        with self.assertRaises(ValueError):
            ParameterBudget(100, 8).hidden_width(784, 10)

    def test_invalid_dims(self):
        for dims in [(0, 4, 2), (4, 0, 2), (4, 4, 0)]:
            with self.assertRaises(ValueError):
                MlpClassifier(*dims)

    def test_seeded_initialisation(self):
        first = MlpClassifier(20, 16, 5, seed=(3, 0, 0, 1))
        second = MlpClassifier(20, 16, 5, seed=(3, 0, 0, 1))
        other = MlpClassifier(20, 16, 5, seed=(3, 0, 0, 2))

        for a, b in zip(first.parameters, second.parameters):
            self.assertTrue(np.array_equal(a, b))
        self.assertFalse(np.array_equal(first.parameters[0], other.parameters[0]))

        self.assertTrue(all((b == 0).all() for b in first.parameters[1::2]))
        self.assertLessEqual(np.abs(first.parameters[0]).max(), 1 / np.sqrt(20))
        self.assertTrue(all((m == 0).all() for m in first.adam.first + first.adam.second))

        again = init_classifier((20, 16, 5), (3, 0, 0, 1))
        self.assertTrue(all(np.array_equal(a, b) for a, b in zip(first.parameters, again.parameters)))
        for dims in [(0, 16, 5), (20, 0, 5), (20, 16, 0)]:
            with self.assertRaises(ValueError):
                init_classifier(dims, 0)

    def test_predict_proba(self):
        rng = np.random.default_rng(1)
        model = MlpClassifier(784, 32, 10, seed=4)
        probs = model.predict_proba(rng.uniform(0, 1, (16, 784)))

        self.assertEqual(probs.shape, (16, 10))
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-6)
        self.assertTrue((probs.max(axis=1) - probs.min(axis=1) < 0.5).all())

        extreme = model.predict_proba(rng.normal(0, 1e3, (4, 784)))
        self.assertTrue(np.isfinite(extreme).all())
        np.testing.assert_allclose(extreme.sum(axis=1), 1.0, atol=1e-6)

        with self.assertRaises(ValueError):
            model.predict_proba(np.zeros((2, 783)))

    def test_gradient_check(self):
        """Analytic gradients of every layer, biases included, against central differences"""
        rng = np.random.default_rng(2)
        model = MlpClassifier(4, 3, 3, seed=7, dtype=np.float64)
        for bias in model.parameters[1::2]:
            bias += rng.normal(0, 0.1, bias.shape)
        features = rng.normal(0, 1, (6, 4))
        labels = rng.integers(0, 3, 6)

        _, analytic = model.gradients(features, labels)
        step = 1e-4
        worst = 0.0
        for parameter, gradient in zip(model.parameters, analytic):
            for index in np.ndindex(parameter.shape):
                original = parameter[index]
                parameter[index] = original + step
                upper = model.gradients(features, labels)[0]
                parameter[index] = original - step
                lower = model.gradients(features, labels)[0]
                parameter[index] = original

                numeric = (upper - lower) / (2 * step)
                worst = max(worst, abs(numeric - gradient[index]) / max(1e-8, abs(numeric) + abs(gradient[index])))
        self.assertLess(worst, 1e-4)

    def test_loss_decreases(self):
        rng = np.random.default_rng(3)
        model = MlpClassifier(16, 32, 4, seed=5)
        features = rng.normal(0, 1, (64, 16)).astype(np.float32)
        labels = rng.integers(0, 4, 64)

        losses = [model.learn_batch(features, labels) for _ in range(11)]
        self.assertTrue(all(later < earlier for earlier, later in zip(losses, losses[1:])))

    def test_zero_step_size(self):
        rng = np.random.default_rng(4)
        model = MlpClassifier(8, 6, 3, seed=1, learning_rate=0.0)
        before = [p.copy() for p in model.parameters]
        features, labels = rng.normal(0, 1, (10, 8)), rng.integers(0, 3, 10)

        losses = [model.learn_batch(features, labels) for _ in range(3)]
        self.assertEqual(losses[0], losses[-1])
        for a, b in zip(before, model.parameters):
            self.assertTrue(np.array_equal(a, b))

    def test_learning_is_independent(self):
        rng = np.random.default_rng(5)
        learner, bystander = MlpClassifier(8, 6, 2, seed=1), MlpClassifier(8, 6, 2, seed=2)
        before = [p.copy() for p in bystander.parameters]
        learner.learn_batch(*separable_batch(rng))
        for a, b in zip(before, bystander.parameters):
            self.assertTrue(np.array_equal(a, b))

    def test_separable_training(self):
        rng = np.random.default_rng(6)
        model = MlpClassifier(8, 16, 2, seed=0)
        for _ in range(200):
            model.learn_batch(*separable_batch(rng, 32))

        features, labels = separable_batch(rng, 1000)
        self.assertGreaterEqual((model.predict(features) == labels).mean(), 0.95)

    def test_label_validation(self):
        model = MlpClassifier(4, 3, 2)
        with self.assertRaises(ValueError):
            model.learn_batch(np.zeros((2, 4)), [0, 2])
        with self.assertRaises(ValueError):
            model.learn_batch(np.zeros((2, 4)), [0])

    def test_divergence(self):
        model = MlpClassifier(4, 3, 2)
        with self.assertRaises(RuntimeError) as error:
            model.learn_batch(np.full((2, 4), np.nan), [0, 1])
        self.assertIn("NUMERICAL DIVERGENCE", str(error.exception))

    def test_weighted_predict(self):
        features = np.zeros((3, 2))
        one = FixedProbabilities([0.2, 0.5, 0.3])
        self.assertEqual(weighted_ensemble_predict([one], [8], features).tolist(), [1, 1, 1])

        pair = [FixedProbabilities([0.6, 0.4]), FixedProbabilities([0.1, 0.9])]
        np.testing.assert_allclose(weighted_ensemble_proba(pair, [1, 1], features)[0], [0.7, 1.3])
        self.assertEqual(weighted_ensemble_predict(pair, [1, 1], features).tolist(), [1, 1, 1])

        # Scaling every weight keeps the argmax; a zero weight guru does not vote
        self.assertEqual(weighted_ensemble_predict(pair, [3, 1], features).tolist(),
                         weighted_ensemble_predict(pair, [6, 2], features).tolist())
        self.assertEqual(weighted_ensemble_predict(pair, [1, 0], features).tolist(), [0, 0, 0])

        tied = [FixedProbabilities([0.5, 0.5])]
        self.assertEqual(weighted_ensemble_predict(tied, [1], features).tolist(), [0, 0, 0])

        with self.assertRaises(ValueError):
            weighted_ensemble_predict(pair, [0, 0], features)

        # The ensemble step votes from probabilities it already holds, stacked per voter
        stacked = np.stack([model.predict_proba(features) for model in pair])
        np.testing.assert_allclose(combine_probabilities(stacked, [1, 1]),
                                   weighted_ensemble_proba(pair, [1, 1], features))
        for weights in [[1, 1], [3, 1], [1, 0], [0, 2]]:
            self.assertEqual(weighted_vote(stacked, weights).tolist(),
                             weighted_ensemble_predict(pair, weights, features).tolist())
        with self.assertRaises(ValueError):
            combine_probabilities(stacked, [0, 0])

    def test_checkpoint(self):
        model = MlpClassifier(12, 5, 3, seed=9)
        for compression in [0, 1, 2]:
            path = self._write_path(f"model_{compression}.lqdm")
            model.save(path, compression)

            loaded = MlpClassifier.load(path)
            self.assertEqual(loaded.dims, model.dims)
            for a, b in zip(model.parameters, loaded.parameters):
                self.assertTrue(np.array_equal(a, b))
            path.unlink()

        with self.assertRaises(AssertionError):
            model.save(self._write_path("model_3.lqdm"), 3)
        self._write_path("model_3.lqdm").unlink(missing_ok=True)

    def test_corrupt_checkpoint(self):
        path = self._write_path("corrupt.lqdm")
        MlpClassifier(6, 4, 2, seed=1).save(path)
        data = path.read_bytes()

        path.write_bytes(b"nope" + data[4:])
        with self.assertRaises(ValueError):
            MlpClassifier.load(path)

        path.write_bytes(data[:-4])
        with self.assertRaises(ValueError):
            MlpClassifier.load(path)

        path.unlink()
        with self.assertRaises(IOError):
            MlpClassifier.load(path)


if __name__ == '__main__':
    unittest.main()
