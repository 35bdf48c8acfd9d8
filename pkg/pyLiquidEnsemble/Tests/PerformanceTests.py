from .. import *

import numpy as np
import unittest


def normal_equations_slope(values):
    """Independent least squares fit of values on 0..m-1 through the normal equations"""
    x = np.column_stack([np.ones(len(values)), np.arange(len(values), dtype=np.float64)])
    return np.linalg.solve(x.T @ x, x.T @ np.asarray(values, dtype=np.float64))[1]


def filled_history(series, capacity=None):
    """A one voter history holding series"""
    history = PerformanceHistory(1, capacity or len(series))
    for t, score in enumerate(series):
        history.record(t, 0, score)
    return history


class PerformanceTests(unittest.TestCase):

    def test_metric_examples(self):
        self.assertAlmostEqual(evaluate_metric([1, 1, 0, 0], [1, 0, 0, 0], "accuracy"), 0.75)
        self.assertAlmostEqual(evaluate_metric([1, 1, 1, 0], [1, 1, 0, 0], "balanced_accuracy"), 0.75)
        self.assertAlmostEqual(evaluate_metric([1, 1, 1, 1], [1, 1, 0, 0], "macro_f1"), 1 / 3)

    def test_metrics_over_present_classes(self):
        """Classes absent from the truth do not pull the average down"""
        self.assertAlmostEqual(evaluate_metric([4, 4, 5, 5], [4, 4, 5, 5], "balanced_accuracy"), 1.0)
        self.assertAlmostEqual(evaluate_metric([4, 4, 5, 5], [4, 4, 5, 5], "macro_f1"), 1.0)

        # Wrong single class predictions against balanced truth
        for metric in METRICS:
            self.assertAlmostEqual(evaluate_metric([7, 7, 7, 7], [2, 2, 3, 3], metric), 0.0)

    def test_metric_errors(self):
        with self.assertRaises(ValueError):
            evaluate_metric([], [], "accuracy")
        with self.assertRaises(ValueError):
            evaluate_metric([1, 2], [1], "accuracy")
        with self.assertRaises(ValueError) as error:
            evaluate_metric([1], [1], "precision")
        self.assertIn("INVALID METRIC", str(error.exception))

    def test_record_and_read(self):
        history = PerformanceHistory(2, 3)
        history.record(0, 0, 0.5)
        self.assertEqual(history.read(0, 0), 0.5)
        self.assertTrue(np.isnan(history.read(0, 1)))

        with self.assertRaises(ValueError) as error:
            history.record(0, 0, 0.6)
        self.assertIn("INVALID WRITE", str(error.exception))

        for bad_score in [-0.1, 1.5, np.nan]:
            with self.assertRaises(ValueError):
                history.record(1, 0, bad_score)
        with self.assertRaises(ValueError):
            history.record(1, 2, 0.5)

    def test_eviction(self):
        w = 4
        history = PerformanceHistory(1, w)
        for t in range(w + 1):
            history.record(t, 0, 0.1 * t)

        self.assertEqual(history.batches, [1, 2, 3, 4])
        self.assertTrue(np.isnan(history.read(0, 0)))
        self.assertEqual(history.recorded(0), w)

        with self.assertRaises(ValueError):
            history.record(0, 0, 0.2)

    def test_slope_examples(self):
        self.assertAlmostEqual(filled_history([0.5, 0.6, 0.7]).trend_slope(0, 3), 0.1, places=12)
        self.assertAlmostEqual(filled_history([0.8, 0.8, 0.8, 0.8]).trend_slope(0, 4), 0.0, places=12)
        self.assertAlmostEqual(filled_history([0.9, 0.5]).trend_slope(0, 2), -0.4, places=12)

        # Only the most recent window scores count
        self.assertAlmostEqual(filled_history([0.0, 0.9, 0.5]).trend_slope(0, 2), -0.4, places=12)

    def test_insufficient_history(self):
        with self.assertRaises(ValueError) as error:
            filled_history([0.5]).trend_slope(0, 3)
        self.assertIn("INSUFFICIENT HISTORY", str(error.exception))

    def test_slope_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            length = int(rng.integers(2, 60))
            series = rng.uniform(0, 1, length)
            history = filled_history(series)
            self.assertLess(abs(history.trend_slope(0, length) - normal_equations_slope(series)), 1e-9)

    def test_slope_shift_and_scale(self):
        rng = np.random.default_rng(3)
        series = rng.uniform(0.2, 0.4, 30)
        base = filled_history(series).trend_slope(0, 30)

        self.assertAlmostEqual(filled_history(series + 0.5).trend_slope(0, 30), base, places=12)
        self.assertAlmostEqual(filled_history(series * 2).trend_slope(0, 30), 2 * base, places=12)

    def test_trend_slopes_over_voters(self):
        history = PerformanceHistory(3, 5)
        for t in range(5):
            history.record_batch(t, [0.1 * t, 0.5, 0.9 - 0.1 * t])

        slopes = history.trend_slopes(5)
        self.assertEqual(len(slopes), 3)
        np.testing.assert_allclose(slopes.q, [0.1, 0.0, -0.1], atol=1e-12)
        self.assertTrue(history.is_full(5))
        self.assertFalse(history.is_full(6))

    def test_n_plus(self):
        self.assertEqual(n_plus(TrendSlopes([0.1, 0.2, 0.4], 3), 0), [1, 2])
        self.assertEqual(n_plus(TrendSlopes([0.4, 0.4, 0.4], 3), 1), [])
        self.assertEqual(n_plus(TrendSlopes([0.3, -0.1, 0.0], 3), 2), [0])


if __name__ == '__main__':
    unittest.main()
