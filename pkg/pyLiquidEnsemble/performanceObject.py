from . import errors_codes as ec

from sklearn.metrics import accuracy_score, f1_score, recall_score
from scipy.stats import linregress
from collections import OrderedDict
import numpy as np

METRICS = ("accuracy", "balanced_accuracy", "macro_f1")


def evaluate_metric(predicted_labels, true_labels, metric):
    """
    Score a batch of predictions against the true labels.

    Balanced accuracy and macro F1 average only over the classes present in true_labels: a batch seldom holds every
    class of the label space, and recall is undefined for a class with no support. F1 of a class is 0 when its
    precision and recall are both 0.

    :param predicted_labels: Predicted class of each example
    :type predicted_labels: list | np.ndarray

    :param true_labels: True class of each example
    :type true_labels: list | np.ndarray

    :param metric: One of accuracy, balanced_accuracy or macro_f1
    :type metric: str

    :return: The score, in [0, 1]
    :rtype: float
    """
    predicted_labels = np.asarray(predicted_labels).reshape(-1)
    true_labels = np.asarray(true_labels).reshape(-1)
    if len(true_labels) == 0:
        raise ValueError(ec.invalid_input("evaluate_metric", "Cannot score an empty batch"))
    if len(predicted_labels) != len(true_labels):
        raise ValueError(ec.invalid_input(
            "evaluate_metric", f"Found {len(predicted_labels)} predictions for {len(true_labels)} labels"))

    if metric == "accuracy":
        return float(accuracy_score(true_labels, predicted_labels))

    present = np.unique(true_labels)
    if metric == "balanced_accuracy":
        return float(recall_score(true_labels, predicted_labels, labels=present, average="macro", zero_division=0))
    elif metric == "macro_f1":
        return float(f1_score(true_labels, predicted_labels, labels=present, average="macro", zero_division=0))
    else:
        raise ValueError(ec.invalid_metric(metric))


class TrendSlopes:
    __slots__ = ["q", "window"]

    def __init__(self, q, window):
        """
        Trend slope of every voter's scores over the most recent window batches, in metric units per batch
        """
        self.q = np.asarray(q, dtype=np.float64).reshape(-1)
        self.window = int(window)

    def __repr__(self):
        return f"Slopes w={self.window}: {np.round(self.q, 6).tolist()}"

    def __getitem__(self, voter):
        return float(self.q[voter])

    def __len__(self):
        return len(self.q)

    def n_plus(self, voter):
        """
        The voters with a strictly higher slope than voter; ties are excluded so a voter attaining the maximum slope
        has no better voter.

        :rtype: list[int]
        """
        return [int(j) for j in np.flatnonzero(self.q > self.q[voter])]


def n_plus(slopes, voter):
    """The voters with a strictly higher slope than voter"""
    return slopes.n_plus(voter)


class PerformanceHistory:
    def __init__(self, n, capacity):
        """
        Scores a[t, i] of each voter i on each batch t, holding only the capacity most recent batches.

        :param n: Number of voters
        :type n: int

        :param capacity: The largest window any caller will regress over
        :type capacity: int
        """
        if n < 1:
            raise ValueError(ec.invalid_ensemble(n))
        if capacity < 1:
            raise ValueError(ec.invalid_config("capacity", capacity, "the history must hold at least one batch"))

        self.n = int(n)
        self.capacity = int(capacity)
        self._rows = OrderedDict()

    def __repr__(self):
        return f"PerformanceHistory n:batches -> {self.n}:{len(self._rows)}"

    @property
    def batches(self):
        """Batch indexes currently held, oldest first"""
        return list(self._rows.keys())

    def record(self, batch_index, voter, score):
        """
        Store voter's score on batch batch_index, evicting the oldest batch once more than capacity batches are held.

        :raises ValueError: If the cell was already written, the score is not in [0, 1], or the batch has already
            been evicted
        """
        if not 0 <= voter < self.n:
            raise ValueError(ec.voter_out_of_range(voter, self.n))
        if not (np.isfinite(score) and 0.0 <= score <= 1.0):
            raise ValueError(ec.invalid_score(score))

        if batch_index not in self._rows:
            if self._rows and batch_index < next(iter(self._rows)):
                raise ValueError(ec.stale_batch(batch_index, next(iter(self._rows))))
            self._rows[batch_index] = np.full(self.n, np.nan)
            self._rows = OrderedDict(sorted(self._rows.items()))
            while len(self._rows) > self.capacity:
                self._rows.popitem(last=False)

            # A stale index was inserted then evicted immediately
            if batch_index not in self._rows:
                raise ValueError(ec.stale_batch(batch_index, next(iter(self._rows))))

        row = self._rows[batch_index]
        if not np.isnan(row[voter]):
            raise ValueError(ec.invalid_write(batch_index, voter))
        row[voter] = float(score)

    def record_batch(self, batch_index, scores):
        """Record one score per voter for batch_index"""
        for voter, score in enumerate(scores):
            self.record(batch_index, voter, score)

    def read(self, batch_index, voter):
        """The score of voter on batch_index, or NaN if it was never recorded"""
        if batch_index not in self._rows:
            return np.nan
        return float(self._rows[batch_index][voter])

    def scores(self, voter, m=None):
        """The m most recent recorded scores of voter, oldest first; all of them if m is None"""
        values = np.array([row[voter] for row in self._rows.values() if not np.isnan(row[voter])])
        if m is None:
            return values
        return values[-m:] if m > 0 else values[:0]

    def recorded(self, voter):
        """Number of batches held for voter"""
        return len(self.scores(voter))

    def is_full(self, window):
        """If every voter has at least window batches recorded"""
        return all(self.recorded(voter) >= window for voter in range(self.n))

    def last_scores(self):
        """Every voter's score on the most recent batch"""
        if not self._rows:
            raise ValueError(ec.insufficient_history(0, 0, 1))
        return next(reversed(self._rows.values())).copy()

    def trend_slope(self, voter, window):
        """
        Ordinary least squares slope of voter's most recent min(recorded, window) scores, regressed on the within-window
        ordinals 0..m-1.

        :raises ValueError: If fewer than two batches are recorded
        """
        values = self.scores(voter, window)
        if len(values) < 2:
            raise ValueError(ec.insufficient_history(voter, len(values), 2))
        return float(linregress(np.arange(len(values), dtype=np.float64), values).slope)

    def trend_slopes(self, window):
        """Slopes of every voter"""
        return TrendSlopes([self.trend_slope(voter, window) for voter in range(self.n)], window)
