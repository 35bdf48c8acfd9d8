from .probabilityFunctions import DiversityContext, PROBABILITY_FUNCTIONS, delegation_distribution
from .performanceObject import METRICS, PerformanceHistory, TrendSlopes, evaluate_metric
from .learnerObject import init_classifier, weighted_ensemble_predict, weighted_vote
from .delegationObject import DelegationState
from . import errors_codes as ec
from . import misc as mc

from dataclasses import dataclass
import numpy as np

MECHANISMS = ("kbat", "student_expert", "full_ensemble", "single_learner")

# Sub-streams of misc.DELEGATION_STREAM
STUDENT_DRAWS, EXPERT_DRAWS = 0, 1


@dataclass
class KBatConfig:
    k: int
    w: int
    metric: str = "balanced_accuracy"
    prob_fn: str = "proportional_better"

    def validate(self, n):
        if not 1 <= self.k <= n:
            raise ValueError(ec.invalid_config("k", self.k, f"the guru count must be in [1, {n}]"))
        if self.w < 2:
            raise ValueError(ec.invalid_config("w", self.w, "a trend needs a window of at least 2 batches"))
        if self.metric not in METRICS:
            raise ValueError(ec.invalid_metric(self.metric))
        if self.prob_fn not in PROBABILITY_FUNCTIONS:
            raise ValueError(ec.invalid_probability_function(self.prob_fn))
        return self


@dataclass
class StudentExpertConfig:
    k_s: int
    k_e: int
    w: int
    metric: str = "accuracy"
    prob_fn: str = "proportional_better"

    def validate(self, n):
        for field, value in [("k_s", self.k_s), ("k_e", self.k_e)]:
            if not 1 <= value <= n:
                raise ValueError(ec.invalid_config(field, value, f"the guru count must be in [1, {n}]"))
        KBatConfig(self.k_s, self.w, self.metric, self.prob_fn).validate(n)
        return self

    @property
    def students(self):
        return KBatConfig(self.k_s, self.w, self.metric, self.prob_fn)


class BatchRecord:
    __slots__ = ["batch_index", "context", "is_guru", "weights", "scores", "slopes", "ensemble_acc", "mean_loss",
                 "is_expert"]

    def __init__(self, batch_index, context, is_guru, weights, scores, slopes, ensemble_acc, mean_loss,
                 is_expert=None):
        """
        What happened on one batch: which voters learned and with what weight, each voter's metric score, the slopes
        after recording it (NaN until two batches are held), and the accuracy of the weighted guru vote
        """
        self.batch_index = batch_index
        self.context = context
        self.is_guru = is_guru
        self.weights = weights
        self.scores = scores
        self.slopes = slopes
        self.ensemble_acc = ensemble_acc
        self.mean_loss = mean_loss
        self.is_expert = is_expert

    def __repr__(self):
        return f"Batch {self.batch_index} - context {self.context} - gurus {np.flatnonzero(self.is_guru).tolist()}"


class EnsembleState:
    def __init__(self, voters, window, n_classes, seed=0, trial=0):
        """
        Everything the training loop carries between batches.

        :param voters: The classifiers of the ensemble
        :type voters: list[pyLiquidEnsemble.learnerObject.MlpClassifier]

        :param window: The largest window any trend is computed over, and the window of the logged slopes of an
            ensemble that never delegates
        :type window: int

        :param n_classes: Size of the label space
        :type n_classes: int

        :param seed: Run seed; delegation draws are keyed on (seed, trial, batch, voter)
        :type seed: int
        """
        if len(voters) < 1:
            raise ValueError(ec.invalid_ensemble(len(voters)))

        self.voters = list(voters)
        self.n = len(self.voters)
        self.n_classes = int(n_classes)
        self.seed = int(seed)
        self.trial = int(trial)

        self.train_delegations = DelegationState.reset_all_self(self.n)
        self.expert_delegations = DelegationState.reset_all_self(self.n)
        self.window = max(int(window), 2)
        self.history = PerformanceHistory(self.n, self.window)
        self.expert_history = PerformanceHistory(self.n, 1)
        self.last_slopes = None
        self.t = 0

    def __repr__(self):
        return f"Ensemble of {self.n} at batch {self.t}: {self.train_delegations}"

    @classmethod
    def initialise(cls, n, d, h, m, window, seed=0, trial=0, learning_rate=1e-3):
        """n freshly initialised d -> h -> h -> m voters, each seeded on (seed, trial, voter)"""
        voters = [init_classifier((d, h, m), (seed, trial, mc.INIT_STREAM, voter), learning_rate) for voter in range(n)]
        return cls(voters, window, m, seed, trial)

    def delegation_rng(self, draws, voter):
        """Generator for one voter's delegation draw on the current batch"""
        return mc.seeded_rng(self.seed, self.trial, mc.DELEGATION_STREAM, draws, self.t, voter)

    def check_batch(self, batch):
        """Reject a batch whose labels fall outside the label space"""
        labels = np.asarray(batch.labels)
        out_of_range = (labels < 0) | (labels >= self.n_classes)
        if out_of_range.any():
            raise ValueError(ec.stream_corruption(batch.batch_index, int(labels[out_of_range][0]), self.n_classes))

    def predict_all(self, features):
        """Class probabilities of every voter, shape [voter, example, class]"""
        return np.stack([voter.predict_proba(features) for voter in self.voters])

    def current_slopes(self, window):
        """Slopes over the most recent min(recorded, window) batches, NaN until two batches are held"""
        if self.history.recorded(0) < 2:
            return np.full(self.n, np.nan)
        return self.history.trend_slopes(window).q


def select_delegations(slopes, k, prob_fn, batch_index, rng_for, prior_state=None, context=None):
    """
    The k voters of highest slope, ties going to the lower index, keep their vote. Every other voter draws one
    delegate from prob_fn over the voters of strictly higher slope, or keeps its vote when there are none. Every edge
    points at a strictly higher slope, so the result is acyclic.

    :param slopes: Competency of every voter
    :type slopes: TrendSlopes

    :param rng_for: Callable returning the generator for a voter's draw
    :type rng_for: callable

    :param prior_state: Delegations of the previous batch, for proportional_weighted
    :param context: Mean class probabilities on the current batch, for max_diversity

    :rtype: DelegationState
    """
    n = len(slopes)
    order = np.lexsort((np.arange(n), -slopes.q))
    gurus = set(int(voter) for voter in order[:k])
    prior_weights = prior_state.compute_weights() if prior_state is not None else None

    target = np.arange(n)
    for voter in range(n):
        if voter in gurus:
            continue
        distribution = delegation_distribution(prob_fn, voter, slopes, prior_state, prior_weights, context)
        target[voter] = distribution.sample(rng_for(voter))

    return DelegationState(target, batch_index)


def kbat_update(state, cfg, context=None, draws=STUDENT_DRAWS):
    """
    Best accuracy trend delegations for the next batch: slopes of every voter over the last w batches, the k best
    trending voters as gurus and every other voter delegating through cfg.prob_fn.

    :type state: EnsembleState
    :type cfg: KBatConfig

    :param context: DiversityContext of the current batch, required by max_diversity
    :param draws: Which delegation sub-stream to draw from

    :raises ValueError: While the window is not yet full
    """
    for voter in range(state.n):
        if state.history.recorded(voter) < cfg.w:
            raise ValueError(ec.insufficient_history(voter, state.history.recorded(voter), cfg.w))

    slopes = state.history.trend_slopes(cfg.w)
    state.last_slopes = slopes
    return select_delegations(slopes, cfg.k, cfg.prob_fn, state.t + 1,
                              lambda voter: state.delegation_rng(draws, voter), state.train_delegations, context)


def train_step(state, batch, cfg=None):
    """
    One batch of the training loop: every voter predicts and is scored, every current guru learns, then once the
    window is full the delegations are rebuilt by kbat_update. Delegating voters are left untouched.

    :type state: EnsembleState
    :type batch: pyLiquidEnsemble.streamObject.StreamBatch

    :param cfg: k-BAT parameters, or None for an ensemble whose voters never delegate
    :type cfg: KBatConfig | None

    :rtype: BatchRecord
    """
    state.check_batch(batch)
    metric = cfg.metric if cfg else "accuracy"
    window = cfg.w if cfg else state.window

    probabilities = state.predict_all(batch.features)
    predictions = np.argmax(probabilities, axis=2)
    scores = np.array([evaluate_metric(voter_predictions, batch.labels, metric) for voter_predictions in predictions])
    state.history.record_batch(state.t, scores)

    weights = state.train_delegations.compute_weights()
    is_guru = state.train_delegations.guru_flags()
    ensemble_acc = evaluate_metric(weighted_vote(probabilities, weights), batch.labels, "accuracy")

    losses = [state.voters[voter].learn_batch(batch.features, batch.labels) for voter in np.flatnonzero(is_guru)]

    slopes = state.current_slopes(window)
    if cfg and state.history.is_full(cfg.w):
        context = DiversityContext(probabilities.mean(axis=1)) if cfg.prob_fn == "max_diversity" else None
        state.train_delegations = kbat_update(state, cfg, context)

    record = BatchRecord(state.t, batch.context_label, is_guru, weights, scores, slopes, ensemble_acc,
                         float(np.mean(losses)))
    state.t += 1
    return record


def expert_update(state, cfg):
    """
    Expert delegations for the next batch: the last batch accuracy held in state.expert_history stands in for the
    slope, the k_e most accurate voters are experts and every other voter delegates through proportional_better over
    the strictly more accurate voters.

    :type state: EnsembleState
    :type cfg: StudentExpertConfig
    """
    accuracies = TrendSlopes(state.expert_history.last_scores(), 1)
    return select_delegations(accuracies, cfg.k_e, "proportional_better", state.t + 1,
                              lambda voter: state.delegation_rng(EXPERT_DRAWS, voter))


def student_expert_step(state, batch, cfg, learn=True):
    """
    One batch of Student-Expert delegation. The current experts predict the batch with their delegation weights;
    once labels are revealed every voter's score feeds the students' windowed trend and the experts' last batch
    accuracy, both delegation states are rebuilt when the window is full, and, when learn is set, the student gurus
    learn the batch.

    :type state: EnsembleState
    :type batch: pyLiquidEnsemble.streamObject.StreamBatch
    :type cfg: StudentExpertConfig

    :param learn: False on a test stream, where students do not learn
    :type learn: bool

    :return: The ensemble predictions for the batch and the batch record
    :rtype: (np.ndarray, BatchRecord)
    """
    state.check_batch(batch)

    probabilities = state.predict_all(batch.features)
    expert_weights = state.expert_delegations.compute_weights()
    is_expert = state.expert_delegations.guru_flags()
    ensemble_predictions = weighted_vote(probabilities, expert_weights)

    predictions = np.argmax(probabilities, axis=2)
    accuracies = np.array([evaluate_metric(p, batch.labels, "accuracy") for p in predictions])
    if cfg.metric == "accuracy":
        scores = accuracies
    else:
        scores = np.array([evaluate_metric(p, batch.labels, cfg.metric) for p in predictions])
    state.history.record_batch(state.t, scores)
    state.expert_history.record_batch(state.t, accuracies)

    slopes = state.current_slopes(cfg.w)
    if state.history.is_full(cfg.w):
        context = DiversityContext(probabilities.mean(axis=1)) if cfg.prob_fn == "max_diversity" else None
        state.train_delegations = kbat_update(state, cfg.students, context)
        state.expert_delegations = expert_update(state, cfg)

    is_guru = state.train_delegations.guru_flags()
    losses = []
    if learn:
        losses = [state.voters[voter].learn_batch(batch.features, batch.labels) for voter in np.flatnonzero(is_guru)]

    record = BatchRecord(state.t, batch.context_label, is_guru if learn else np.zeros(state.n, dtype=bool),
                         state.train_delegations.compute_weights(), scores, slopes,
                         evaluate_metric(ensemble_predictions, batch.labels, "accuracy"),
                         float(np.mean(losses)) if losses else np.nan, is_expert)
    state.t += 1
    return ensemble_predictions, record


def static_predict(voters, features):
    """Prediction of the whole ensemble with every voter active at weight 1"""
    return weighted_ensemble_predict(voters, np.ones(len(voters)), features)
