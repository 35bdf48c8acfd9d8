from . import errors_codes as ec

import numpy as np

PROBABILITY_FUNCTIONS = ("random_better", "proportional_better", "proportional_weighted", "max_diversity")


class DelegationDistribution:
    __slots__ = ["delegator", "probs"]

    def __init__(self, delegator, probs):
        """
        One voter's probabilities over the voters it may delegate to. An empty distribution means the voter keeps its
        own vote.

        :param delegator: The delegating voter
        :type delegator: int

        :param probs: Delegate: probability, for the delegates with non-zero probability
        :type probs: dict
        """
        self.delegator = int(delegator)
        self.probs = {int(delegate): float(p) for delegate, p in probs.items() if p > 0}

        if self.probs:
            total = sum(self.probs.values())
            assert abs(total - 1.0) <= 1e-9, ec.invalid_distribution(self.delegator, total)

    def __repr__(self):
        if not self.probs:
            return f"{self.delegator} -> self"
        return f"{self.delegator} -> {self.probs}"

    def __getitem__(self, delegate):
        return self.probs.get(delegate, 0.0)

    @property
    def is_self(self):
        """If the delegator has nobody better and keeps its vote"""
        return len(self.probs) == 0

    @property
    def support(self):
        return sorted(self.probs.keys())

    def sample(self, rng):
        """
        Draw one delegate

        :param rng: Generator to draw from
        :type rng: np.random.Generator

        :return: The chosen delegate, or the delegator itself when the support is empty
        :rtype: int
        """
        if self.is_self:
            return self.delegator

        support = self.support
        p = np.array([self.probs[delegate] for delegate in support])
        return int(support[rng.choice(len(support), p=p / p.sum())])


class DiversityContext:
    __slots__ = ["class_probs"]

    def __init__(self, class_probs):
        """
        Each voter's mean predicted class probability vector over the current batch, one row per voter
        """
        class_probs = np.asarray(class_probs, dtype=np.float64)
        if class_probs.ndim != 2:
            raise ValueError(ec.invalid_input("DiversityContext", f"Expected a [voter, class] matrix yet found shape "
                                                                  f"{class_probs.shape}"))
        if (class_probs < 0).any() or not np.allclose(class_probs.sum(axis=1), 1.0, atol=1e-6, rtol=0):
            raise ValueError(ec.invalid_input("DiversityContext", "Every row must be a probability vector"))
        self.class_probs = class_probs

    def __len__(self):
        return len(self.class_probs)

    @classmethod
    def from_batch_probabilities(cls, voter_probabilities):
        """Average each voter's per example probabilities of shape [voter, example, class] over the batch"""
        return cls(np.asarray(voter_probabilities, dtype=np.float64).mean(axis=1))


def _normalise(delegator, kernels):
    """Scale unnormalised kernels {delegate: value} to probabilities"""
    if not kernels:
        return DelegationDistribution(delegator, {})
    total = sum(kernels.values())
    return DelegationDistribution(delegator, {delegate: value / total for delegate, value in kernels.items()})


def random_better(voter, slopes):
    """Every voter with a higher slope is picked with equal probability"""
    better = slopes.n_plus(voter)
    return DelegationDistribution(voter, {delegate: 1.0 / len(better) for delegate in better})


def proportional_better(voter, slopes):
    """Every voter with a higher slope is picked with probability proportional to how much higher its slope is"""
    return _normalise(voter, {delegate: slopes[delegate] - slopes[voter] for delegate in slopes.n_plus(voter)})


def proportional_weighted(voter, slopes, prior_state, prior_weights):
    """
    As proportional_better, but each kernel is divided by the weight its delegate's guru held after the previous
    batch's delegations, so lightly weighted gurus are more likely to gain a delegation.

    :param prior_state: Delegations of the previous batch
    :type prior_state: pyLiquidEnsemble.delegationObject.DelegationState

    :param prior_weights: compute_weights of prior_state
    :type prior_weights: np.ndarray
    """
    kernels = {}
    for delegate in slopes.n_plus(voter):
        guru = prior_state.resolve_guru(delegate)
        assert prior_weights[guru] >= 1, ec.missing_guru_weight(delegate, guru)
        kernels[delegate] = (slopes[delegate] - slopes[voter]) / prior_weights[guru]
    return _normalise(voter, kernels)


def max_diversity(voter, slopes, context):
    """
    Delegate with certainty to the voter with a higher slope whose mean class probabilities are closest, in l2, to
    the delegator's own. Equal distances go to the lowest index.

    :param context: Mean class probabilities of every voter on the current batch
    :type context: DiversityContext
    """
    if len(context) != len(slopes):
        raise ValueError(ec.invalid_diversity_context(context.class_probs.shape, len(slopes)))

    better = slopes.n_plus(voter)
    if not better:
        return DelegationDistribution(voter, {})

    distances = np.linalg.norm(context.class_probs[better] - context.class_probs[voter], axis=1)
    return DelegationDistribution(voter, {better[int(np.argmin(distances))]: 1.0})


def delegation_distribution(prob_fn, voter, slopes, prior_state=None, prior_weights=None, context=None):
    """Dispatch to the probability function named prob_fn"""
    if prob_fn == "random_better":
        return random_better(voter, slopes)
    elif prob_fn == "proportional_better":
        return proportional_better(voter, slopes)
    elif prob_fn == "proportional_weighted":
        return proportional_weighted(voter, slopes, prior_state, prior_weights)
    elif prob_fn == "max_diversity":
        return max_diversity(voter, slopes, context)
    else:
        raise ValueError(ec.invalid_probability_function(prob_fn))
