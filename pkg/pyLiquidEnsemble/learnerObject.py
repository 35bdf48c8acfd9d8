from . import errors_codes as ec
from . import misc as mc

from scipy.special import softmax, log_softmax
from pathlib import Path
import numpy as np
import struct

CHECKPOINT_MAGIC = b"lqdm"
CHECKPOINT_VERSION = 1
CHECKPOINT_HEADER = "<4sIIIII"


def member_params(d, h, m):
    """Trainable parameters of a d -> h -> h -> m network"""
    return d * h + h + h * h + h + h * m + m


class ParameterBudget:
    __slots__ = ["total_budget", "n"]

    def __init__(self, total_budget, n):
        """
        A total number of trainable parameters shared out equally between the n members of an ensemble
        """
        if n < 1:
            raise ValueError(ec.invalid_ensemble(n))
        self.total_budget = int(total_budget)
        self.n = int(n)

    def __repr__(self):
        return f"Budget {self.total_budget} over {self.n} members"

    @classmethod
    def from_reference(cls, n, d=784, m=10, reference_hidden=256):
        """The budget of a single learner of hidden width reference_hidden, shared between n members"""
        return cls(member_params(d, reference_hidden, m), n)

    def hidden_width(self, d, m):
        """
        The largest hidden width h with member_params(d, h, m) <= total_budget / n

        :raises ValueError: If not even h = 1 fits in the budget
        """
        per_member = self.total_budget / self.n
        linear = d + m + 2

        # h^2 + (d + m + 2)h + m - per_member <= 0, then correct for floating point at the boundary
        h = int(np.floor((-linear + np.sqrt(linear ** 2 - 4 * (m - per_member))) / 2)) if per_member >= m else 0
        while h > 0 and member_params(d, h, m) > per_member:
            h -= 1
        while member_params(d, h + 1, m) <= per_member:
            h += 1

        if h < 1:
            raise ValueError(ec.invalid_config("budget", self.total_budget,
                                               f"too small for {self.n} members of input {d} and {m} classes"))
        return h


class AdamState:
    __slots__ = ["first", "second", "step", "learning_rate", "beta1", "beta2", "epsilon"]

    def __init__(self, parameters, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        """Moment accumulators for each parameter array"""
        self.first = [np.zeros_like(p) for p in parameters]
        self.second = [np.zeros_like(p) for p in parameters]
        self.step = 0
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon

    def __repr__(self):
        return f"Adam step {self.step} lr {self.learning_rate}"

    def update(self, parameters, gradients):
        """Apply one Adam step to every parameter in place"""
        self.step += 1
        first_correction = 1 - self.beta1 ** self.step
        second_correction = 1 - self.beta2 ** self.step

        for p, g, first, second in zip(parameters, gradients, self.first, self.second):
            first *= self.beta1
            first += (1 - self.beta1) * g
            second *= self.beta2
            second += (1 - self.beta2) * g * g
            step = self.learning_rate * (first / first_correction) / (np.sqrt(second / second_correction) +
                                                                      self.epsilon)
            p -= step.astype(p.dtype)


class MlpClassifier:
    def __init__(self, d, h, m, seed=0, learning_rate=1e-3, dtype=np.float32):
        """
        A d -> h -> h -> m feed-forward classifier with rectifier hidden layers and a softmax output, trained with
        Adam. Voters of an ensemble are independent instances.

        :param d: Input features
        :type d: int

        :param h: Width of both hidden layers
        :type h: int

        :param m: Number of classes
        :type m: int

        :param seed: Initialisation seed, or a tuple of ints to seed a generator from
        :type seed: int | tuple

        :param learning_rate: Adam step size
        :type learning_rate: float

        :param dtype: Parameter precision; training runs in float32 while gradient checks use float64
        """
        for name, value in zip(["d", "h", "m"], [d, h, m]):
            if int(value) < 1:
                raise ValueError(ec.invalid_config(name, value, "classifier dimensions must be at least 1"))

        self.d, self.h, self.m = int(d), int(h), int(m)
        self.dtype = np.dtype(dtype)

        rng = np.random.default_rng(seed)
        self.parameters = []
        for fan_in, fan_out in self.layer_shapes():
            bound = 1.0 / np.sqrt(fan_in)
            self.parameters.append(rng.uniform(-bound, bound, (fan_in, fan_out)).astype(self.dtype))
            self.parameters.append(np.zeros(fan_out, dtype=self.dtype))

        self.adam = AdamState(self.parameters, learning_rate)

    def __repr__(self):
        return f"MLP {self.d}-{self.h}-{self.h}-{self.m}"

    @property
    def dims(self):
        return self.d, self.h, self.h, self.m

    def layer_shapes(self):
        return [(self.d, self.h), (self.h, self.h), (self.h, self.m)]

    def param_count(self):
        return int(sum(p.size for p in self.parameters))

    def _validate_features(self, features):
        features = np.asarray(features, dtype=self.dtype)
        if features.ndim == 1:
            features = features.reshape(1, -1)
        if features.shape[1] != self.d:
            raise ValueError(ec.dimension_mismatch(self.d, features.shape[1]))
        return features

    def _validate_labels(self, labels, count):
        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        if len(labels) != count:
            raise ValueError(ec.invalid_input("learn_batch", f"Found {len(labels)} labels for {count} examples"))
        out_of_range = (labels < 0) | (labels >= self.m)
        if out_of_range.any():
            raise ValueError(ec.label_out_of_range(int(labels[out_of_range][0]), self.m))
        return labels

    def _forward(self, features):
        w1, b1, w2, b2, w3, b3 = self.parameters
        z1 = features @ w1 + b1
        a1 = np.maximum(z1, 0)
        z2 = a1 @ w2 + b2
        a2 = np.maximum(z2, 0)
        return z1, a1, z2, a2, a2 @ w3 + b3

    def predict_proba(self, features):
        """
        Class probabilities of every example, rows summing to one

        :param features: Batch of d-vectors
        :type features: np.ndarray

        :return: Array of shape [examples, m]
        :rtype: np.ndarray
        """
        logits = self._forward(self._validate_features(features))[-1]
        return softmax(logits.astype(np.float64), axis=1)

    def predict(self, features):
        return np.argmax(self.predict_proba(features), axis=1)

    def gradients(self, features, labels):
        """
        Mean softmax cross entropy of the batch and its gradient with respect to every parameter, in layer order

        :return: loss, list of gradients
        :rtype: (float, list)
        """
        features = self._validate_features(features)
        labels = self._validate_labels(labels, len(features))
        w1, b1, w2, b2, w3, b3 = self.parameters
        z1, a1, z2, a2, logits = self._forward(features)

        log_probs = log_softmax(logits.astype(np.float64), axis=1)
        loss = float(-np.mean(log_probs[np.arange(len(labels)), labels]))

        d_logits = np.exp(log_probs)
        d_logits[np.arange(len(labels)), labels] -= 1.0
        d_logits = (d_logits / len(labels)).astype(self.dtype)

        d_a2 = d_logits @ w3.T
        d_z2 = d_a2 * (z2 > 0)
        d_a1 = d_z2 @ w2.T
        d_z1 = d_a1 * (z1 > 0)

        gradients = [features.T @ d_z1, d_z1.sum(axis=0),
                     a1.T @ d_z2, d_z2.sum(axis=0),
                     a2.T @ d_logits, d_logits.sum(axis=0)]
        return loss, gradients

    def learn_batch(self, features, labels):
        """
        One forward pass, one backward pass and one Adam update of every parameter.

        :return: The mean cross entropy before the update
        :rtype: float

        :raises RuntimeError: If the loss is not finite
        """
        loss, gradients = self.gradients(features, labels)
        if not np.isfinite(loss):
            raise RuntimeError(ec.numerical_divergence(loss))

        self.adam.update(self.parameters, gradients)
        return loss

    def save(self, path, compression=0):
        """
        Write the dims and parameters to a checkpoint: magic b'lqdm', then little-endian u32 version, flag, d, h and m,
        then the float32 parameters in layer order, compressed according to bits 0-1 of the flag (0 none, 1 zlib,
        2 zstd). The optimiser state is not kept.
        """
        codecs = mc.set_compression(compression)
        assert codecs, ec.compression_violation(path, compression)

        payload = b"".join(p.astype("<f4").tobytes() for p in self.parameters)
        with open(path, "wb") as file:
            file.write(struct.pack(CHECKPOINT_HEADER, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, compression,
                                   self.d, self.h, self.m))
            file.write(codecs[0](payload))

    @classmethod
    def load(cls, path, learning_rate=1e-3):
        """Construct a classifier from a checkpoint written by save, with fresh Adam moments"""
        path = Path(path)
        if not path.exists():
            raise IOError(ec.path_invalid(path, "MlpClassifier.load"))

        with open(path, "rb") as file:
            header = file.read(struct.calcsize(CHECKPOINT_HEADER))
            payload = file.read()

        if len(header) < struct.calcsize(CHECKPOINT_HEADER):
            raise ValueError(ec.checkpoint_magic_violation(path.name))
        magic, version, flag, d, h, m = mc.struct_unpack(CHECKPOINT_HEADER, header, list_return=True)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(ec.checkpoint_magic_violation(path.name))
        if version != CHECKPOINT_VERSION:
            raise ValueError(ec.checkpoint_version_violation(path.name, version))

        codecs = mc.set_compression(flag & 0b11)
        if not codecs:
            raise ValueError(ec.compression_violation(path.name, flag & 0b11))

        values = np.frombuffer(codecs[1](payload), dtype="<f4")
        model = cls(d, h, m, learning_rate=learning_rate)
        if len(values) != model.param_count():
            raise ValueError(ec.checkpoint_payload_violation(path.name, model.param_count(), len(values)))

        start = 0
        for index, p in enumerate(model.parameters):
            model.parameters[index] = values[start:start + p.size].reshape(p.shape).astype(model.dtype)
            start += p.size
        model.adam = AdamState(model.parameters, learning_rate)
        return model


def init_classifier(dims, seed, learning_rate=1e-3):
    """A fresh classifier of dims (d, h, m), seeded so the same seed gives bit-identical parameters"""
    d, h, m = dims
    return MlpClassifier(d, h, m, seed, learning_rate)


def combine_probabilities(probabilities, weights):
    """
    Sum over voters of class probabilities of shape [voter, example, class], each scaled by its voter's weight.
    Voters of zero weight do not vote.

    :raises ValueError: If no voter carries weight
    """
    weights = np.asarray(weights, dtype=np.float64)
    voting = weights > 0
    if not voting.any():
        raise ValueError(ec.empty_gurus("weighted_ensemble_predict"))
    return np.tensordot(weights[voting], np.asarray(probabilities, dtype=np.float64)[voting], axes=1)


def weighted_vote(probabilities, weights):
    """The class of highest weighted probability from stacked voter probabilities, ties going to the lowest class"""
    return np.argmax(combine_probabilities(probabilities, weights), axis=1)


def weighted_ensemble_proba(models, weights, features):
    """Weighted sum of the class probabilities of every model of non-zero weight"""
    voting = [index for index, weight in enumerate(weights) if weight > 0]
    if not voting:
        raise ValueError(ec.empty_gurus("weighted_ensemble_predict"))
    probabilities = np.stack([models[index].predict_proba(features) for index in voting])
    return combine_probabilities(probabilities, np.asarray(weights, dtype=np.float64)[voting])


def weighted_ensemble_predict(models, weights, features):
    """
    The class with the highest weighted probability, ties going to the lowest class index

    :param models: Classifiers, aligned with weights
    :type models: list[MlpClassifier]

    :param weights: Delegation weight of each classifier
    :type weights: list | np.ndarray

    :rtype: np.ndarray
    """
    return np.argmax(weighted_ensemble_proba(models, weights, features), axis=1)
