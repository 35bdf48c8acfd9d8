from . import errors_codes as ec

import numpy as np


class DelegationState:
    __slots__ = ["n", "target", "batch_index", "_gurus"]

    def __init__(self, target, batch_index=0):
        """
        Holds the delegation function for one batch, where target[i] is the voter that voter i delegates to and a
        voter with target[i] == i is a guru. The state is read only once constructed; mechanisms build a new state for
        every batch rather than editing an old one.

        :param target: Sequence of voter indexes of length n
        :type target: list | np.ndarray

        :param batch_index: The batch t these delegations apply to
        :type batch_index: int

        :raises ValueError: If the ensemble is empty or a target is not a voter of this ensemble
        """
        target = np.array(target, dtype=np.int64).reshape(-1)
        if len(target) < 1:
            raise ValueError(ec.invalid_ensemble(len(target)))

        out_of_range = (target < 0) | (target >= len(target))
        if out_of_range.any():
            raise ValueError(ec.voter_out_of_range(int(target[out_of_range][0]), len(target)))

        target.flags.writeable = False
        self.n = len(target)
        self.target = target
        self.batch_index = int(batch_index)
        self._gurus = None

    @classmethod
    def reset_all_self(cls, n, batch_index=0):
        """Every voter delegates to itself, as the ensemble is initialised"""
        if n < 1:
            raise ValueError(ec.invalid_ensemble(n))
        return cls(np.arange(n), batch_index)

    def __repr__(self):
        return f"Delegations t={self.batch_index}: {self.target.tolist()}"

    def __getitem__(self, voter):
        """The voter that voter delegates to"""
        return int(self.target[voter])

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, DelegationState):
            return NotImplemented
        return np.array_equal(self.target, other.target)

    def resolve_guru(self, voter):
        """
        Follow delegations from voter until a self-delegation is reached.

        :param voter: The voter to start from
        :type voter: int

        :return: The guru that voter's delegation chain ends at
        :rtype: int

        :raises RuntimeError: If n applications of the delegation function do not reach a fixed point
        """
        if not 0 <= voter < self.n:
            raise ValueError(ec.voter_out_of_range(voter, self.n))

        chain = [int(voter)]
        current = int(voter)
        for _ in range(self.n):
            delegate = int(self.target[current])
            if delegate == current:
                return current
            current = delegate
            chain.append(current)

        raise RuntimeError(ec.cycle_detected(voter, chain))

    def resolve_all(self):
        """The guru of every voter as an array of length n"""
        if self._gurus is None:
            gurus = np.array([self.resolve_guru(voter) for voter in range(self.n)], dtype=np.int64)
            gurus.flags.writeable = False
            self._gurus = gurus
        return self._gurus

    def guru_set(self):
        """
        Only gurus take part in learning or in weighted prediction

        :rtype: frozenset
        """
        self.resolve_all()
        return frozenset(int(voter) for voter in np.flatnonzero(self.target == np.arange(self.n)))

    def guru_flags(self):
        """Boolean array that is True for the gurus"""
        self.resolve_all()
        return self.target == np.arange(self.n)

    def compute_weights(self):
        """
        Each guru is weighted by the number of voters whose delegation chain ends at it, including itself; non-gurus
        have a weight of zero. The weights always sum to n.

        :rtype: np.ndarray
        """
        return np.bincount(self.resolve_all(), minlength=self.n).astype(np.int64)
