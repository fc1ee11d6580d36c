# -*- encoding: utf-8 -*-
""" Count-based learning of the factored transition model and running-mean
learning of the factored reward model.

Storage is sparse: statistics exist only for parent configurations that
were actually recorded, keyed by the global configuration code of the DDN.
"""
import logging

import numpy as np

from .exceptions import ProblemFormatError
from .exceptions import UnvisitedConfigurationError
from .model import PartialAssignment
from .utils import make_rng

LOGGER = logging.getLogger(__name__)

SNAPSHOT_FORMAT = 'coopsweep-learner'


class ModelLearner(object):
    """ Learned T_i and R_i tables for every state factor of a DDN.

    Recorded configurations are rows of growable arrays (successor counts,
    reward sums, visits), addressed through the global configuration codes
    of the DDN. Nothing is stored for configurations never recorded.

    :param ddn: the DdnStructure known in advance
    :param prior: N0 added to every (configuration, successor) cell
        [default: 1.0, add-one smoothing]. 0 disables the prior; estimates of
        unvisited configurations are then undefined.
    :param reward_prior: reward mean used for configurations never visited
        [default: 0.0]
    """

    def __init__(self, ddn, **kwargs):
        self.ddn = ddn
        self.state_space = ddn.state_space
        self.prior = float(kwargs.pop('prior', 1.0))
        self.reward_prior = float(kwargs.pop('reward_prior', 0.0))
        if self.prior < 0:
            raise ValueError('prior must be >= 0, got %r' % self.prior)
        if kwargs:
            raise TypeError('unexpected arguments: %s' % ', '.join(sorted(kwargs)))
        self.records = 0

        self.sizes = np.array(self.state_space.sizes, dtype=np.int64)
        width = int(self.sizes.max()) if len(self.sizes) else 1
        # cells past the size of a factor never receive counts nor prior
        self._padding = np.arange(width)[None, :] >= self.sizes[:, None]
        self._rows = {}
        self._factor_rows = [[] for _ in range(len(self.state_space))]
        self._factor_arrays = [None] * len(self.state_space)
        self._assignments = []
        self._counts = np.zeros((16, width))
        self._reward_sum = np.zeros(16)
        self._visits = np.zeros(16, dtype=np.int64)
        self._factor = np.zeros(16, dtype=np.int64)
        self._keys = np.zeros((16, 2), dtype=np.int64)

    @property
    def num_rows(self):
        """ Number of recorded configurations over every factor """
        return len(self._assignments)

    def _grow(self, needed):
        capacity = len(self._visits)
        if needed <= capacity:
            return
        capacity = max(needed, 2 * capacity)
        for name in ('_counts', '_reward_sum', '_visits', '_factor', '_keys'):
            array = getattr(self, name)
            grown = np.zeros((capacity,) + array.shape[1:], dtype=array.dtype)
            grown[:len(array)] = array
            setattr(self, name, grown)

    def _add_row(self, code, factor, action_code, state_code):
        row = len(self._assignments)
        self._grow(row + 1)
        self._rows[code] = row
        self._factor[row] = factor
        self._keys[row] = (action_code, state_code)
        self._assignments.append(None)
        self._factor_rows[factor].append(row)
        self._factor_arrays[factor] = None
        return row

    def _key(self, factor, configuration):
        if isinstance(configuration, PartialAssignment):
            return self.ddn.locate_assignment(factor, configuration)
        action_code, state_code = configuration
        return int(action_code), int(state_code)

    def _row(self, factor, configuration):
        """ Row of a configuration, None if it was never recorded """
        key = self._key(factor, configuration)
        return self._rows.get(self.ddn.config_code(factor, key[0], key[1]))

    def assignment(self, row):
        """ PartialAssignment of the parents of a recorded row """
        assignment = self._assignments[row]
        if assignment is None:
            action_code, state_code = self._keys[row]
            assignment = self.ddn.configuration(
                int(self._factor[row]), int(action_code), int(state_code))
            self._assignments[row] = assignment
        return assignment

    def factor_rows(self, factor):
        """ Recorded rows of factor, in recording order """
        rows = self._factor_arrays[factor]
        if rows is None:
            rows = np.array(self._factor_rows[factor], dtype=np.int64)
            self._factor_arrays[factor] = rows
        return rows

    def locate_rows(self, state, action):
        """ Row of every factor at (state, action), -1 where never recorded """
        codes = self.ddn.config_codes(state, action)
        get = self._rows.get
        return np.array([get(code, -1) for code in codes.tolist()], dtype=np.int64)

    def record(self, state, action, next_state, rewards):
        """ Add one experience tuple to every factor's statistics """
        action_codes, state_codes = self.ddn.locate_all(state, action)
        codes = self.ddn.codes_from(action_codes, state_codes)
        get = self._rows.get
        rows = []
        for factor, code in enumerate(codes.tolist()):
            row = get(code)
            if row is None:
                row = self._add_row(
                    code, factor, action_codes[factor], state_codes[factor])
            rows.append(row)
        rows = np.array(rows, dtype=np.int64)
        self._counts[rows, np.asarray(next_state, dtype=np.int64)] += 1.0
        self._reward_sum[rows] += np.asarray(rewards, dtype=float)
        self._visits[rows] += 1
        self.records += 1

    def visits(self, factor, configuration):
        row = self._row(factor, configuration)
        return 0 if row is None else int(self._visits[row])

    def counts(self, factor, configuration):
        """ Raw counts N (without the prior) of a configuration """
        size = self.state_space.sizes[factor]
        row = self._row(factor, configuration)
        if row is None:
            return np.zeros(size)
        return self._counts[row, :size].copy()

    def transition_row(self, factor, configuration):
        """ Full estimated row T_i(. | configuration) """
        size = self.state_space.sizes[factor]
        row = self._row(factor, configuration)
        weights = np.full(size, self.prior)
        if row is not None:
            weights = weights + self._counts[row, :size]
        total = weights.sum()
        if total <= 0:
            raise UnvisitedConfigurationError(factor, self._key(factor, configuration))
        return weights / total

    def transition_estimate(self, factor, configuration, value):
        """ (N + N0) / sum(N + N0) for successor value of factor """
        return float(self.transition_row(factor, configuration)[value])

    def is_defined(self, factor, configuration):
        if self.prior > 0:
            return True
        row = self._row(factor, configuration)
        return row is not None and self._visits[row] > 0

    def reward_mean(self, factor, configuration):
        row = self._row(factor, configuration)
        if row is None or self._visits[row] == 0:
            return self.reward_prior
        return float(self._reward_sum[row] / self._visits[row])

    def predecessor_weights(self, factor, value):
        """ (rows, T_i(value | row)) over the recorded rows of factor """
        rows = self.factor_rows(factor)
        size = self.state_space.sizes[factor]
        totals = self._visits[rows] + self.prior * size
        return rows, (self._counts[rows, value] + self.prior) / totals

    def backprop_priorities(self, factor_deltas, state):
        """ (rows, Delta_i * T_i(state_i | row)) over the recorded rows of
        every factor i with Delta_i > 0 """
        count = len(self._assignments)
        factors = self._factor[:count]
        deltas = np.asarray(factor_deltas, dtype=float)[factors]
        rows = np.flatnonzero(deltas > 0)
        factors = factors[rows]
        values = np.asarray(state, dtype=np.int64)[factors]
        weights = (self._counts[rows, values] + self.prior) / \
            (self._visits[rows] + self.prior * self.sizes[factors])
        return rows, deltas[rows] * weights

    def predecessor_probabilities(self, factor, value, include_unvisited=False):
        """ Iterate (parent assignment, T_i(value | assignment)) over the
        parent configurations of factor whose estimate is defined. """
        size = self.state_space.sizes[factor]
        if not include_unvisited:
            rows, weights = self.predecessor_weights(factor, value)
            for row, weight in zip(rows.tolist(), weights.tolist()):
                yield self.assignment(row), weight
            return
        for key in self.ddn.configurations(factor):
            row = self._rows.get(self.ddn.config_code(factor, key[0], key[1]))
            if row is not None:
                total = self._visits[row] + self.prior * size
                yield self.assignment(row), \
                    float((self._counts[row, value] + self.prior) / total)
            elif self.prior > 0:
                yield self.ddn.configuration(factor, key[0], key[1]), 1.0 / size

    def sample_simulated(self, state, action, rng=None):
        """ Draw (s', r) from the learned model.

        Configurations with an undefined estimate (prior 0, never visited)
        fall back to a uniform successor.
        """
        rng = make_rng(rng)
        draws = rng.random(len(self.sizes))
        rows = self.locate_rows(state, action)
        known = rows >= 0

        # never recorded: uniform successor, prior reward
        next_state = np.minimum(
            (draws * self.sizes).astype(np.int64), self.sizes - 1)
        rewards = np.full(len(self.sizes), self.reward_prior)
        if not known.all() and self.prior == 0:
            LOGGER.debug(
                "%d factors with undefined estimates, uniform successors",
                np.count_nonzero(~known)
            )

        if known.any():
            seen = rows[known]
            weights = self._counts[seen] + self.prior
            weights[self._padding[known]] = 0.0
            cumulative = np.cumsum(weights, axis=1)
            targets = draws[known] * cumulative[:, -1]
            values = (cumulative <= targets[:, None]).sum(axis=1)
            next_state[known] = np.minimum(values, self.sizes[known] - 1)
            rewards[known] = self._reward_sum[seen] / self._visits[seen]
        return tuple(next_state.tolist()), rewards

    def to_dict(self):
        """ JSON-compatible snapshot of counts and reward statistics """
        factors = []
        for factor, size in enumerate(self.state_space.sizes):
            rows = sorted(
                self._factor_rows[factor],
                key=lambda row: tuple(self._keys[row])
            )
            factors.append([
                {
                    'action_code': int(self._keys[row, 0]),
                    'state_code': int(self._keys[row, 1]),
                    'counts': self._counts[row, :size].tolist(),
                    'reward_sum': float(self._reward_sum[row]),
                    'visits': int(self._visits[row]),
                }
                for row in rows
            ])
        return {
            'format': SNAPSHOT_FORMAT,
            'version': 1,
            'prior': self.prior,
            'reward_prior': self.reward_prior,
            'records': self.records,
            'factors': factors,
        }

    @classmethod
    def from_dict(cls, document, ddn):
        """ Restore a snapshot produced by to_dict for the same DDN """
        if document.get('format') != SNAPSHOT_FORMAT:
            raise ProblemFormatError('not a learner snapshot')
        if len(document['factors']) != len(ddn.state_space):
            raise ProblemFormatError('snapshot has a different number of factors')
        learner = cls(
            ddn, prior=document['prior'], reward_prior=document['reward_prior']
        )
        learner.records = document.get('records', 0)
        for factor, entries in enumerate(document['factors']):
            size = ddn.state_space.sizes[factor]
            for entry in entries:
                action_code, state_code = entry['action_code'], entry['state_code']
                counts = np.array(entry['counts'], dtype=float)
                if counts.shape != (size,):
                    raise ProblemFormatError(
                        'S%d counts need %d entries' % (factor, size))
                row = learner._add_row(
                    ddn.config_code(factor, action_code, state_code),
                    factor, action_code, state_code
                )
                learner._counts[row, :size] = counts
                learner._reward_sum[row] = float(entry['reward_sum'])
                learner._visits[row] = int(entry['visits'])
        return learner
