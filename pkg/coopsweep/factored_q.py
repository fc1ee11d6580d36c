# -*- encoding: utf-8 -*-
""" Linearly factored Q-function.

Q(s, a) ~ sum_x Q_x(s[x_s], a[x_a]) where the domain (x_s, x_a) of every
component is obtained by back-propagating a basis domain (a set of
next-state factors) through the DDN.
"""
import logging

from collections import namedtuple

import numpy as np

from .exceptions import ProblemFormatError

LOGGER = logging.getLogger(__name__)

SNAPSHOT_FORMAT = 'coopsweep-q'

TdResult = namedtuple('TdResult', ['component_deltas', 'factor_deltas'])


class BasisDomain(frozenset):
    """ Non-empty set of next-state factor indices selected as a basis """

    def __new__(cls, factors, num_state_factors=None):
        basis = super(BasisDomain, cls).__new__(cls, (int(f) for f in factors))
        if not basis:
            raise ValueError('a basis domain cannot be empty')
        for factor in basis:
            if factor < 0 or (num_state_factors is not None
                              and factor >= num_state_factors):
                raise ValueError('invalid basis factor %d' % factor)
        return basis

    def __repr__(self):
        return 'BasisDomain(%r)' % sorted(self)


def backpropagate_basis(basis, ddn):
    """ (x_s, x_a): sorted union of the DDN parents, over every action
    configuration, of every factor of the basis """
    state_vars, action_vars = set(), set()
    for factor in basis:
        states, actions = ddn.compact_parents(factor)
        state_vars.update(states)
        action_vars.update(actions)
    return tuple(sorted(state_vars)), tuple(sorted(action_vars))


class QComponent(object):
    """ One Q_x table. The table is an ndarray with one axis per state
    variable followed by one axis per action variable. """

    def __init__(self, basis, state_vars, action_vars, table):
        self.basis = basis
        self.state_vars = tuple(state_vars)
        self.action_vars = tuple(action_vars)
        self.table = table

    @classmethod
    def from_basis(cls, basis, ddn, initial=0.0):
        state_vars, action_vars = backpropagate_basis(basis, ddn)
        shape = tuple(ddn.state_space.sizes[j] for j in state_vars) + \
            tuple(ddn.action_space.sizes[k] for k in action_vars)
        return cls(basis, state_vars, action_vars, np.full(shape, float(initial)))

    def index(self, state, action):
        return tuple(state[j] for j in self.state_vars) + \
            tuple(action[k] for k in self.action_vars)

    def value(self, state, action):
        return float(self.table[self.index(state, action)])

    def state_slice(self, state):
        """ View of the table over the action variables with the state
        variables fixed to state """
        return self.table[tuple(state[j] for j in self.state_vars)]

    def __repr__(self):
        return 'QComponent(basis=%r, x_s=%r, x_a=%r)' % (
            sorted(self.basis), self.state_vars, self.action_vars
        )


def _padded(rows, fill=0):
    """ Stack ragged integer rows into a matrix padded with fill """
    width = max([len(row) for row in rows] + [0])
    matrix = np.full((len(rows), width), fill, dtype=np.int64)
    for position, row in enumerate(rows):
        matrix[position, :len(row)] = row
    return matrix


class FactoredQ(object):
    """ Sum of QComponents with the bookkeeping needed for reward splitting
    and factor-level temporal differences.

    Every component table is a view on one flat buffer, `values`, so the
    entries touched by a joint (state, action) are gathered with a single
    index array.
    """

    def __init__(self, components, num_state_factors):
        self.components = list(components)
        self.num_state_factors = num_state_factors
        self.fanout = np.zeros(num_state_factors, dtype=int)
        for component in self.components:
            for factor in component.basis:
                self.fanout[factor] += 1

        sizes = [component.table.size for component in self.components]
        self.offsets = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.int64) \
            if sizes else np.zeros(0, dtype=np.int64)
        self.values = np.empty(int(sum(sizes)))
        state_muls, action_muls = [], []
        for component, offset, size in zip(self.components, self.offsets, sizes):
            shape = component.table.shape
            self.values[offset:offset + size] = np.ravel(component.table)
            component.table = self.values[offset:offset + size].reshape(shape)
            strides = [int(np.prod(shape[axis + 1:], dtype=np.int64))
                       for axis in range(len(shape))]
            state_muls.append(strides[:len(component.state_vars)])
            action_muls.append(strides[len(component.state_vars):])
        self._state_vars = _padded([c.state_vars for c in self.components])
        self._state_muls = _padded(state_muls)
        self._action_vars = _padded([c.action_vars for c in self.components])
        self._action_muls = _padded(action_muls)

        # reward split: sorted basis factors, padded with a zero slot
        self._basis_factors = _padded(
            [sorted(component.basis) for component in self.components],
            fill=num_state_factors
        )
        # factor delta weights: 1 / |x_s| for i in x_s
        self._delta_weights = np.zeros((len(self.components), num_state_factors))
        for position, component in enumerate(self.components):
            for factor in component.state_vars:
                self._delta_weights[position, factor] = \
                    1.0 / len(component.state_vars)

    @classmethod
    def from_bases(cls, bases, ddn, initial=0.0):
        """ Build one zero (or `initial`) component per basis domain """
        num_state_factors = len(ddn.state_space)
        components = [
            QComponent.from_basis(
                BasisDomain(basis, num_state_factors), ddn, initial
            )
            for basis in bases
        ]
        if not components:
            raise ValueError('at least one basis domain is required')
        return cls(components, num_state_factors)

    def __len__(self):
        return len(self.components)

    def evaluate(self, state, action):
        return sum(
            component.value(state, action) for component in self.components
        )

    def state_bases(self, state):
        """ Flat position of the first entry of every component conditioned
        on state. The action entries follow contiguously. """
        state = np.asarray(state, dtype=np.int64)
        return self.offsets + (state[self._state_vars] * self._state_muls).sum(axis=1)

    def flat_index(self, state, action):
        """ Flat position of Q_x(s[x_s], a[x_a]) for every component """
        action = np.asarray(action, dtype=np.int64)
        return self.state_bases(state) + \
            (action[self._action_vars] * self._action_muls).sum(axis=1)

    def split_reward(self, rewards, position):
        """ R_x: weighted sum of the rewards of the basis factors of
        component `position`, weights 1 / fanout """
        component = self.components[position]
        return sum(
            rewards[factor] / self.fanout[factor]
            for factor in sorted(component.basis)
        )

    def split_reward_array(self, rewards):
        """ R_x for every component, summed in the same order as
        split_reward """
        terms = np.zeros(self.num_state_factors + 1)
        np.divide(np.asarray(rewards, dtype=float), self.fanout,
                  out=terms[:-1], where=self.fanout > 0)
        totals = np.zeros(len(self.components))
        for column in self._basis_factors.T:
            totals = totals + terms[column]
        return totals

    def split_rewards(self, rewards):
        """ R_x for every component """
        return self.split_reward_array(rewards).tolist()

    def factor_deltas(self, component_deltas):
        """ Delta_i = sum_x I(i in x_s) |Delta_x| / |x_s| """
        return np.abs(np.asarray(component_deltas)) @ self._delta_weights

    def td_update(self, state, action, next_state, next_action, rewards,
                  alpha, gamma):
        """ Local TD update of every component at (state, action).

        All Delta_x are computed against the tables before any of them is
        modified. Returns a TdResult with the raw (pre-alpha) deltas.
        """
        current = self.flat_index(state, action)
        target = self.values[self.flat_index(next_state, next_action)]
        deltas = self.split_reward_array(rewards) + gamma * target - \
            self.values[current]
        self.values[current] += alpha * deltas
        return TdResult(deltas, self.factor_deltas(deltas))

    def to_dict(self):
        """ JSON-compatible snapshot of the domains and tables """
        return {
            'format': SNAPSHOT_FORMAT,
            'version': 1,
            'num_state_factors': self.num_state_factors,
            'components': [
                {
                    'basis': sorted(component.basis),
                    'state_vars': list(component.state_vars),
                    'action_vars': list(component.action_vars),
                    'shape': list(component.table.shape),
                    'table': component.table.ravel().tolist(),
                }
                for component in self.components
            ],
        }

    @classmethod
    def from_dict(cls, document):
        if document.get('format') != SNAPSHOT_FORMAT:
            raise ProblemFormatError('not a Q-function snapshot')
        components = []
        for entry in document['components']:
            table = np.array(entry['table'], dtype=float)
            try:
                table = table.reshape(entry['shape'])
            except ValueError as error:
                raise ProblemFormatError(str(error))
            components.append(QComponent(
                BasisDomain(entry['basis']), entry['state_vars'],
                entry['action_vars'], table
            ))
        return cls(components, document['num_state_factors'])
