# -*- encoding: utf-8 -*-
""" Factored state/action spaces, dynamic decision network structure,
partial assignments and ground-truth multi-agent MDPs.

Factor values are dense 0-based indices. Tables are addressed with the
canonical mixed-radix encoding of sorted parent lists, last-listed parent
varying fastest.
"""
import itertools
import logging

from collections import namedtuple

import numpy as np

from .exceptions import IncompatibleAssignmentError
from .utils import decode_mixed_radix
from .utils import encode_mixed_radix
from .utils import make_rng
from .utils import mixed_radix_strides
from .utils import product_size

LOGGER = logging.getLogger(__name__)

STATE = 0
ACTION = 1

ROW_SUM_TOLERANCE = 1e-9


class VariableId(namedtuple('VariableId', ['kind', 'index'])):
    """ Uniform name for a state or an action factor. Sorting puts states
    before actions, then orders by index. """
    __slots__ = ()

    @classmethod
    def state(cls, index):
        return cls(STATE, index)

    @classmethod
    def action(cls, index):
        return cls(ACTION, index)

    def __str__(self):
        return '%s%d' % ('S' if self.kind == STATE else 'A', self.index)


class FactorSpace(object):
    """ Cartesian product of finite factors. The joint cardinality is never
    materialized as a machine integer. """

    def __init__(self, sizes):
        sizes = tuple(int(size) for size in sizes)
        for size in sizes:
            if size < 1:
                raise ValueError('factor sizes must be >= 1, got %r' % (sizes,))
        self.sizes = sizes
        self._highs = np.array(sizes, dtype=np.int64)

    def __len__(self):
        return len(self.sizes)

    def __eq__(self, other):
        return isinstance(other, FactorSpace) and self.sizes == other.sizes

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self.sizes)

    def __repr__(self):
        return 'FactorSpace(%r)' % (self.sizes,)

    def contains(self, values):
        """ True if values is a valid joint value of this space """
        if len(values) != len(self.sizes):
            return False
        return all(0 <= value < size for value, size in zip(values, self.sizes))

    def validate(self, values, name='joint value'):
        """ Raise ValueError if values is not in this space """
        if not self.contains(values):
            raise ValueError('%s %r is not in %r' % (name, values, self))

    def uniform(self, rng):
        """ Draw every factor independently and uniformly """
        if not self.sizes:
            return ()
        return tuple(int(value) for value in rng.integers(0, self._highs))

    def joint_size(self):
        """ Joint cardinality as an arbitrary precision python int """
        return product_size(self.sizes)

    def encode(self, values):
        return encode_mixed_radix(values, self.sizes)

    def decode(self, code):
        return decode_mixed_radix(code, self.sizes)


class PartialAssignment(object):
    """ A consistent set of (VariableId, value) bindings.

    `steps` is the canonical encoding: a sorted tuple of
    (kind, index, value) triples. It is hashable and is what the sweep queue
    uses as identity.
    """
    __slots__ = ('steps', '_bindings')

    def __init__(self, bindings=()):
        items = bindings.items() if hasattr(bindings, 'items') else bindings
        values = {}
        for variable, value in items:
            variable = VariableId(*variable)
            value = int(value)
            if value < 0:
                raise ValueError('negative value for %s' % (variable,))
            previous = values.get(variable)
            if previous is not None and previous != value:
                raise IncompatibleAssignmentError(variable, previous, value)
            values[variable] = value
        self._bindings = values
        self.steps = tuple(sorted(
            (variable.kind, variable.index, value)
            for variable, value in values.items()
        ))

    @classmethod
    def from_steps(cls, steps):
        """ Build from canonical (kind, index, value) triples, trusted to be
        sorted and consistent. """
        assignment = cls.__new__(cls)
        assignment.steps = tuple(steps)
        assignment._bindings = None
        return assignment

    @property
    def _values(self):
        """ {VariableId: value}, built on first use """
        if self._bindings is None:
            self._bindings = dict(
                (VariableId(kind, index), value)
                for kind, index, value in self.steps
            )
        return self._bindings

    @classmethod
    def from_joint(cls, state=(), action=()):
        """ Full assignment of a joint state and/or joint action """
        steps = [(STATE, index, int(value)) for index, value in enumerate(state)]
        steps.extend(
            (ACTION, index, int(value)) for index, value in enumerate(action)
        )
        return cls.from_steps(steps)

    def __len__(self):
        return len(self.steps)

    def __bool__(self):
        return bool(self.steps)

    def __iter__(self):
        for kind, index, value in self.steps:
            yield VariableId(kind, index), value

    def __contains__(self, variable):
        return VariableId(*variable) in self._values

    def __eq__(self, other):
        return isinstance(other, PartialAssignment) and self.steps == other.steps

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self.steps)

    def __repr__(self):
        return '{%s}' % ', '.join(
            '%s=%d' % (variable, value) for variable, value in self
        )

    def get(self, variable, default=None):
        return self._values.get(VariableId(*variable), default)

    def items(self):
        return list(self)

    def state_values(self):
        """ {state index: value} for the bound state factors """
        return dict(
            (index, value) for kind, index, value in self.steps if kind == STATE
        )

    def action_values(self):
        """ {action index: value} for the bound action factors """
        return dict(
            (index, value) for kind, index, value in self.steps if kind == ACTION
        )

    def validate(self, state_space, action_space):
        """ Raise ValueError if a binding is outside its factor """
        for kind, index, value in self.steps:
            space = state_space if kind == STATE else action_space
            if index >= len(space) or value >= space.sizes[index]:
                raise ValueError('%s=%d is out of range' % (
                    VariableId(kind, index), value
                ))

    def compatible(self, other):
        """ True iff no variable is bound in both with differing values """
        small, large = self._values, other._values
        if len(small) > len(large):
            small, large = large, small
        for variable, value in small.items():
            bound = large.get(variable)
            if bound is not None and bound != value:
                return False
        return True

    def merge(self, other):
        """ Union of the bindings. Raises IncompatibleAssignmentError if the
        two assignments conflict. """
        if not other.steps:
            return self
        if not self.steps:
            return other
        values = dict(self._values)
        for variable, value in other._values.items():
            bound = values.get(variable)
            if bound is None:
                values[variable] = value
            elif bound != value:
                raise IncompatibleAssignmentError(variable, bound, value)
        return PartialAssignment.from_steps(sorted(
            (variable.kind, variable.index, value)
            for variable, value in values.items()
        ))


def compatible(first, second):
    """ True iff first and second agree on every shared variable """
    return first.compatible(second)


def merge(first, second):
    """ Union of two compatible partial assignments """
    return first.merge(second)


class Parents(namedtuple('Parents', ['factor', 'actions', 'states'])):
    """ Parents of a next-state factor given a joint action: the action
    parents bound to their values, and the (unbound) state parents selected
    by that action configuration. """
    __slots__ = ()

    def bind(self, state):
        """ Full parent configuration for the given joint state """
        steps = [(STATE, index, int(state[index])) for index in self.states]
        steps.extend(self.actions.steps)
        return PartialAssignment.from_steps(steps)


class DdnStructure(object):
    """ Two-slice dynamic decision network.

    For every state factor i: a sorted tuple of action parents, and for each
    joint configuration of those action parents a sorted tuple of state
    parents. A factor without action conditioning has a single shared
    state-parent tuple.

    :param state_space: FactorSpace of the state factors
    :param action_space: FactorSpace of the action factors
    :param action_parents: per state factor, an iterable of action indices
    :param state_parents: per state factor, either an iterable of state
        indices (shared by every action configuration) or a dict mapping
        action-parent value tuples (in the order given by action_parents) to
        iterables of state indices. A dict must cover every configuration.
    """

    def __init__(self, state_space, action_space, action_parents, state_parents):
        if len(action_parents) != len(state_space):
            raise ValueError('action_parents needs one entry per state factor')
        if len(state_parents) != len(state_space):
            raise ValueError('state_parents needs one entry per state factor')

        self.state_space = state_space
        self.action_space = action_space
        self.action_parents = []
        self.action_parent_sizes = []
        self._state_parents = []
        self._state_parent_sizes = []
        self.compact_state_parents = []

        for factor in range(len(state_space)):
            given_actions = [int(index) for index in action_parents[factor]]
            if len(set(given_actions)) != len(given_actions):
                raise ValueError('duplicate action parent for S%d' % factor)
            for index in given_actions:
                if not 0 <= index < len(action_space):
                    raise ValueError('invalid action parent A%d' % index)
            permutation = sorted(
                range(len(given_actions)), key=lambda j: given_actions[j]
            )
            actions = tuple(given_actions[j] for j in permutation)
            action_sizes = tuple(action_space.sizes[j] for j in actions)
            configs = product_size(action_sizes)

            spec = state_parents[factor]
            if hasattr(spec, 'items'):
                per_config = [None] * configs
                for key, parents in spec.items():
                    key = tuple(int(value) for value in key)
                    if len(key) != len(actions):
                        raise ValueError('bad action configuration %r' % (key,))
                    key = tuple(key[j] for j in permutation)
                    if any(not 0 <= v < s for v, s in zip(key, action_sizes)):
                        raise ValueError('bad action configuration %r' % (key,))
                    per_config[encode_mixed_radix(key, action_sizes)] = \
                        self._canonical_states(parents)
                if any(parents is None for parents in per_config):
                    raise ValueError(
                        'conditional parents of S%d miss a configuration' % factor
                    )
            else:
                per_config = [self._canonical_states(spec)] * configs

            self.action_parents.append(actions)
            self.action_parent_sizes.append(action_sizes)
            self._state_parents.append(per_config)
            self._state_parent_sizes.append([
                tuple(state_space.sizes[j] for j in parents)
                for parents in per_config
            ])
            self.compact_state_parents.append(
                tuple(sorted(set(itertools.chain.from_iterable(per_config))))
            )
        self._compile_locators()

    def _compile_locators(self):
        """ Padded index tables locating the parent configuration of every
        factor at once. Row r = row_start[i] + action code holds the state
        parents of factor i under that action configuration. """
        num_factors = len(self.state_space)
        action_vars = np.zeros((num_factors, max(
            [len(a) for a in self.action_parents] + [0])), dtype=np.int64)
        action_muls = np.zeros_like(action_vars)
        row_start, state_rows, state_sizes = [], [], []
        for factor in range(num_factors):
            parents = self.action_parents[factor]
            action_vars[factor, :len(parents)] = parents
            action_muls[factor, :len(parents)] = mixed_radix_strides(
                self.action_parent_sizes[factor])
            row_start.append(len(state_rows))
            state_rows.extend(self._state_parents[factor])
            state_sizes.extend(self._state_parent_sizes[factor])
        state_vars = np.zeros((len(state_rows), max(
            [len(p) for p in state_rows] + [0])), dtype=np.int64)
        state_muls = np.zeros_like(state_vars)
        code_base, total = [], 0
        for row, (parents, sizes) in enumerate(zip(state_rows, state_sizes)):
            state_vars[row, :len(parents)] = parents
            state_muls[row, :len(parents)] = mixed_radix_strides(sizes)
            code_base.append(total)
            total += product_size(sizes)
        if total >= 2 ** 62:
            raise ValueError('parent configurations do not fit 64-bit codes')
        self._action_vars = action_vars
        self._action_muls = action_muls
        self._row_start = np.array(row_start, dtype=np.int64)
        self._state_vars = state_vars
        self._state_muls = state_muls
        self._code_base = np.array(code_base, dtype=np.int64)

    def locate_all(self, state, action):
        """ (action codes, state codes) of every factor at (state, action) """
        state = np.asarray(state, dtype=np.int64)
        action = np.asarray(action, dtype=np.int64)
        action_codes = (action[self._action_vars] * self._action_muls).sum(axis=1)
        rows = self._row_start + action_codes
        state_codes = (state[self._state_vars[rows]] * self._state_muls[rows]).sum(axis=1)
        return action_codes, state_codes

    def config_codes(self, state, action):
        """ Global configuration code of every factor at (state, action),
        unique across factors """
        return self.codes_from(*self.locate_all(state, action))

    def codes_from(self, action_codes, state_codes):
        """ Global configuration codes of per-factor code pairs """
        return self._code_base[self._row_start + action_codes] + state_codes

    def config_code(self, factor, action_code, state_code):
        """ Global configuration code of one (action code, state code) pair """
        row = int(self._row_start[factor]) + int(action_code)
        return int(self._code_base[row]) + int(state_code)

    def _canonical_states(self, parents):
        parents = tuple(sorted(set(int(index) for index in parents)))
        for index in parents:
            if not 0 <= index < len(self.state_space):
                raise ValueError('invalid state parent S%d' % index)
        return parents

    def __len__(self):
        return len(self.action_parents)

    def num_action_configs(self, factor):
        return len(self._state_parents[factor])

    def state_parents(self, factor, action_code=0):
        """ State parents of factor under the given action configuration """
        return self._state_parents[factor][action_code]

    def state_parent_sizes(self, factor, action_code=0):
        return self._state_parent_sizes[factor][action_code]

    def num_state_configs(self, factor, action_code=0):
        return product_size(self._state_parent_sizes[factor][action_code])

    def is_conditioned(self, factor):
        """ True if the state parents of factor vary with its action parents """
        return len(set(self._state_parents[factor])) > 1

    def compact_parents(self, factor):
        """ (state parents, action parents) drawn by the compact graph """
        return self.compact_state_parents[factor], self.action_parents[factor]

    def action_code(self, factor, action):
        return encode_mixed_radix(
            [action[j] for j in self.action_parents[factor]],
            self.action_parent_sizes[factor]
        )

    def locate(self, factor, state, action):
        """ (action configuration code, state configuration code) of the
        parents of factor at (state, action) """
        action_code = self.action_code(factor, action)
        parents = self._state_parents[factor][action_code]
        state_code = encode_mixed_radix(
            [state[j] for j in parents],
            self._state_parent_sizes[factor][action_code]
        )
        return action_code, state_code

    def parents_of(self, factor, action):
        actions = PartialAssignment.from_steps(
            (ACTION, j, int(action[j])) for j in self.action_parents[factor]
        )
        return Parents(factor, actions, self.state_parents(
            factor, self.action_code(factor, action)
        ))

    def configuration(self, factor, action_code, state_code):
        """ PartialAssignment of the parents for a configuration code pair """
        action_values = decode_mixed_radix(
            action_code, self.action_parent_sizes[factor]
        )
        state_values = decode_mixed_radix(
            state_code, self._state_parent_sizes[factor][action_code]
        )
        steps = [
            (STATE, index, value) for index, value
            in zip(self._state_parents[factor][action_code], state_values)
        ]
        steps.extend(
            (ACTION, index, value) for index, value
            in zip(self.action_parents[factor], action_values)
        )
        return PartialAssignment.from_steps(steps)

    def locate_assignment(self, factor, assignment):
        """ Configuration code pair of a parent assignment of factor. Raises
        KeyError if a required parent is not bound. """
        action_values = [
            assignment.get((ACTION, j)) for j in self.action_parents[factor]
        ]
        if None in action_values:
            raise KeyError('missing action parent of S%d' % factor)
        action_code = encode_mixed_radix(
            action_values, self.action_parent_sizes[factor]
        )
        state_values = [
            assignment.get((STATE, j))
            for j in self._state_parents[factor][action_code]
        ]
        if None in state_values:
            raise KeyError('missing state parent of S%d' % factor)
        return action_code, encode_mixed_radix(
            state_values, self._state_parent_sizes[factor][action_code]
        )

    def configurations(self, factor):
        """ Iterate every (action code, state code) pair of factor """
        for action_code in range(self.num_action_configs(factor)):
            for state_code in range(self.num_state_configs(factor, action_code)):
                yield action_code, state_code


def parents_of(ddn, factor, action):
    """ Parents of next-state factor `factor` given joint action `action` """
    return ddn.parents_of(factor, action)


class GroundTruthMmdp(object):
    """ A fully specified factored MMDP.

    transitions[i][c] is an array of shape (state configs of i under action
    configuration c, |S_i|); rewards[i][c] has shape (state configs,).
    Tables are frozen (read-only) after construction.
    """

    def __init__(self, state_space, action_space, ddn, transitions, rewards,
                 gamma, initial_state=None):
        if not 0.0 <= gamma < 1.0:
            raise ValueError('gamma must be in [0, 1), got %r' % gamma)
        if len(transitions) != len(state_space) or len(rewards) != len(state_space):
            raise ValueError('one transition and reward table per state factor')

        self.state_space = state_space
        self.action_space = action_space
        self.ddn = ddn
        self.gamma = float(gamma)
        if initial_state is None:
            initial_state = (0,) * len(state_space)
        state_space.validate(initial_state, 'initial state')
        self.initial_state = tuple(int(value) for value in initial_state)

        self.transitions = []
        self.rewards = []
        self._cumulative = []
        for factor in range(len(state_space)):
            if len(transitions[factor]) != ddn.num_action_configs(factor):
                raise ValueError('S%d needs %d transition tables' % (
                    factor, ddn.num_action_configs(factor)))
            if len(rewards[factor]) != ddn.num_action_configs(factor):
                raise ValueError('S%d needs %d reward tables' % (
                    factor, ddn.num_action_configs(factor)))
            factor_t, factor_r, factor_c = [], [], []
            for action_code in range(ddn.num_action_configs(factor)):
                rows = ddn.num_state_configs(factor, action_code)
                table = np.array(transitions[factor][action_code], dtype=float)
                reward = np.array(rewards[factor][action_code], dtype=float)
                if table.shape != (rows, state_space.sizes[factor]):
                    raise ValueError('T%d[%d] has shape %r, expected %r' % (
                        factor, action_code, table.shape,
                        (rows, state_space.sizes[factor])))
                if reward.shape != (rows,):
                    raise ValueError('R%d[%d] has shape %r, expected %r' % (
                        factor, action_code, reward.shape, (rows,)))
                if (table < 0).any():
                    raise ValueError('T%d[%d] has negative entries' % (
                        factor, action_code))
                if np.abs(table.sum(axis=1) - 1.0).max() > ROW_SUM_TOLERANCE:
                    raise ValueError('T%d[%d] rows do not sum to 1' % (
                        factor, action_code))
                cumulative = np.cumsum(table, axis=1)
                for array in (table, reward, cumulative):
                    array.flags.writeable = False
                factor_t.append(table)
                factor_r.append(reward)
                factor_c.append(cumulative)
            self.transitions.append(factor_t)
            self.rewards.append(factor_r)
            self._cumulative.append(factor_c)

    @property
    def num_state_factors(self):
        return len(self.state_space)

    @property
    def num_action_factors(self):
        return len(self.action_space)

    def transition_row(self, factor, state, action):
        action_code, state_code = self.ddn.locate(factor, state, action)
        return self.transitions[factor][action_code][state_code]

    def reward(self, factor, state, action):
        action_code, state_code = self.ddn.locate(factor, state, action)
        return float(self.rewards[factor][action_code][state_code])

    def reward_vector(self, state, action):
        return np.array([
            self.reward(factor, state, action)
            for factor in range(self.num_state_factors)
        ])

    def transition_probability(self, state, action, next_state):
        """ Product form T(s'|s,a) = prod_i T_i(s'_i | parents) """
        probability = 1.0
        for factor in range(self.num_state_factors):
            probability *= self.transition_row(factor, state, action)[
                next_state[factor]]
        return probability

    def sample_step(self, state, action, rng=None):
        """ Draw s' factor by factor and return (s', reward vector) """
        rng = make_rng(rng)
        draws = rng.random(self.num_state_factors)
        next_state = []
        rewards = np.empty(self.num_state_factors)
        locate = self.ddn.locate
        for factor in range(self.num_state_factors):
            action_code, state_code = locate(factor, state, action)
            cumulative = self._cumulative[factor][action_code][state_code]
            value = int(np.searchsorted(cumulative, draws[factor], side='right'))
            next_state.append(min(value, len(cumulative) - 1))
            rewards[factor] = self.rewards[factor][action_code][state_code]
        return tuple(next_state), rewards


def sample_step(mmdp, state, action, rng=None):
    """ Sample (s', r) from a known model """
    return mmdp.sample_step(state, action, rng)
