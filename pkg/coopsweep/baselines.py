# -*- encoding: utf-8 -*-
""" Comparison algorithms: sparse cooperative Q-learning on the same
factorization as CPS, the uniform random policy and the flat
value-iteration oracle used as exact reference on small problems. """
import logging
import warnings

import numpy as np
import scipy.sparse as sp

from .agent import AgentConfig
from .agent import BaseAgent
from .agent import GreedyQAgent
from .exceptions import ConvergenceError
from .exceptions import OracleSizeError
from .exceptions import ProblemFormatError
from .factored_q import FactoredQ
from .problem import mmdp_to_dict
from .utils import check_cache
from .utils import make_cache_key
from .utils import make_rng

LOGGER = logging.getLogger(__name__)

DEFAULT_ORACLE_CAP = 10 ** 7
DEFAULT_TOLERANCE = 1e-8
SNAPSHOT_FORMAT = 'coopsweep-flat-solution'


class ScqlConfig(AgentConfig):
    """ AgentConfig plus the optimistic initial value of every Q entry
    [default: 5.0] """
    defaults = dict(AgentConfig.defaults, optimistic_init=5.0)


class ScqlAgent(GreedyQAgent):
    """ Model-free factored Q-learning: one local TD update per real step,
    no model, no queue, no sweeps. """
    name = 'scql'

    def __init__(self, ddn, bases, config=None, **kwargs):
        config = ScqlConfig() if config is None else config
        q = FactoredQ.from_bases(bases, ddn, config.optimistic_init)
        super(ScqlAgent, self).__init__(ddn, q, config, **kwargs)

    def observe(self, state, action, next_state, rewards, rng=None):
        result = self._td_step(state, action, next_state, rewards)
        self.steps += 1
        return result


def scql_observe(agent, state, action, next_state, rewards, rng=None):
    return agent.observe(state, action, next_state, rewards, rng)


def random_policy(state, rng, action_space):
    """ Uniform joint action, every factor drawn independently. The state
    is ignored. """
    return action_space.uniform(make_rng(rng))


class RandomAgent(BaseAgent):
    name = 'random'

    def select_action(self, state, rng=None):
        return random_policy(state, self.rng if rng is None else rng,
                             self.action_space)


class FlatSolution(object):
    """ Exact Q over the joint state and action spaces, indexed by mixed
    radix codes. Ties of the greedy policy go to the lowest action code. """

    def __init__(self, q, state_sizes, action_sizes, iterations=0, residual=0.0):
        self.q = np.asarray(q, dtype=float)
        self.state_sizes = tuple(state_sizes)
        self.action_sizes = tuple(action_sizes)
        self.iterations = iterations
        self.residual = residual
        self.values = self.q.max(axis=1)
        self.policy = self.q.argmax(axis=1)

    def _state_code(self, state):
        return int(np.ravel_multi_index(tuple(state), self.state_sizes)) \
            if self.state_sizes else 0

    def greedy_action(self, state):
        code = int(self.policy[self._state_code(state)])
        if not self.action_sizes:
            return ()
        return tuple(int(v) for v in np.unravel_index(code, self.action_sizes))

    def value(self, state):
        return float(self.values[self._state_code(state)])

    def q_value(self, state, action):
        action_code = int(np.ravel_multi_index(tuple(action), self.action_sizes)) \
            if self.action_sizes else 0
        return float(self.q[self._state_code(state), action_code])

    def to_dict(self):
        return {
            'format': SNAPSHOT_FORMAT,
            'version': 1,
            'state_sizes': list(self.state_sizes),
            'action_sizes': list(self.action_sizes),
            'iterations': self.iterations,
            'residual': self.residual,
            'q': self.q.tolist(),
            'values': self.values.tolist(),
            'policy': self.policy.tolist(),
        }

    @classmethod
    def from_dict(cls, document):
        if document.get('format') != SNAPSHOT_FORMAT:
            raise ProblemFormatError('not a flat solution snapshot')
        return cls(
            document['q'], document['state_sizes'], document['action_sizes'],
            document.get('iterations', 0), document.get('residual', 0.0)
        )


def _joint_states(state_sizes):
    """ Every joint state, one row per mixed radix code """
    count = int(np.prod(state_sizes, dtype=np.int64))
    if not state_sizes:
        return np.zeros((1, 0), dtype=np.int64)
    return np.stack(np.unravel_index(np.arange(count), state_sizes), axis=1)


def _joint_model(mmdp, states, action):
    """ Sparse joint transition matrix and reward vector of one action """
    ddn = mmdp.ddn
    count = states.shape[0]
    matrix = sp.csr_matrix(np.ones((count, 1)))
    rewards = np.zeros(count)
    for factor in range(mmdp.num_state_factors):
        action_code = ddn.action_code(factor, action)
        parents = ddn.state_parents(factor, action_code)
        if parents:
            codes = np.ravel_multi_index(
                tuple(states[:, j] for j in parents),
                ddn.state_parent_sizes(factor, action_code)
            )
        else:
            codes = np.zeros(count, dtype=np.int64)
        factor_rows = sp.csr_matrix(mmdp.transitions[factor][action_code][codes])
        rewards += mmdp.rewards[factor][action_code][codes]
        # row-wise Kronecker product, the new factor varies fastest
        width = factor_rows.shape[1]
        matrix = sp.kron(matrix, np.ones((1, width)), format='csr').multiply(
            sp.kron(np.ones((1, matrix.shape[1])), factor_rows, format='csr')
        ).tocsr()
    return matrix, rewards


def flat_value_iteration(mmdp, tol=DEFAULT_TOLERANCE, **kwargs):
    """ Synchronous value iteration on the flattened problem.

    :param mmdp: the GroundTruthMmdp to solve
    :param tol: max-norm Bellman residual reached by the returned Q
    :param cap: (optional) refuse when |S|.|A| exceeds it [default: 10**7]
    :param max_iterations: (optional) [default: 100000]
    :return: a FlatSolution
    """
    cap = kwargs.pop('cap', DEFAULT_ORACLE_CAP)
    max_iterations = kwargs.pop('max_iterations', 100000)
    if kwargs:
        raise TypeError('unexpected arguments: %s' % ', '.join(sorted(kwargs)))
    if tol <= 0:
        raise ValueError('tol must be > 0')
    if max_iterations < 1:
        raise ValueError('max_iterations must be >= 1')

    size = mmdp.state_space.joint_size() * mmdp.action_space.joint_size()
    if size > cap:
        raise OracleSizeError(size, cap)
    if size > cap // 2:
        message = 'flat oracle on %d entries, close to the cap of %d' % (size, cap)
        LOGGER.warning(message)
        warnings.warn(message)

    state_sizes = mmdp.state_space.sizes
    action_sizes = mmdp.action_space.sizes
    states = _joint_states(state_sizes)
    num_actions = mmdp.action_space.joint_size()
    matrices = []
    rewards = np.empty((states.shape[0], num_actions))
    for code in range(num_actions):
        matrix, reward = _joint_model(mmdp, states, mmdp.action_space.decode(code))
        matrices.append(matrix)
        rewards[:, code] = reward
    LOGGER.info(
        "flat oracle: %d states, %d actions, %d transition entries",
        states.shape[0], num_actions, sum(m.nnz for m in matrices)
    )

    gamma = mmdp.gamma
    q = np.zeros_like(rewards)
    previous = None
    for iteration in range(1, max_iterations + 1):
        values = q.max(axis=1)
        updated = np.empty_like(q)
        for code, matrix in enumerate(matrices):
            updated[:, code] = rewards[:, code] + gamma * matrix.dot(values)
        residual = float(np.abs(updated - q).max()) if q.size else 0.0
        q = updated
        if previous is not None and \
                residual > gamma * previous + 1e-12 * max(1.0, previous):
            raise ConvergenceError(
                iteration, residual, 'residual grew beyond gamma times the '
                'previous one (%g)' % previous
            )
        LOGGER.debug("value iteration %d: residual %g", iteration, residual)
        if residual < tol:
            return FlatSolution(q, state_sizes, action_sizes, iteration, residual)
        previous = residual
    raise ConvergenceError(max_iterations, residual, 'iteration limit reached')


def solve_oracle(mmdp, tol=DEFAULT_TOLERANCE, cache=None, **kwargs):
    """ flat_value_iteration memoized in a coopsweep cache, keyed by the
    problem content and the tolerance """
    cache = check_cache(cache)
    key = make_cache_key(mmdp_to_dict(mmdp), 'flat_value_iteration', tol)
    return cache.get_or_compute(
        key, lambda: flat_value_iteration(mmdp, tol, **kwargs)
    )


class OracleAgent(BaseAgent):
    """ Acts greedily with a FlatSolution and never learns """
    name = 'oracle'

    def __init__(self, solution, state_space, action_space, **kwargs):
        super(OracleAgent, self).__init__(state_space, action_space, **kwargs)
        self.solution = solution

    def select_action(self, state, rng=None):
        return self.solution.greedy_action(state)

    def max_value(self, state):
        return self.solution.value(state)
