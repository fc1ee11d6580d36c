# -*- encoding: utf-8 -*-
""" Agents interacting with an Environment, and the cooperative prioritized
sweeping agent itself """
import logging
import time

import numpy as np

from .action_selection import ActionSelector
from .events import STEP_TELEMETRY
from .factored_q import FactoredQ
from .learner import ModelLearner
from .model import ACTION
from .model import STATE
from .sweep_queue import DEFAULT_THETA
from .sweep_queue import SweepQueue
from .sweep_queue import enqueue_backprop
from .utils import make_rng

LOGGER = logging.getLogger(__name__)


class AgentConfig(object):
    """ Hyperparameters shared by the learning agents.

    Every field is given as a keyword argument; missing fields take the
    value from `defaults`. Unknown fields raise TypeError.
    """
    defaults = {
        'alpha': 0.3,
        'gamma': 0.9,
        'epsilon_start': 0.9,
        't_greedy': 1000,
        'seed': None,
    }

    def __init__(self, **kwargs):
        for name, default in self.defaults.items():
            setattr(self, name, kwargs.pop(name, default))
        if kwargs:
            raise TypeError('unexpected %s fields: %s' % (
                self.__class__.__name__, ', '.join(sorted(kwargs))))
        self.validate()

    def validate(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError('alpha must be in (0, 1], got %r' % self.alpha)
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError('gamma must be in [0, 1), got %r' % self.gamma)
        if not 0.0 <= self.epsilon_start <= 1.0:
            raise ValueError(
                'epsilon_start must be in [0, 1], got %r' % self.epsilon_start)
        if int(self.t_greedy) != self.t_greedy or self.t_greedy < 1:
            raise ValueError('t_greedy must be a positive integer')

    @classmethod
    def from_dict(cls, document):
        return cls(**dict(document or {}))

    def to_dict(self):
        return dict((name, getattr(self, name)) for name in self.defaults)

    def replace(self, **changes):
        """ Copy of this config with some fields changed """
        fields = self.to_dict()
        fields.update(changes)
        return self.__class__(**fields)

    def epsilon(self, step):
        """ Linear decay from epsilon_start at step 0 to 0 at t_greedy """
        return max(0.0, self.epsilon_start * (1.0 - float(step) / self.t_greedy))

    def __repr__(self):
        return '%s(%s)' % (self.__class__.__name__, ', '.join(
            '%s=%r' % item for item in sorted(self.to_dict().items())))


class CpsConfig(AgentConfig):
    """ CpsConfig adds the model and sweeping parameters:

    :param theta: minimum priority for a queue insertion [default: 1e-4]
    :param batch_updates: simulated updates per real step [default: 50]
    :param prior: N0 of the model learner [default: 1.0]
    :param reward_prior: reward of never visited configurations
    :param enumerate_unvisited: back-propagate to every parent configuration,
        not only the recorded ones [default: False]
    :param time_budget: seconds of sweeping per real step. When set, sweeps
        run until the queue empties or the budget is spent, batch_updates is
        then ignored. Benchmark use only: results depend on the hardware.
    """
    defaults = dict(AgentConfig.defaults, **{
        'theta': DEFAULT_THETA,
        'batch_updates': 50,
        'prior': 1.0,
        'reward_prior': 0.0,
        'enumerate_unvisited': False,
        'time_budget': None,
    })

    def validate(self):
        super(CpsConfig, self).validate()
        if self.theta < 0:
            raise ValueError('theta must be >= 0, got %r' % self.theta)
        if int(self.batch_updates) != self.batch_updates or self.batch_updates < 0:
            raise ValueError('batch_updates must be a non-negative integer')
        if self.prior < 0:
            raise ValueError('prior must be >= 0, got %r' % self.prior)
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValueError('time_budget must be > 0 when set')


class BaseAgent(object):
    """ Common interaction loop of every agent.

    :param state_space: FactorSpace of the states
    :param action_space: FactorSpace of the joint actions
    :param rng: (optional) numpy Generator or seed used for exploration and
        simulated sampling
    :param signal_step_telemetry: (optional) allow to define a specific
        signal to use, instead of using the global STEP_TELEMETRY
    """
    name = 'agent'

    def __init__(self, state_space, action_space, **kwargs):
        self.state_space = state_space
        self.action_space = action_space
        self.rng = make_rng(kwargs.pop('rng', None))
        self.signal_step_telemetry = kwargs.pop(
            'signal_step_telemetry',
            STEP_TELEMETRY
        )
        self.name = kwargs.pop('name', self.name)
        if kwargs:
            raise TypeError('unexpected arguments: %s' % ', '.join(sorted(kwargs)))
        self.steps = 0
        self.total_batch_updates = 0

    def epsilon(self):
        return 0.0

    def select_action(self, state, rng=None):
        raise NotImplementedError

    def observe(self, state, action, next_state, rewards, rng=None):
        self.steps += 1

    def batch_sweep(self, rng=None):
        return 0

    def queue_length(self):
        return 0

    def max_value(self, state):
        return None

    def interact(self, env):
        """ One real environment step: act, learn, sweep, report.

        :return: (next state, reward vector)
        """
        state = env.state
        epsilon = self.epsilon()
        action = self.select_action(state)
        next_state, rewards = env.step(action)
        self.observe(state, action, next_state, rewards)
        updates = self.batch_sweep()
        if self.signal_step_telemetry.has_receivers:
            self.signal_step_telemetry.send_robust(
                step=self.steps,
                reward_sum=float(sum(rewards)),
                epsilon=epsilon,
                queue_length=self.queue_length(),
                batch_updates=updates,
                max_value=self.max_value(next_state),
                algorithm=self.name,
            )
        return next_state, rewards


class GreedyQAgent(BaseAgent):
    """ Epsilon-greedy agent acting on a FactoredQ through variable
    elimination. Subclasses decide how the Q-function learns. """

    def __init__(self, ddn, q, config, **kwargs):
        kwargs.setdefault('rng', config.seed)
        super(GreedyQAgent, self).__init__(
            ddn.state_space, ddn.action_space, **kwargs
        )
        self.ddn = ddn
        self.config = config
        self.q = q
        self.selector = ActionSelector(q, ddn.action_space.sizes)

    def epsilon(self):
        return self.config.epsilon(self.steps)

    def select_action(self, state, rng=None):
        """ Uniform joint action with probability epsilon, else argmax """
        rng = self.rng if rng is None else rng
        if rng.random() < self.epsilon():
            return self.action_space.uniform(rng)
        return self.selector.select(state)[0]

    def greedy_action(self, state):
        return self.selector.select(state)[0]

    def max_value(self, state):
        return self.selector.select(state)[1]

    def _td_step(self, state, action, next_state, rewards):
        next_action, _ = self.selector.select(next_state)
        return self.q.td_update(
            state, action, next_state, next_action, rewards,
            self.config.alpha, self.config.gamma
        )


class CpsAgent(GreedyQAgent):
    """ Cooperative prioritized sweeping.

    Every real transition updates the learned model and the Q-function, then
    pushes the predecessors of the changed factors into the sweep queue.
    Batch sweeps pop compatible groups of queue entries, complete them at
    random into a full (s, a), and replay simulated transitions drawn from
    the learned model.

    :param ddn: DdnStructure of the problem, known in advance
    :param bases: iterable of basis domains (iterables of state indices)
    :param config: (optional) CpsConfig [default: CpsConfig()]
    """
    name = 'cps'

    def __init__(self, ddn, bases, config=None, **kwargs):
        config = CpsConfig() if config is None else config
        q = FactoredQ.from_bases(bases, ddn, kwargs.pop('initial_value', 0.0))
        super(CpsAgent, self).__init__(ddn, q, config, **kwargs)
        self.learner = ModelLearner(
            ddn, prior=config.prior, reward_prior=config.reward_prior
        )
        self.queue = SweepQueue()
        self._sizes = (
            np.array(ddn.state_space.sizes, dtype=np.int64),
            np.array(ddn.action_space.sizes, dtype=np.int64),
        )

    def queue_length(self):
        return len(self.queue)

    def observe(self, state, action, next_state, rewards, rng=None):
        """ Learn from a real transition and queue its predecessors """
        self.learner.record(state, action, next_state, rewards)
        result = self._td_step(state, action, next_state, rewards)
        enqueue_backprop(
            self.queue, result.factor_deltas, self.learner, state,
            self.config.theta, self.config.enumerate_unvisited
        )
        self.steps += 1
        return result

    def complete(self, seed, rng):
        """ Full (state, action) extending a partial assignment. Every
        factor is drawn uniformly, states first, then the factors bound by
        the seed are overwritten. """
        joint = (
            rng.integers(0, self._sizes[STATE]),
            rng.integers(0, self._sizes[ACTION]),
        )
        for kind, index, value in seed.steps:
            joint[kind][index] = value
        return tuple(joint[STATE].tolist()), tuple(joint[ACTION].tolist())

    def batch_sweep(self, rng=None):
        """ Simulated updates from the queue, never touching the real
        environment.

        :return: number of updates performed
        """
        rng = self.rng if rng is None else rng
        budget = self.config.time_budget
        deadline = None if budget is None else time.perf_counter() + budget
        done = 0
        while True:
            if deadline is None:
                if done >= self.config.batch_updates:
                    break
            elif time.perf_counter() >= deadline:
                break
            seed = self.queue.pop_batch_seed(rng)
            if seed is None:
                break
            state, action = self.complete(seed, rng)
            next_state, rewards = self.learner.sample_simulated(state, action, rng)
            result = self._td_step(state, action, next_state, rewards)
            enqueue_backprop(
                self.queue, result.factor_deltas, self.learner, state,
                self.config.theta, self.config.enumerate_unvisited
            )
            done += 1
        self.total_batch_updates += done
        return done
