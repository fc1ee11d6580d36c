# -*- encoding: utf-8 -*-
# pylint: skip-file
import itertools
import json
import unittest

import mock
import numpy as np
from scipy import stats

from coopsweep import baselines
from coopsweep.baselines import FlatSolution
from coopsweep.baselines import OracleAgent
from coopsweep.baselines import RandomAgent
from coopsweep.baselines import ScqlAgent
from coopsweep.baselines import ScqlConfig
from coopsweep.baselines import flat_value_iteration
from coopsweep.baselines import random_policy
from coopsweep.baselines import solve_oracle
from coopsweep.cache import DictCache
from coopsweep.environments import Environment
from coopsweep.exceptions import ConvergenceError
from coopsweep.exceptions import OracleSizeError
from coopsweep.exceptions import ProblemFormatError
from coopsweep.model import FactorSpace

from .mock import chain_mmdp
from .mock import conditioned_mmdp
from .mock import noisy_single_agent_mmdp


class TestScql(unittest.TestCase):

    def test_optimistic_initialization(self):
        mmdp = conditioned_mmdp()
        agent = ScqlAgent(mmdp.ddn, [(0,), (1,)], rng=0)
        for state in itertools.product(range(2), range(2)):
            for action in ((0,), (1,)):
                self.assertEqual(agent.q.evaluate(state, action), 10.0)
        agent = ScqlAgent(mmdp.ddn, [(0,)], ScqlConfig(optimistic_init=-1.0))
        self.assertEqual(agent.q.evaluate((0, 0), (0,)), -1.0)

    def test_scql_never_sweeps(self):
        mmdp = chain_mmdp()
        agent = ScqlAgent(mmdp.ddn, [(0,)], rng=1)
        env = Environment(mmdp, rng=2)
        for _ in range(50):
            agent.interact(env)
        self.assertEqual(agent.steps, 50)
        self.assertEqual(agent.total_batch_updates, 0)
        self.assertEqual(agent.queue_length(), 0)
        self.assertEqual(agent.name, 'scql')

    def test_scql_observe_helper(self):
        mmdp = chain_mmdp()
        agent = ScqlAgent(mmdp.ddn, [(0,)], ScqlConfig(optimistic_init=0.0, alpha=1.0))
        result = baselines.scql_observe(agent, (1,), (1,), (2,), [0.5])
        self.assertEqual(result.component_deltas[0], 0.5)
        self.assertEqual(agent.q.components[0].table[1, 1], 0.5)


class TestRandomPolicy(unittest.TestCase):

    def test_random_policy_uniform(self):
        space = FactorSpace([3, 2])
        rng = np.random.default_rng(31)
        counts = np.zeros(6)
        for _ in range(6000):
            action = random_policy((0,), rng, space)
            self.assertTrue(space.contains(action))
            counts[space.encode(action)] += 1
        self.assertGreater(stats.chisquare(counts).pvalue, 0.001)

    def test_random_agent(self):
        mmdp = chain_mmdp()
        agent = RandomAgent(mmdp.state_space, mmdp.action_space, rng=3)
        env = Environment(mmdp, rng=4)
        for _ in range(20):
            agent.interact(env)
        self.assertEqual(agent.steps, 20)
        self.assertIsNone(agent.max_value((0,)))


class TestFlatOracle(unittest.TestCase):

    def test_zero_discount_is_reward(self):
        mmdp = conditioned_mmdp(gamma=0.0)
        solution = flat_value_iteration(mmdp)
        for state in itertools.product(range(2), range(2)):
            for action in ((0,), (1,)):
                self.assertEqual(solution.q_value(state, action),
                                 mmdp.reward_vector(state, action).sum())

    def test_chain_closed_form(self):
        solution = flat_value_iteration(chain_mmdp(gamma=0.9))
        self.assertAlmostEqual(solution.value((2,)), 10.0, places=6)
        self.assertAlmostEqual(solution.value((1,)), 9.0, places=6)
        self.assertAlmostEqual(solution.value((0,)), 8.1, places=6)
        self.assertAlmostEqual(solution.q_value((2,), (0,)), 9.1, places=6)
        for value in range(3):
            self.assertEqual(solution.greedy_action((value,)), (1,))
        self.assertLess(solution.residual, 1e-8)

    def test_bellman_residual(self):
        mmdp = noisy_single_agent_mmdp(gamma=0.8)
        solution = flat_value_iteration(mmdp, tol=1e-10)
        states = list(itertools.product(range(2), range(2)))
        for state in states:
            for action in ((0,), (1,), (2,)):
                backup = mmdp.reward_vector(state, action).sum() + mmdp.gamma * sum(
                    mmdp.transition_probability(state, action, successor)
                    * solution.value(successor)
                    for successor in states
                )
                self.assertAlmostEqual(
                    solution.q_value(state, action), backup, places=7)

    def test_conditioned_model_residual(self):
        mmdp = conditioned_mmdp()
        solution = flat_value_iteration(mmdp)
        states = list(itertools.product(range(2), range(2)))
        for state in states:
            for action in ((0,), (1,)):
                backup = mmdp.reward_vector(state, action).sum() + mmdp.gamma * sum(
                    mmdp.transition_probability(state, action, successor)
                    * solution.value(successor)
                    for successor in states
                )
                self.assertAlmostEqual(
                    solution.q_value(state, action), backup, places=6)

    def test_size_cap(self):
        mmdp = conditioned_mmdp()
        with self.assertRaises(OracleSizeError) as context:
            flat_value_iteration(mmdp, cap=5)
        self.assertEqual(context.exception.size, 8)
        with self.assertWarns(UserWarning):
            flat_value_iteration(mmdp, cap=10)

    def test_invalid_arguments(self):
        mmdp = chain_mmdp()
        with self.assertRaises(ValueError):
            flat_value_iteration(mmdp, tol=0)
        with self.assertRaises(TypeError):
            flat_value_iteration(mmdp, limit=3)
        with self.assertRaises(ConvergenceError) as context:
            flat_value_iteration(mmdp, max_iterations=1)
        self.assertEqual(context.exception.iteration, 1)

    def test_solution_dict(self):
        solution = flat_value_iteration(chain_mmdp())
        document = json.loads(json.dumps(solution.to_dict()))
        restored = FlatSolution.from_dict(document)
        np.testing.assert_array_equal(restored.q, solution.q)
        np.testing.assert_array_equal(restored.policy, solution.policy)
        self.assertEqual(restored.iterations, solution.iterations)
        with self.assertRaises(ProblemFormatError):
            FlatSolution.from_dict({'format': 'coopsweep-mmdp'})

    def test_solve_oracle_cache(self):
        mmdp = chain_mmdp()
        cache = DictCache()
        with mock.patch.object(
                baselines, 'flat_value_iteration',
                wraps=baselines.flat_value_iteration) as solver:
            first = solve_oracle(mmdp, cache=cache)
            second = solve_oracle(chain_mmdp(), cache=cache)
            self.assertEqual(solver.call_count, 1)
            self.assertIs(first, second)
            solve_oracle(mmdp, tol=1e-6, cache=cache)
            self.assertEqual(solver.call_count, 2)
            solve_oracle(mmdp)
            self.assertEqual(solver.call_count, 3)

    def test_oracle_agent(self):
        mmdp = chain_mmdp()
        agent = OracleAgent(flat_value_iteration(mmdp), mmdp.state_space,
                            mmdp.action_space, rng=0)
        env = Environment(mmdp, rng=0)
        states = [agent.interact(env)[0] for _ in range(3)]
        self.assertEqual(states, [(1,), (2,), (2,)])
        self.assertAlmostEqual(agent.max_value((2,)), 10.0, places=6)
