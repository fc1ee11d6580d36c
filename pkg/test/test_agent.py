# -*- encoding: utf-8 -*-
# pylint: skip-file
import itertools
import time
import unittest

import mock
import numpy as np
from scipy import stats

from coopsweep.agent import AgentConfig
from coopsweep.agent import BaseAgent
from coopsweep.agent import CpsAgent
from coopsweep.agent import CpsConfig
from coopsweep.baselines import ScqlAgent
from coopsweep.baselines import ScqlConfig
from coopsweep.environments import DEAD
from coopsweep.environments import Environment
from coopsweep.environments import GOOD
from coopsweep.environments import IDLE
from coopsweep.environments import LOADED
from coopsweep.environments import Ring
from coopsweep.environments import SysAdminParams
from coopsweep.environments import build_sysadmin
from coopsweep.events import Signal
from coopsweep.model import PartialAssignment
from coopsweep.model import VariableId

from .mock import CountingEnvironment
from .mock import chain_mmdp
from .mock import noisy_single_agent_mmdp

S = VariableId.state
A = VariableId.action


class TestAgentConfig(unittest.TestCase):

    def test_defaults(self):
        config = CpsConfig()
        self.assertEqual(config.alpha, 0.3)
        self.assertEqual(config.gamma, 0.9)
        self.assertEqual(config.theta, 1e-4)
        self.assertEqual(config.batch_updates, 50)
        self.assertEqual(config.prior, 1.0)
        self.assertIsNone(config.time_budget)
        self.assertFalse(config.enumerate_unvisited)

    def test_epsilon_schedule(self):
        config = AgentConfig(epsilon_start=0.9, t_greedy=1000)
        self.assertEqual(config.epsilon(0), 0.9)
        self.assertAlmostEqual(config.epsilon(500), 0.45)
        self.assertEqual(config.epsilon(1000), 0.0)
        self.assertEqual(config.epsilon(5000), 0.0)

    def test_invalid_fields(self):
        with self.assertRaises(TypeError):
            CpsConfig(beta=1)
        with self.assertRaises(TypeError):
            AgentConfig(theta=1e-3)
        for fields in ({'alpha': 0.0}, {'alpha': 1.5}, {'gamma': 1.0},
                       {'epsilon_start': 2.0}, {'t_greedy': 0},
                       {'batch_updates': -1}, {'batch_updates': 2.5},
                       {'theta': -1.0}, {'prior': -0.5}, {'time_budget': 0}):
            with self.assertRaises(ValueError):
                CpsConfig(**fields)

    def test_dict_and_replace(self):
        config = CpsConfig.from_dict({'alpha': 0.5, 'batch_updates': 3})
        self.assertEqual(CpsConfig.from_dict(config.to_dict()).to_dict(),
                         config.to_dict())
        changed = config.replace(batch_updates=0)
        self.assertEqual(changed.batch_updates, 0)
        self.assertEqual(changed.alpha, 0.5)
        self.assertEqual(config.batch_updates, 3)
        self.assertIn('batch_updates=3', repr(config))
        self.assertEqual(CpsConfig.from_dict(None).to_dict(), CpsConfig().to_dict())


class TestBaseAgent(unittest.TestCase):

    def test_unexpected_argument(self):
        mmdp = chain_mmdp()
        with self.assertRaises(TypeError):
            BaseAgent(mmdp.state_space, mmdp.action_space, seed=1)

    def test_select_action_abstract(self):
        mmdp = chain_mmdp()
        agent = BaseAgent(mmdp.state_space, mmdp.action_space)
        with self.assertRaises(NotImplementedError):
            agent.select_action((0,))


class TestCpsAgent(unittest.TestCase):

    def setUp(self):
        self.mmdp = noisy_single_agent_mmdp()
        self.bases = [(0, 1)]

    def test_select_action_greedy(self):
        agent = CpsAgent(self.mmdp.ddn, self.bases,
                         CpsConfig(epsilon_start=0.0), rng=0)
        agent.q.components[0].table[1, 0] = [0.0, 3.0, 1.0]
        for _ in range(20):
            self.assertEqual(agent.select_action((1, 0)), (1,))
            self.assertEqual(agent.select_action((0, 0)), (0,))
        self.assertEqual(agent.max_value((1, 0)), 3.0)

    def test_select_action_uniform(self):
        agent = CpsAgent(self.mmdp.ddn, self.bases,
                         CpsConfig(epsilon_start=1.0), rng=5)
        agent.q.components[0].table[0, 0] = [0.0, 3.0, 1.0]
        draws = [agent.select_action((0, 0))[0] for _ in range(3000)]
        counts = np.bincount(draws, minlength=3)
        self.assertGreater(stats.chisquare(counts).pvalue, 0.001)

    def test_observe_zero_reward_keeps_queue_empty(self):
        agent = CpsAgent(self.mmdp.ddn, self.bases, rng=0)
        result = agent.observe((0, 1), (2,), (1, 1), [0.0, 0.0])
        np.testing.assert_array_equal(result.factor_deltas, [0.0, 0.0])
        self.assertEqual(agent.queue_length(), 0)
        self.assertEqual(agent.steps, 1)
        self.assertEqual(agent.learner.records, 1)
        self.assertEqual(agent.batch_sweep(), 0)

    def test_observe_queues_predecessors(self):
        agent = CpsAgent(self.mmdp.ddn, self.bases,
                         CpsConfig(alpha=0.5), rng=0)
        agent.observe((0, 1), (2,), (1, 1), [1.0, 0.0])
        self.assertEqual(agent.q.components[0].table[0, 1, 2], 0.5)
        # Delta_0 = Delta_1 = 1 / 2, predecessors of s = (0, 1) under the
        # only recorded configuration, which saw S'0 = 1 and S'1 = 1
        entries = agent.queue.dump()
        self.assertEqual(len(entries), 1)
        entry, priority = entries[0]
        self.assertEqual(entry, PartialAssignment({S(0): 0, S(1): 1, A(0): 2}))
        # 0.5 * (0 + 1) / (1 + 2) + 0.5 * (1 + 1) / (1 + 2)
        self.assertAlmostEqual(priority, 0.5)

    def test_complete_fills_unbound_factors(self):
        agent = CpsAgent(self.mmdp.ddn, self.bases, rng=0)
        rng = np.random.default_rng(8)
        seen = set()
        for _ in range(200):
            state, action = agent.complete(PartialAssignment({S(1): 1}), rng)
            self.assertEqual(state[1], 1)
            self.assertTrue(self.mmdp.state_space.contains(state))
            self.assertTrue(self.mmdp.action_space.contains(action))
            seen.add((state[0], action[0]))
        self.assertEqual(len(seen), 6)

    def test_batch_sweep_respects_budget(self):
        agent = CpsAgent(self.mmdp.ddn, self.bases,
                         CpsConfig(batch_updates=5), rng=0)
        env = Environment(self.mmdp, rng=1)
        for _ in range(30):
            agent.interact(env)
        self.assertLessEqual(agent.total_batch_updates, 5 * 30)
        self.assertGreater(agent.total_batch_updates, 0)
        self.assertLessEqual(agent.batch_sweep(np.random.default_rng(0)), 5)

    def test_time_budget(self):
        agent = CpsAgent(self.mmdp.ddn, self.bases,
                         CpsConfig(time_budget=0.05, batch_updates=1), rng=0)
        self.assertEqual(agent.batch_sweep(), 0)
        agent.observe((0, 1), (2,), (1, 1), [1.0, 1.0])
        started = time.perf_counter()
        done = agent.batch_sweep()
        self.assertLess(time.perf_counter() - started, 2.0)
        self.assertGreaterEqual(done, 1)
        self.assertEqual(agent.total_batch_updates, done)

    def test_sweeps_never_touch_environment(self):
        mmdp, bases = build_sysadmin(SysAdminParams(Ring(3)))
        agent = CpsAgent(mmdp.ddn, bases, CpsConfig(batch_updates=20), rng=3)
        env = CountingEnvironment(Environment(mmdp, rng=4))
        for _ in range(200):
            agent.interact(env)
        self.assertEqual(env.calls, 200)
        self.assertEqual(agent.steps, 200)
        self.assertGreater(agent.total_batch_updates, 200)

    def test_no_sweeps_is_textbook_q_learning(self):
        config = CpsConfig(batch_updates=0, alpha=0.2, gamma=0.8, t_greedy=300)
        agent = CpsAgent(self.mmdp.ddn, self.bases, config, rng=11)
        env = Environment(self.mmdp, rng=12)

        table = np.zeros((2, 2, 3))
        rng = np.random.default_rng(11)
        state = self.mmdp.initial_state
        reference_env = Environment(self.mmdp, rng=12)
        for step in range(600):
            if rng.random() < config.epsilon(step):
                action = self.mmdp.action_space.uniform(rng)
            else:
                action = (int(np.argmax(table[state])),)
            next_state, rewards = reference_env.step(action)
            target = table[next_state].max()
            delta = sum(rewards) + config.gamma * target - table[state + action]
            table[state + action] += config.alpha * delta
            state = next_state

            agent.interact(env)
        np.testing.assert_array_equal(agent.q.components[0].table, table)
        self.assertEqual(agent.total_batch_updates, 0)

    def test_no_sweeps_matches_scql(self):
        mmdp, bases = build_sysadmin(SysAdminParams(Ring(3)))
        cps = CpsAgent(mmdp.ddn, bases, CpsConfig(batch_updates=0), rng=21)
        scql = ScqlAgent(mmdp.ddn, bases, ScqlConfig(optimistic_init=0.0), rng=21)
        first, second = Environment(mmdp, rng=22), Environment(mmdp, rng=22)
        for _ in range(400):
            self.assertEqual(cps.interact(first)[0], scql.interact(second)[0])
        for left, right in zip(cps.q.components, scql.q.components):
            np.testing.assert_array_equal(left.table, right.table)


class TestBatchSweep(unittest.TestCase):

    def test_single_update_by_hand(self):
        mmdp = chain_mmdp()
        config = CpsConfig(batch_updates=1, prior=0.0, alpha=0.5, gamma=0.9)
        agent = CpsAgent(mmdp.ddn, [(0,)], config, rng=0)
        agent.learner.record((1,), (1,), (2,), [1.0])
        agent.learner.record((0,), (1,), (1,), [0.0])
        table = agent.q.components[0].table
        table[1, 1] = 1.0
        table[2] = [0.0, 4.0]
        agent.queue.push_or_bump(PartialAssignment({S(0): 1, A(0): 1}), 1.0)

        self.assertEqual(agent.batch_sweep(np.random.default_rng(0)), 1)
        # the only full assignment replays (1, 1) -> 2 with reward 1, and
        # the greedy action in 2 is worth 4: 1 + 0.9 * 4 - 1
        delta = 3.6
        self.assertAlmostEqual(table[1, 1], 1.0 + 0.5 * delta)
        np.testing.assert_array_equal(table[0], [0.0, 0.0])
        np.testing.assert_array_equal(table[2], [0.0, 4.0])
        self.assertEqual(table[1, 0], 0.0)
        # Delta_0 reaches (0, 1), the only configuration leading to 1
        entries = agent.queue.dump()
        self.assertEqual(len(entries), 1)
        self.assertEqual(entries[0][0], PartialAssignment({S(0): 0, A(0): 1}))
        self.assertAlmostEqual(entries[0][1], delta)
        self.assertEqual(agent.total_batch_updates, 1)

    def test_converged_policy_is_stable(self):
        # deterministic two machine SysAdmin: no failures, jobs arrive and
        # complete in one step, a dead machine only recovers by rebooting
        params = SysAdminParams(
            Ring(2), p_fail_base=0.0, p_fail_neighbor_coef=0.0,
            p_dead_base=0.0, p_dead_neighbor_coef=0.0, p_load_arrive=1.0,
            p_complete_good=1.0, p_complete_faulty=1.0)
        mmdp, bases = build_sysadmin(params)
        config = CpsConfig(prior=0.0, alpha=1.0, batch_updates=20)
        agent = CpsAgent(mmdp.ddn, bases, config, rng=31)
        rng = np.random.default_rng(32)
        # every configuration recorded once, the learned model is exact
        for state in itertools.product(range(3), repeat=4):
            for action in itertools.product(range(2), repeat=2):
                next_state, rewards = mmdp.sample_step(state, action, rng)
                agent.learner.record(state, action, next_state, rewards)

        def push_random_full_assignment():
            state = mmdp.state_space.uniform(rng)
            action = mmdp.action_space.uniform(rng)
            agent.queue.push_or_bump(PartialAssignment(dict(
                [(S(i), v) for i, v in enumerate(state)] +
                [(A(j), v) for j, v in enumerate(action)])), 1.0)

        for _ in range(1000):
            push_random_full_assignment()
            agent.batch_sweep(rng)

        # ties between rebooting or not once a job is done are left out
        states = [
            (first, first_load, second, second_load)
            for first in (GOOD, DEAD) for second in (GOOD, DEAD)
            for first_load in (IDLE, LOADED) for second_load in (IDLE, LOADED)
        ]
        policy = [agent.greedy_action(state) for state in states]
        self.assertEqual(policy, [
            (int(state[0] == DEAD), int(state[2] == DEAD)) for state in states])

        for _ in range(100):
            push_random_full_assignment()
            self.assertGreaterEqual(agent.batch_sweep(rng), 1)
            self.assertEqual(
                [agent.greedy_action(state) for state in states], policy)


class TestStepTelemetry(unittest.TestCase):

    def test_telemetry_payload(self):
        mmdp = chain_mmdp()
        signal = Signal()
        receiver = mock.MagicMock()
        signal.add_receiver(receiver)
        agent = CpsAgent(mmdp.ddn, [(0,)], CpsConfig(batch_updates=2), rng=0,
                         signal_step_telemetry=signal)
        env = Environment(mmdp, rng=0)
        agent.interact(env)
        agent.interact(env)
        self.assertEqual(receiver.call_count, 2)
        payload = receiver.call_args[1]
        self.assertEqual(sorted(payload), [
            'algorithm', 'batch_updates', 'epsilon', 'max_value',
            'queue_length', 'reward_sum', 'step'])
        self.assertEqual(payload['step'], 2)
        self.assertEqual(payload['algorithm'], 'cps')
        self.assertAlmostEqual(payload['epsilon'], 0.9 * (1 - 1 / 1000.0))
        self.assertLessEqual(payload['batch_updates'], 2)

    def test_failing_receiver_does_not_stop_learning(self):
        mmdp = chain_mmdp()
        signal = Signal()
        signal.add_receiver(mock.MagicMock(side_effect=RuntimeError('boom')))
        agent = CpsAgent(mmdp.ddn, [(0,)], rng=0, signal_step_telemetry=signal)
        agent.interact(Environment(mmdp, rng=0))
        self.assertEqual(agent.steps, 1)

    def test_no_receivers_no_payload(self):
        mmdp = chain_mmdp()
        signal = Signal()
        agent = CpsAgent(mmdp.ddn, [(0,)], rng=0, signal_step_telemetry=signal)
        with mock.patch.object(agent, 'max_value') as max_value:
            agent.interact(Environment(mmdp, rng=0))
        max_value.assert_not_called()
