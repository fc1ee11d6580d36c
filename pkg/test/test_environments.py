# -*- encoding: utf-8 -*-
# pylint: skip-file
import unittest

import numpy as np
from scipy import stats

from coopsweep.environments import DEAD
from coopsweep.environments import DONE
from coopsweep.environments import FAULTY
from coopsweep.environments import GOOD
from coopsweep.environments import Environment
from coopsweep.environments import RandomMmdpParams
from coopsweep.environments import Ring
from coopsweep.environments import SharedRing
from coopsweep.environments import SysAdminParams
from coopsweep.environments import Torus
from coopsweep.environments import build_random_mmdp
from coopsweep.environments import build_sysadmin
from coopsweep.environments import load_factor
from coopsweep.environments import status_factor
from coopsweep.environments import uniform_simplex
from coopsweep.model import FactorSpace
from coopsweep.problem import mmdp_to_dict

from .mock import chain_mmdp


def circular_distance(first, second, size):
    gap = abs(first - second) % size
    return min(gap, size - gap)


class TestSysAdminParams(unittest.TestCase):

    def test_topologies(self):
        self.assertEqual(SysAdminParams(Ring(3)).neighbors(0), [1, 2])
        self.assertEqual(SysAdminParams(Ring(2)).neighbors(0), [1])
        torus = SysAdminParams(Torus(2, 3))
        self.assertEqual(torus.num_machines, 6)
        self.assertEqual(torus.neighbors(0), [1, 2, 3])
        self.assertEqual(torus.neighbors(4), [1, 3, 5])
        shared = SysAdminParams(SharedRing(12))
        self.assertEqual(shared.controllers(3), [3, 4])
        self.assertEqual(shared.controllers(11), [0, 11])
        self.assertEqual(SysAdminParams(Ring(12)).controllers(3), [3])

    def test_invalid_params(self):
        with self.assertRaises(ValueError):
            SysAdminParams(Ring(1))
        with self.assertRaises(ValueError):
            SysAdminParams(Torus(1, 4))
        with self.assertRaises(TypeError):
            SysAdminParams((3,))
        with self.assertRaises(ValueError):
            SysAdminParams(Ring(3), p_load_arrive=1.5)
        with self.assertRaises(TypeError):
            SysAdminParams(Ring(3), p_unknown=0.1)

    def test_dict(self):
        params = SysAdminParams.from_dict(
            {'topology': 'torus', 'rows': 2, 'cols': 2, 'p_reboot_one': 0.2})
        self.assertEqual(params.topology, Torus(2, 2))
        self.assertEqual(params.p_reboot_one, 0.2)
        again = SysAdminParams.from_dict(params.to_dict())
        self.assertEqual(again.to_dict(), params.to_dict())
        with self.assertRaises(ValueError):
            SysAdminParams.from_dict({'topology': 'star', 'n': 3})
        with self.assertRaises(ValueError):
            SysAdminParams.from_dict({'topology': 'ring'})

    def test_reboot_probability(self):
        shared = SysAdminParams(SharedRing(4))
        self.assertEqual(shared.reboot_probability((0, 0)), 0.0)
        self.assertEqual(shared.reboot_probability((1, 0)), 0.15)
        self.assertEqual(shared.reboot_probability((0, 1)), 0.15)
        self.assertEqual(shared.reboot_probability((1, 1)), 1.0)
        ring = SysAdminParams(Ring(4))
        self.assertEqual(ring.reboot_probability((1,)), 1.0)
        self.assertEqual(ring.reboot_probability((0,)), 0.0)


class TestSysAdmin(unittest.TestCase):

    def test_large_ring_sizes(self):
        mmdp, bases = build_sysadmin(SysAdminParams(Ring(300)))
        self.assertEqual(mmdp.state_space.sizes, (3,) * 600)
        self.assertEqual(mmdp.action_space.sizes, (2,) * 300)
        self.assertEqual(mmdp.state_space.joint_size(), 3 ** 600)
        self.assertEqual(len(bases), 300)
        self.assertEqual(bases[7], (14, 15))

    def test_ring_structure(self):
        mmdp, _ = build_sysadmin(SysAdminParams(Ring(3)))
        ddn = mmdp.ddn
        self.assertEqual(ddn.action_parents[status_factor(0)], (0,))
        self.assertEqual(ddn.state_parents(status_factor(0), 0), (0, 2, 4))
        # rebooting makes the status independent of the neighbors
        self.assertEqual(ddn.state_parents(status_factor(0), 1), (0,))
        self.assertEqual(ddn.state_parents(load_factor(1), 0), (2, 3))
        self.assertEqual(ddn.state_parents(load_factor(1), 1), (2, 3))

    def test_shared_ring_structure(self):
        mmdp, _ = build_sysadmin(SysAdminParams(SharedRing(12)))
        ddn = mmdp.ddn
        self.assertEqual(ddn.action_parents[status_factor(11)], (0, 11))
        self.assertEqual(ddn.action_parents[load_factor(5)], (5, 6))
        # only both commands reboot for sure
        self.assertEqual(ddn.state_parents(status_factor(5), 3), (10,))
        self.assertEqual(ddn.state_parents(status_factor(5), 1), (8, 10, 12))

    def test_status_failure_probability(self):
        mmdp, _ = build_sysadmin(SysAdminParams(Ring(3)))
        # S0 good, S2 faulty, S4 good, no reboot
        code = FactorSpace([3, 3, 3]).encode((GOOD, FAULTY, GOOD))
        row = mmdp.transitions[status_factor(0)][0][code]
        np.testing.assert_allclose(row, [0.8, 0.2, 0.0])

    def test_dead_machine_reboots_to_good(self):
        mmdp, _ = build_sysadmin(SysAdminParams(Ring(3)))
        state = [GOOD] * 6
        state[status_factor(1)] = DEAD
        rng = np.random.default_rng(0)
        for _ in range(50):
            next_state, _ = mmdp.sample_step(tuple(state), (0, 1, 0), rng)
            self.assertEqual(next_state[status_factor(1)], GOOD)
            next_state, _ = mmdp.sample_step(tuple(state), (0, 0, 0), rng)
            self.assertEqual(next_state[status_factor(1)], DEAD)

    def test_shared_reboot_frequency(self):
        mmdp, _ = build_sysadmin(SysAdminParams(SharedRing(12)))
        state = [GOOD] * 24
        state[status_factor(0)] = FAULTY
        action = [0] * 12
        action[0] = 1
        rng = np.random.default_rng(5)
        draws = 20000
        good = sum(
            1 for _ in range(draws)
            if mmdp.sample_step(tuple(state), tuple(action), rng)[0][0] == GOOD
        )
        self.assertAlmostEqual(good / float(draws), 0.15, delta=0.01)

    def test_load_reward(self):
        mmdp, _ = build_sysadmin(SysAdminParams(Ring(2)))
        state = (GOOD, DONE, GOOD, 0)
        np.testing.assert_array_equal(
            mmdp.reward_vector(state, (0, 0)), [0.0, 1.0, 0.0, 0.0])

    def test_rows_are_distributions(self):
        for topology in (Ring(3), Torus(2, 2), SharedRing(3)):
            mmdp, _ = build_sysadmin(SysAdminParams(topology))
            for tables in mmdp.transitions:
                for table in tables:
                    np.testing.assert_allclose(table.sum(axis=1), 1.0)
                    self.assertTrue(np.all(table >= 0))


class TestRandomMmdp(unittest.TestCase):

    def test_shapes(self):
        for factors, agents in ((4, 3), (20, 15)):
            mmdp, bases = build_random_mmdp(RandomMmdpParams(factors, agents, seed=1))
            self.assertEqual(len(mmdp.state_space), factors)
            self.assertEqual(mmdp.action_space.sizes, (2,) * agents)
            self.assertEqual(bases, [(i, i + 1) for i in range(factors - 1)])
        _, bases = build_random_mmdp(RandomMmdpParams(1, 1, seed=1))
        self.assertEqual(bases, [(0,)])

    def test_deterministic_given_seed(self):
        first, _ = build_random_mmdp(RandomMmdpParams(6, 3, seed=42))
        second, _ = build_random_mmdp(RandomMmdpParams(6, 3), np.random.default_rng(42))
        other, _ = build_random_mmdp(RandomMmdpParams(6, 3, seed=43))
        self.assertEqual(mmdp_to_dict(first), mmdp_to_dict(second))
        self.assertNotEqual(mmdp_to_dict(first), mmdp_to_dict(other))

    def test_local_structure(self):
        params = RandomMmdpParams(
            12, 4, max_extra_parents=3, locality=2, factor_sizes=3, seed=7)
        mmdp, _ = build_random_mmdp(params)
        ddn = mmdp.ddn
        for factor in range(12):
            states = ddn.state_parents(factor, 0)
            actions = ddn.action_parents[factor]
            self.assertIn(factor, states)
            self.assertLessEqual(len(states) - 1 + len(actions), 3)
            for parent in states:
                self.assertLessEqual(circular_distance(parent, factor, 12), 2)
            for agent in actions:
                self.assertLessEqual(
                    circular_distance(params.agent_position(agent), factor, 12), 2)

    def test_sparse_rewards(self):
        mmdp, _ = build_random_mmdp(RandomMmdpParams(40, 10, seed=3))
        rewarded = 0
        for tables in mmdp.rewards:
            values = np.concatenate([np.ravel(table) for table in tables])
            self.assertTrue(set(values.tolist()) <= {-1.0, 0.0, 1.0})
            if np.any(values != 0):
                rewarded += 1
        self.assertGreater(rewarded, 0)
        self.assertLess(rewarded, 40)

    def test_params_dict(self):
        params = RandomMmdpParams(5, 2, factor_sizes=[2, 3, 2, 3, 2], seed=9)
        self.assertEqual(
            RandomMmdpParams.from_dict(params.to_dict()).to_dict(), params.to_dict())
        with self.assertRaises(ValueError):
            RandomMmdpParams.from_dict({'num_agents': 2})
        with self.assertRaises(ValueError):
            RandomMmdpParams(3, 1, factor_sizes=[2, 2])
        with self.assertRaises(TypeError):
            RandomMmdpParams(3, 1, sparsity=0.5)

    def test_uniform_simplex(self):
        rng = np.random.default_rng(99)
        rows = uniform_simplex(rng, 3, 5000)
        np.testing.assert_allclose(rows.sum(axis=1), 1.0)
        # marginals of the uniform simplex in 3 dimensions are Beta(1, 2)
        self.assertGreater(stats.kstest(rows[:, 0], 'beta', args=(1, 2)).pvalue, 0.001)
        pairs = uniform_simplex(rng, 2, 5000)
        self.assertGreater(stats.kstest(pairs[:, 0], 'uniform').pvalue, 0.001)


class TestEnvironment(unittest.TestCase):

    def test_step_and_reset(self):
        env = Environment(chain_mmdp(), rng=0)
        self.assertEqual(env.state, (0,))
        self.assertEqual(env.step((1,))[0], (1,))
        self.assertEqual(env.step((1,))[0], (2,))
        next_state, rewards = env.step((1,))
        self.assertEqual(next_state, (2,))
        self.assertEqual(rewards[0], 1.0)
        self.assertEqual(env.steps, 3)
        self.assertEqual(env.reset(), (0,))
        self.assertEqual(env.state_space, env.mmdp.state_space)
