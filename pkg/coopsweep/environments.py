# -*- encoding: utf-8 -*-
""" Problem generators (SysAdmin topologies and random MMDPs) and the
Environment agents interact with.

SysAdmin machine m owns two state factors: its status at index 2m
(good, faulty, dead) and its load at index 2m + 1 (idle, loaded, done).
Every machine completes jobs for a reward of 1, carried by the load factor
while it is `done`.

The SysAdmin dynamics constants are configurable defaults, not measured
values of any published benchmark.
"""
import logging

from collections import namedtuple

import numpy as np

from .model import DdnStructure
from .model import FactorSpace
from .model import GroundTruthMmdp
from .utils import decode_mixed_radix
from .utils import make_rng

LOGGER = logging.getLogger(__name__)

GOOD, FAULTY, DEAD = 0, 1, 2
IDLE, LOADED, DONE = 0, 1, 2

Ring = namedtuple('Ring', ['n'])
Torus = namedtuple('Torus', ['rows', 'cols'])
SharedRing = namedtuple('SharedRing', ['n'])

TOPOLOGIES = {
    'ring': Ring,
    'torus': Torus,
    'shared_ring': SharedRing,
}


def status_factor(machine):
    return 2 * machine


def load_factor(machine):
    return 2 * machine + 1


def _check_probability(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError('%s must be in [0, 1], got %r' % (name, value))
    return float(value)


class SysAdminParams(object):
    """ SysAdmin instance description.

    :param topology: a Ring, Torus or SharedRing
    :param p_fail_base: good -> faulty base probability [default: 0.05]
    :param p_fail_neighbor_coef: added per fraction of faulty or dead
        neighbors [default: 0.3]
    :param p_dead_base: faulty -> dead base probability [default: 0.05]
    :param p_dead_neighbor_coef: [default: 0.3]
    :param p_load_arrive: idle -> loaded [default: 0.5]
    :param p_complete_good: loaded -> done on a good machine [default: 0.5]
    :param p_complete_faulty: loaded -> done on a faulty machine
        [default: 0.2]
    :param p_reboot_one: shared ring, reboot with one command [default: 0.15]
    :param p_reboot_both: shared ring, reboot with both [default: 1.0]
    :param gamma: discount of the built MMDP [default: 0.9]
    """
    defaults = {
        'p_fail_base': 0.05,
        'p_fail_neighbor_coef': 0.3,
        'p_dead_base': 0.05,
        'p_dead_neighbor_coef': 0.3,
        'p_load_arrive': 0.5,
        'p_complete_good': 0.5,
        'p_complete_faulty': 0.2,
        'p_reboot_one': 0.15,
        'p_reboot_both': 1.0,
    }

    def __init__(self, topology, **kwargs):
        if not isinstance(topology, (Ring, Torus, SharedRing)):
            raise TypeError('unknown topology %r' % (topology,))
        if isinstance(topology, Torus):
            if topology.rows < 2 or topology.cols < 2:
                raise ValueError('torus sides must be >= 2, got %r' % (topology,))
        elif topology.n < 2:
            raise ValueError('a ring needs at least 2 machines, got %r' % (topology,))
        self.topology = topology
        for name, default in self.defaults.items():
            setattr(self, name, _check_probability(name, kwargs.pop(name, default)))
        self.gamma = float(kwargs.pop('gamma', 0.9))
        if kwargs:
            raise TypeError('unexpected arguments: %s' % ', '.join(sorted(kwargs)))

    @property
    def num_machines(self):
        if isinstance(self.topology, Torus):
            return self.topology.rows * self.topology.cols
        return self.topology.n

    @classmethod
    def from_dict(cls, document):
        """ {"topology": "ring", "n": 10, ...probabilities} """
        document = dict(document)
        name = document.pop('topology', None)
        if name not in TOPOLOGIES:
            raise ValueError('topology must be one of %s, got %r' % (
                sorted(TOPOLOGIES), name))
        fields = TOPOLOGIES[name]._fields
        missing = [field for field in fields if field not in document]
        if missing:
            raise ValueError('%s topology needs %s' % (name, ', '.join(missing)))
        topology = TOPOLOGIES[name](*(int(document.pop(f)) for f in fields))
        return cls(topology, **document)

    def to_dict(self):
        document = dict((name, getattr(self, name)) for name in self.defaults)
        for name, kind in TOPOLOGIES.items():
            if isinstance(self.topology, kind):
                document['topology'] = name
        document.update(self.topology._asdict())
        document['gamma'] = self.gamma
        return document

    def neighbors(self, machine):
        """ Sorted machines adjacent to machine, itself excluded """
        if isinstance(self.topology, Torus):
            rows, cols = self.topology
            row, col = divmod(machine, cols)
            adjacent = {
                ((row - 1) % rows) * cols + col,
                ((row + 1) % rows) * cols + col,
                row * cols + (col - 1) % cols,
                row * cols + (col + 1) % cols,
            }
        else:
            n = self.topology.n
            adjacent = {(machine - 1) % n, (machine + 1) % n}
        adjacent.discard(machine)
        return sorted(adjacent)

    def controllers(self, machine):
        """ Agents whose reboot command reaches machine """
        if isinstance(self.topology, SharedRing):
            return sorted({machine, (machine + 1) % self.topology.n})
        return [machine]

    def reboot_probability(self, commands):
        """ Probability that the machine resets given its controllers'
        commands (1 = reboot) """
        issued = sum(commands)
        if not isinstance(self.topology, SharedRing) or len(commands) == 1:
            return 1.0 if issued else 0.0
        if issued == 0:
            return 0.0
        if issued == 1:
            return self.p_reboot_one
        return self.p_reboot_both


def _status_row(params, status, broken_fraction, reboot):
    row = np.zeros(3)
    if status == GOOD:
        fail = min(1.0, params.p_fail_base + params.p_fail_neighbor_coef * broken_fraction)
        row[FAULTY] = fail
        row[GOOD] = 1.0 - fail
    elif status == FAULTY:
        dead = min(1.0, params.p_dead_base + params.p_dead_neighbor_coef * broken_fraction)
        row[DEAD] = dead
        row[FAULTY] = 1.0 - dead
    else:
        row[DEAD] = 1.0
    row *= 1.0 - reboot
    row[GOOD] += reboot
    return row


def _load_row(params, status, load, reboot):
    row = np.zeros(3)
    if load == IDLE:
        arrive = 0.0 if status == DEAD else params.p_load_arrive
        row[LOADED] = arrive
        row[IDLE] = 1.0 - arrive
    elif load == LOADED:
        complete = {
            GOOD: params.p_complete_good,
            FAULTY: params.p_complete_faulty,
            DEAD: 0.0,
        }[status]
        row[DONE] = complete
        row[LOADED] = 1.0 - complete
    else:
        row[IDLE] = 1.0
    row *= 1.0 - reboot
    row[IDLE] += reboot
    return row


def build_sysadmin(params):
    """ Build the SysAdmin MMDP of params.

    Under an action configuration that reboots the machine for sure, its
    status only depends on its own previous status.

    :return: (GroundTruthMmdp, recommended bases), one (status, load) basis
        per machine
    """
    machines = params.num_machines
    state_space = FactorSpace([3] * (2 * machines))
    action_space = FactorSpace([2] * machines)

    action_parents, state_parents = [], []
    transitions, rewards = [], []
    for machine in range(machines):
        controllers = params.controllers(machine)
        neighbors = params.neighbors(machine)
        own = status_factor(machine)
        full_parents = sorted([own] + [status_factor(k) for k in neighbors])
        configs = [
            decode_mixed_radix(code, [2] * len(controllers))
            for code in range(2 ** len(controllers))
        ]

        # status factor
        conditional, status_t, status_r = {}, [], []
        for commands in configs:
            reboot = params.reboot_probability(commands)
            parents = [own] if reboot == 1.0 else full_parents
            conditional[commands] = parents
            rows = []
            for code in range(3 ** len(parents)):
                values = dict(zip(parents, decode_mixed_radix(code, [3] * len(parents))))
                broken = sum(
                    1 for k in neighbors
                    if values.get(status_factor(k), GOOD) != GOOD
                )
                fraction = broken / float(len(neighbors)) if parents != [own] else 0.0
                rows.append(_status_row(params, values[own], fraction, reboot))
            status_t.append(rows)
            status_r.append(np.zeros(len(rows)))
        action_parents.append(controllers)
        state_parents.append(conditional)
        transitions.append(status_t)
        rewards.append(status_r)

        # load factor
        load_parents = [own, load_factor(machine)]
        load_t, load_r = [], []
        for commands in configs:
            reboot = params.reboot_probability(commands)
            rows, reward = [], []
            for status in range(3):
                for load in range(3):
                    rows.append(_load_row(params, status, load, reboot))
                    reward.append(1.0 if load == DONE else 0.0)
            load_t.append(rows)
            load_r.append(reward)
        action_parents.append(controllers)
        state_parents.append(load_parents)
        transitions.append(load_t)
        rewards.append(load_r)

    ddn = DdnStructure(state_space, action_space, action_parents, state_parents)
    mmdp = GroundTruthMmdp(
        state_space, action_space, ddn, transitions, rewards, params.gamma
    )
    bases = [
        (status_factor(machine), load_factor(machine))
        for machine in range(machines)
    ]
    LOGGER.info(
        "SysAdmin %r: %d state factors, %d agents",
        params.topology, len(state_space), len(action_space)
    )
    return mmdp, bases


class RandomMmdpParams(object):
    """ Random MMDP generator settings.

    :param num_state_factors: N
    :param num_agents: K
    :param factor_sizes: (optional) an int for every factor or a list of N
        cardinalities [default: 2]
    :param max_extra_parents: (optional) extra parents drawn per factor
        besides itself [default: 3]
    :param reward_sparsity: (optional) probability for a factor to carry a
        reward table [default: 0.3]
    :param locality: (optional) maximum circular index distance of the extra
        parents [default: 2]
    :param gamma: (optional) [default: 0.9]
    :param seed: (optional) seed used when build_random_mmdp gets no rng
    """
    REWARD_VALUES = (-1.0, 0.0, 1.0)

    def __init__(self, num_state_factors, num_agents, **kwargs):
        if num_state_factors < 1 or num_agents < 1:
            raise ValueError('at least one state factor and one agent needed')
        self.num_state_factors = int(num_state_factors)
        self.num_agents = int(num_agents)
        sizes = kwargs.pop('factor_sizes', 2)
        if isinstance(sizes, int):
            sizes = [sizes] * self.num_state_factors
        if len(sizes) != self.num_state_factors:
            raise ValueError('factor_sizes needs %d entries' % self.num_state_factors)
        self.factor_sizes = [int(size) for size in sizes]
        self.max_extra_parents = int(kwargs.pop('max_extra_parents', 3))
        if self.max_extra_parents < 0:
            raise ValueError('max_extra_parents must be >= 0')
        self.reward_sparsity = _check_probability(
            'reward_sparsity', kwargs.pop('reward_sparsity', 0.3))
        self.locality = int(kwargs.pop('locality', 2))
        self.gamma = float(kwargs.pop('gamma', 0.9))
        self.seed = kwargs.pop('seed', None)
        if kwargs:
            raise TypeError('unexpected arguments: %s' % ', '.join(sorted(kwargs)))

    @classmethod
    def from_dict(cls, document):
        document = dict(document)
        try:
            return cls(
                document.pop('num_state_factors'), document.pop('num_agents'),
                **document
            )
        except KeyError as error:
            raise ValueError('missing random MMDP field %s' % error)

    def to_dict(self):
        return {
            'num_state_factors': self.num_state_factors,
            'num_agents': self.num_agents,
            'factor_sizes': list(self.factor_sizes),
            'max_extra_parents': self.max_extra_parents,
            'reward_sparsity': self.reward_sparsity,
            'locality': self.locality,
            'gamma': self.gamma,
            'seed': self.seed,
        }

    def agent_position(self, agent):
        """ State index next to which an agent sits """
        return agent * self.num_state_factors // self.num_agents


def _circular_distance(first, second, size):
    gap = abs(first - second) % size
    return min(gap, size - gap)


def uniform_simplex(rng, size, count=1):
    """ count probability vectors drawn uniformly from the simplex
    (normalized exponentials) """
    draws = rng.standard_exponential((count, size))
    return draws / draws.sum(axis=1, keepdims=True)


def build_random_mmdp(params, rng=None):
    """ Random MMDP with local structure.

    Every S'_i depends on S_i plus up to max_extra_parents state and action
    factors within `locality` of i. Transition rows are uniform on the
    simplex. Each factor carries, with probability reward_sparsity, a reward
    table of values drawn from {-1, 0, 1}.

    :return: (GroundTruthMmdp, adjacent-pair bases)
    """
    rng = make_rng(params.seed if rng is None else rng)
    num_factors = params.num_state_factors
    state_space = FactorSpace(params.factor_sizes)
    action_space = FactorSpace([2] * params.num_agents)

    action_parents, state_parents = [], []
    transitions, rewards = [], []
    for factor in range(num_factors):
        candidates = [
            ('s', j) for j in range(num_factors)
            if j != factor and
            _circular_distance(j, factor, num_factors) <= params.locality
        ]
        candidates.extend(
            ('a', k) for k in range(params.num_agents)
            if _circular_distance(
                params.agent_position(k), factor, num_factors) <= params.locality
        )
        extra = int(rng.integers(0, params.max_extra_parents + 1))
        extra = min(extra, len(candidates))
        picked = [candidates[int(i)] for i in
                  rng.choice(len(candidates), size=extra, replace=False)] \
            if extra else []
        states = sorted([factor] + [j for kind, j in picked if kind == 's'])
        actions = sorted(k for kind, k in picked if kind == 'a')

        rows = int(np.prod([params.factor_sizes[j] for j in states]))
        configs = 2 ** len(actions)
        factor_t = [
            uniform_simplex(rng, params.factor_sizes[factor], rows)
            for _ in range(configs)
        ]
        if rng.random() < params.reward_sparsity:
            factor_r = [
                rng.choice(params.REWARD_VALUES, size=rows) for _ in range(configs)
            ]
        else:
            factor_r = [np.zeros(rows) for _ in range(configs)]
        action_parents.append(actions)
        state_parents.append(states)
        transitions.append(factor_t)
        rewards.append(factor_r)

    ddn = DdnStructure(state_space, action_space, action_parents, state_parents)
    mmdp = GroundTruthMmdp(
        state_space, action_space, ddn, transitions, rewards, params.gamma
    )
    if num_factors == 1:
        bases = [(0,)]
    else:
        bases = [(i, i + 1) for i in range(num_factors - 1)]
    return mmdp, bases


class Environment(object):
    """ Live interaction with a GroundTruthMmdp.

    :param mmdp: the model to sample from
    :param rng: (optional) numpy Generator or seed
    """

    def __init__(self, mmdp, rng=None):
        self.mmdp = mmdp
        self.rng = make_rng(rng)
        self.state = mmdp.initial_state
        self.steps = 0

    @property
    def state_space(self):
        return self.mmdp.state_space

    @property
    def action_space(self):
        return self.mmdp.action_space

    def reset(self):
        self.state = self.mmdp.initial_state
        return self.state

    def step(self, action):
        """ Execute a joint action, return (next state, reward vector) """
        next_state, rewards = self.mmdp.sample_step(self.state, action, self.rng)
        self.state = next_state
        self.steps += 1
        return next_state, rewards
