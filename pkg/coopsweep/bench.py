# -*- encoding: utf-8 -*-
""" Seeded multi-run experiments and cumulative regret statistics.

An experiment spec is a JSON document::

    {
      "format": "coopsweep-experiment",
      "version": 1,
      "environment": {"type": "sysadmin", "topology": "ring", "n": 10},
      "bases": null,
      "algorithms": [
        {"id": "cps", "kind": "cps", "config": {"t_greedy": 1000}},
        {"id": "scql", "kind": "scql"},
        {"id": "random", "kind": "random"}
      ],
      "reference": "oracle",
      "horizon": 5000,
      "runs": 100,
      "base_seed": 0,
      "workers": 1,
      "output": "regret.csv"
    }

Run r of every algorithm uses seed base_seed + r: the environment draws
from default_rng([seed, 0]) and the agent from default_rng([seed, 1]), so
adding an algorithm never changes the curves of the others.
"""
import json
import logging
import os
import sys
import time

from collections import OrderedDict
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pandas as pd

from .agent import CpsAgent
from .agent import CpsConfig
from .baselines import DEFAULT_TOLERANCE
from .baselines import OracleAgent
from .baselines import RandomAgent
from .baselines import ScqlAgent
from .baselines import ScqlConfig
from .baselines import solve_oracle
from .cache import FileCache
from .environments import Environment
from .environments import RandomMmdpParams
from .environments import SysAdminParams
from .environments import build_random_mmdp
from .environments import build_sysadmin
from .events import RUN_FINISHED
from .exceptions import ProblemFormatError
from .problem import load_mmdp

LOGGER = logging.getLogger(__name__)

FORMAT_NAME = 'coopsweep-experiment'
FORMAT_VERSION = 1
ORACLE = 'oracle'
ALGORITHM_KINDS = ('cps', 'scql', 'random', ORACLE)
CSV_HEADER = ['step', 'algorithm', 'mean_cum_regret', 'std_cum_regret']

AlgorithmSpec = namedtuple('AlgorithmSpec', ['id', 'kind', 'config'])
RunTask = namedtuple(
    'RunTask',
    ['algorithm', 'run', 'seed', 'horizon', 'mmdp', 'bases', 'solution']
)
RunResult = namedtuple(
    'RunResult',
    ['algorithm', 'run', 'seed', 'rewards', 'batch_updates', 'elapsed_time']
)


class RegretCurve(object):
    """ Per-step mean and standard deviation (over runs) of the cumulative
    regret of one algorithm, plus its mean cumulative reward and, when
    built from runs, the (runs, horizon) cumulative regret of every run """

    def __init__(self, algorithm, mean, std, mean_cumulative_reward=None,
                 run_regret=None):
        self.algorithm = algorithm
        self.mean = np.asarray(mean, dtype=float)
        self.std = np.asarray(std, dtype=float)
        self.mean_cumulative_reward = None if mean_cumulative_reward is None \
            else np.asarray(mean_cumulative_reward, dtype=float)
        self.run_regret = None if run_regret is None \
            else np.asarray(run_regret, dtype=float)

    def __len__(self):
        return len(self.mean)

    def __repr__(self):
        return 'RegretCurve(%r, horizon=%d)' % (self.algorithm, len(self))

    @classmethod
    def from_runs(cls, algorithm, rewards, reference_rewards):
        """ rewards and reference_rewards are (runs, horizon) arrays of
        per-step reward sums """
        rewards = np.asarray(rewards, dtype=float)
        regret = np.cumsum(np.asarray(reference_rewards) - rewards, axis=1)
        return cls(
            algorithm, regret.mean(axis=0), regret.std(axis=0),
            np.cumsum(rewards, axis=1).mean(axis=0), regret
        )


class ExperimentSpec(object):
    """ Validated experiment description.

    :param environment: dict with a `type` among sysadmin, random, file and
        the generator parameters (or `path` for a problem file)
    :param algorithms: list of dicts {id, kind, config}
    :param horizon: steps per run [default: 1000]
    :param runs: [default: 100]
    :param base_seed: [default: 0]
    :param reference: `oracle` or the id of a listed algorithm
        [default: oracle]
    :param bases: (optional) basis domains replacing the recommended ones
    :param workers: processes used for the runs [default: 1]
    :param output: (optional) CSV path
    :param oracle_tolerance: [default: 1e-8]
    :param cache_dir: (optional) diskcache directory for oracle solutions
    """

    def __init__(self, environment, algorithms, **kwargs):
        self.environment = dict(environment)
        self.algorithms = [self._algorithm(entry) for entry in algorithms]
        self.horizon = int(kwargs.pop('horizon', 1000))
        self.runs = int(kwargs.pop('runs', 100))
        self.base_seed = int(kwargs.pop('base_seed', 0))
        self.reference = kwargs.pop('reference', ORACLE)
        self.bases = kwargs.pop('bases', None)
        self.workers = int(kwargs.pop('workers', 1))
        self.output = kwargs.pop('output', None)
        self.oracle_tolerance = float(kwargs.pop('oracle_tolerance', DEFAULT_TOLERANCE))
        self.cache_dir = kwargs.pop('cache_dir', None)
        self.base_path = kwargs.pop('base_path', '.')
        if kwargs:
            raise TypeError('unexpected arguments: %s' % ', '.join(sorted(kwargs)))

        if self.horizon < 1:
            raise ValueError('horizon must be >= 1')
        if self.runs < 1:
            raise ValueError('runs must be >= 1')
        if not self.algorithms:
            raise ValueError('at least one algorithm is required')
        ids = [algorithm.id for algorithm in self.algorithms]
        if len(set(ids)) != len(ids):
            raise ValueError('algorithm ids must be unique')
        if self.reference != ORACLE and self.reference not in ids:
            raise ValueError('reference %r is not a listed algorithm' % self.reference)
        if self.environment.get('type') not in ('sysadmin', 'random', 'file'):
            raise ValueError(
                'environment type must be sysadmin, random or file, got %r'
                % self.environment.get('type'))

    @staticmethod
    def _algorithm(entry):
        kind = entry.get('kind', entry.get('id'))
        if kind not in ALGORITHM_KINDS:
            raise ValueError('unknown algorithm kind %r' % (kind,))
        config = dict(entry.get('config') or {})
        if kind == 'cps':
            CpsConfig.from_dict(config)
        elif kind == 'scql':
            ScqlConfig.from_dict(config)
        return AlgorithmSpec(entry.get('id', kind), kind, config)

    @classmethod
    def from_dict(cls, document, path=None):
        if not isinstance(document, dict):
            raise ProblemFormatError('top-level value must be an object', path)
        if document.get('format', FORMAT_NAME) != FORMAT_NAME:
            raise ProblemFormatError('not an experiment spec', path)
        if document.get('version', FORMAT_VERSION) != FORMAT_VERSION:
            raise ProblemFormatError(
                'unsupported version %r' % document.get('version'), path)
        fields = dict(document)
        fields.pop('format', None)
        fields.pop('version', None)
        if path is not None:
            fields.setdefault('base_path', os.path.dirname(os.path.abspath(path)))
        try:
            return cls(fields.pop('environment'), fields.pop('algorithms'), **fields)
        except KeyError as error:
            raise ProblemFormatError('missing field %s' % error, path)
        except (TypeError, ValueError) as error:
            raise ProblemFormatError(str(error), path)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, 'r') as reader:
                document = json.load(reader)
        except ValueError as error:
            raise ProblemFormatError('not valid JSON (%s)' % error, path)
        return cls.from_dict(document, path)

    def build_problem(self):
        """ (GroundTruthMmdp, bases) of the environment section """
        fields = dict(self.environment)
        kind = fields.pop('type')
        if kind == 'sysadmin':
            mmdp, bases = build_sysadmin(SysAdminParams.from_dict(fields))
        elif kind == 'random':
            fields.setdefault('seed', self.base_seed)
            mmdp, bases = build_random_mmdp(RandomMmdpParams.from_dict(fields))
        else:
            path = os.path.join(self.base_path, fields['path'])
            mmdp = load_mmdp(path)
            bases = [(factor,) for factor in range(mmdp.num_state_factors)]
        if self.bases is not None:
            bases = [tuple(basis) for basis in self.bases]
        return mmdp, bases

    def needs_oracle(self):
        return self.reference == ORACLE or any(
            algorithm.kind == ORACLE for algorithm in self.algorithms)


def run_seeds(seed):
    """ (environment rng seed, agent rng seed) of a run """
    return [seed, 0], [seed, 1]


def make_agent(algorithm, mmdp, bases, solution, rng):
    ddn = mmdp.ddn
    if algorithm.kind == 'cps':
        return CpsAgent(ddn, bases, CpsConfig.from_dict(algorithm.config),
                        rng=rng, name=algorithm.id)
    if algorithm.kind == 'scql':
        return ScqlAgent(ddn, bases, ScqlConfig.from_dict(algorithm.config),
                         rng=rng, name=algorithm.id)
    if algorithm.kind == 'random':
        return RandomAgent(mmdp.state_space, mmdp.action_space,
                           rng=rng, name=algorithm.id)
    return OracleAgent(solution, mmdp.state_space, mmdp.action_space,
                       rng=rng, name=algorithm.id)


def run_single(task):
    """ One (algorithm, run) pair. Picklable, used by worker processes """
    env_seed, agent_seed = run_seeds(task.seed)
    env = Environment(task.mmdp, np.random.default_rng(env_seed))
    agent = make_agent(
        task.algorithm, task.mmdp, task.bases, task.solution,
        np.random.default_rng(agent_seed)
    )
    rewards = np.empty(task.horizon)
    start = time.perf_counter()
    for step in range(task.horizon):
        _, reward = agent.interact(env)
        rewards[step] = float(np.sum(reward))
    elapsed = time.perf_counter() - start
    return RunResult(
        task.algorithm.id, task.run, task.seed, rewards,
        agent.total_batch_updates, elapsed
    )


def _execute(tasks, workers):
    workers = max(1, min(int(workers), os.cpu_count() or 1))
    if workers == 1 or len(tasks) == 1:
        return [run_single(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(run_single, tasks))


def run_experiment(spec, signal_run_finished=RUN_FINISHED):
    """ Run every algorithm of spec `runs` times and compute regret curves
    against the reference.

    :return: OrderedDict {algorithm id: RegretCurve}, in spec order
    """
    mmdp, bases = spec.build_problem()
    solution = None
    if spec.needs_oracle():
        cache = FileCache(spec.cache_dir) if spec.cache_dir else None
        solution = solve_oracle(mmdp, spec.oracle_tolerance, cache=cache)

    algorithms = list(spec.algorithms)
    if spec.reference == ORACLE and all(a.id != ORACLE for a in algorithms):
        reference = AlgorithmSpec(ORACLE, ORACLE, {})
        executed = algorithms + [reference]
    else:
        executed = algorithms

    tasks = [
        RunTask(algorithm, run, spec.base_seed + run, spec.horizon,
                mmdp, bases, solution)
        for algorithm in executed
        for run in range(spec.runs)
    ]
    LOGGER.info(
        "running %d algorithms x %d runs, horizon %d",
        len(executed), spec.runs, spec.horizon
    )
    results = _execute(tasks, spec.workers)

    rewards = OrderedDict((algorithm.id, []) for algorithm in executed)
    for result in sorted(results, key=lambda r: (r.algorithm, r.run)):
        rewards[result.algorithm].append(result.rewards)
    for result in results:
        updates_per_second = result.batch_updates / result.elapsed_time \
            if result.elapsed_time > 0 else 0.0
        LOGGER.info(
            "[%s run %d] total reward %.3f, %d batch updates (%.0f/s)",
            result.algorithm, result.run, float(result.rewards.sum()),
            result.batch_updates, updates_per_second
        )
        if signal_run_finished.has_receivers:
            signal_run_finished.send_robust(
                algorithm=result.algorithm,
                run=result.run,
                seed=result.seed,
                total_reward=float(result.rewards.sum()),
                batch_updates=result.batch_updates,
                elapsed_time=result.elapsed_time,
                updates_per_second=updates_per_second,
            )

    reference_rewards = np.array(rewards[spec.reference])
    curves = OrderedDict()
    for algorithm in algorithms:
        curves[algorithm.id] = RegretCurve.from_runs(
            algorithm.id, np.array(rewards[algorithm.id]), reference_rewards
        )
    return curves


def curves_frame(curves):
    """ Step-major DataFrame with one row per (step, algorithm) """
    if hasattr(curves, 'values'):
        curves = list(curves.values())
    horizon = len(curves[0]) if curves else 0
    return pd.DataFrame({
        'step': np.repeat(np.arange(1, horizon + 1), len(curves)),
        'algorithm': np.tile([curve.algorithm for curve in curves], horizon),
        'mean_cum_regret': np.column_stack(
            [curve.mean for curve in curves]).ravel() if curves else [],
        'std_cum_regret': np.column_stack(
            [curve.std for curve in curves]).ravel() if curves else [],
    }, columns=CSV_HEADER)


def write_curves(curves, writer):
    """ Write curves (a mapping or a list of RegretCurve) step-major to an
    open text stream """
    curves_frame(curves).to_csv(
        writer, index=False, float_format='%.10g', lineterminator='\n')


def emit_csv(curves, path):
    """ Write curves to path, `-` meaning standard output """
    if path == '-':
        write_curves(curves, sys.stdout)
        return
    with open(path, 'w', newline='') as writer:
        write_curves(curves, writer)
    LOGGER.info("regret curves written to %s", path)


def read_csv(path):
    """ Parse a file written by emit_csv back into RegretCurves """
    try:
        frame = pd.read_csv(path, dtype={'algorithm': str})
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as error:
        raise ProblemFormatError('not a regret file (%s)' % error, path)
    if list(frame.columns) != CSV_HEADER:
        raise ProblemFormatError('unexpected header %r' % (list(frame.columns),), path)
    return [
        RegretCurve(
            algorithm,
            frame.loc[frame['algorithm'] == algorithm, 'mean_cum_regret'].to_numpy(),
            frame.loc[frame['algorithm'] == algorithm, 'std_cum_regret'].to_numpy(),
        )
        for algorithm in frame['algorithm'].unique()
    ]
