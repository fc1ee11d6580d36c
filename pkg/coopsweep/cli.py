# -*- encoding: utf-8 -*-
""" `bench` command line: experiments, oracle solutions and problem
generation """
import argparse
import json
import logging
import sys

from .baselines import DEFAULT_ORACLE_CAP
from .baselines import DEFAULT_TOLERANCE
from .baselines import solve_oracle
from .bench import ExperimentSpec
from .bench import emit_csv
from .bench import run_experiment
from .cache import FileCache
from .environments import RandomMmdpParams
from .environments import SysAdminParams
from .environments import build_random_mmdp
from .environments import build_sysadmin
from .exceptions import CoopSweepException
from .exceptions import ProblemFormatError
from .problem import dump_mmdp
from .problem import load_mmdp

LOGGER = logging.getLogger(__name__)


def _read_json(path):
    try:
        with open(path, 'r') as reader:
            return json.load(reader)
    except ValueError as error:
        raise ProblemFormatError('not valid JSON (%s)' % error, path)


def build_parser():
    parser = argparse.ArgumentParser(
        prog='bench',
        description='Cooperative prioritized sweeping experiments'
    )
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='debug logging')
    commands = parser.add_subparsers(dest='command')
    commands.required = True

    run = commands.add_parser('run', help='run an experiment spec')
    run.add_argument('spec', help='experiment spec (JSON)')
    run.add_argument('--seed', type=int, help='override base_seed')
    run.add_argument('--runs', type=int, help='override runs')
    run.add_argument('--horizon', type=int, help='override horizon')
    run.add_argument('--workers', type=int, help='override workers')
    run.add_argument('--out', help='override the output CSV path')
    run.set_defaults(handler=command_run)

    oracle = commands.add_parser('oracle', help='solve a problem file exactly')
    oracle.add_argument('problem', help='problem file (JSON)')
    oracle.add_argument('--out', help='write the solution JSON there')
    oracle.add_argument('--tol', type=float, default=DEFAULT_TOLERANCE)
    oracle.add_argument('--cap', type=int, default=DEFAULT_ORACLE_CAP)
    oracle.add_argument('--cache-dir', help='diskcache directory')
    oracle.set_defaults(handler=command_oracle)

    sysadmin = commands.add_parser('gen-sysadmin', help='write a SysAdmin problem')
    sysadmin.add_argument('params', help='SysAdmin parameters (JSON)')
    sysadmin.add_argument('-o', '--out', required=True)
    sysadmin.set_defaults(handler=command_gen_sysadmin)

    random = commands.add_parser('gen-random', help='write a random MMDP problem')
    random.add_argument('params', help='random MMDP parameters (JSON)')
    random.add_argument('-o', '--out', required=True)
    random.add_argument('--seed', type=int, help='override the seed')
    random.set_defaults(handler=command_gen_random)
    return parser


def command_run(args):
    spec = ExperimentSpec.from_file(args.spec)
    for name, value in (('base_seed', args.seed), ('runs', args.runs),
                        ('horizon', args.horizon), ('workers', args.workers),
                        ('output', args.out)):
        if value is not None:
            setattr(spec, name, value)
    if spec.runs < 1 or spec.horizon < 1:
        raise ValueError('runs and horizon must be >= 1')
    curves = run_experiment(spec)
    for curve in curves.values():
        LOGGER.info(
            "%s: cumulative regret %.3f +- %.3f, cumulative reward %.3f",
            curve.algorithm, curve.mean[-1], curve.std[-1],
            curve.mean_cumulative_reward[-1]
        )
    emit_csv(curves, spec.output or '-')


def command_oracle(args):
    mmdp = load_mmdp(args.problem)
    cache = FileCache(args.cache_dir) if args.cache_dir else None
    solution = solve_oracle(mmdp, args.tol, cache=cache, cap=args.cap)
    LOGGER.info(
        "oracle converged in %d iterations, residual %.3e, V(initial) = %.6f",
        solution.iterations, solution.residual,
        solution.value(mmdp.initial_state)
    )
    if args.out:
        with open(args.out, 'w') as writer:
            json.dump(solution.to_dict(), writer)


def command_gen_sysadmin(args):
    mmdp, _ = build_sysadmin(SysAdminParams.from_dict(_read_json(args.params)))
    dump_mmdp(mmdp, args.out)


def command_gen_random(args):
    document = _read_json(args.params)
    if args.seed is not None:
        document['seed'] = args.seed
    mmdp, _ = build_random_mmdp(RandomMmdpParams.from_dict(document))
    dump_mmdp(mmdp, args.out)


def main(argv=None):
    """ Entry point. Returns the process exit code """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s'
    )
    try:
        args.handler(args)
    except (CoopSweepException, ValueError, TypeError, OSError) as error:
        LOGGER.error("%s", error)
        sys.stderr.write('bench: %s\n' % error)
        return 1
    return 0


if __name__ == '__main__':  # pragma: no cover
    sys.exit(main())
