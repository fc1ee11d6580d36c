# -*- encoding: utf-8 -*-
""" Problem-definition file format for ground-truth MMDPs.

A problem file is a JSON document::

    {
      "format": "coopsweep-mmdp",
      "version": 1,
      "state_sizes": [3, 3],
      "action_sizes": [2],
      "gamma": 0.9,
      "initial_state": [0, 0],
      "factors": [
        {
          "action_parents": [0],
          "configurations": [
            {"action_values": [0], "state_parents": [0, 1],
             "transitions": [[...], ...], "rewards": [...]},
            ...
          ]
        },
        ...
      ]
    }

Configurations are listed in mixed-radix order of the action parents and
rows in mixed-radix order of the state parents, the last-listed parent
varying fastest. Probabilities are written with the shortest decimal
representation that reads back to the same double, so write->read is
bit-exact.
"""
import json
import logging

from .exceptions import ProblemFormatError
from .model import DdnStructure
from .model import FactorSpace
from .model import GroundTruthMmdp
from .utils import decode_mixed_radix

LOGGER = logging.getLogger(__name__)

FORMAT_NAME = 'coopsweep-mmdp'
FORMAT_VERSION = 1


def mmdp_to_dict(mmdp):
    """ Serialize a GroundTruthMmdp into a JSON-compatible dict """
    ddn = mmdp.ddn
    factors = []
    for factor in range(mmdp.num_state_factors):
        configurations = []
        for action_code in range(ddn.num_action_configs(factor)):
            configurations.append({
                'action_values': list(decode_mixed_radix(
                    action_code, ddn.action_parent_sizes[factor]
                )),
                'state_parents': list(ddn.state_parents(factor, action_code)),
                'transitions': mmdp.transitions[factor][action_code].tolist(),
                'rewards': mmdp.rewards[factor][action_code].tolist(),
            })
        factors.append({
            'action_parents': list(ddn.action_parents[factor]),
            'configurations': configurations,
        })
    return {
        'format': FORMAT_NAME,
        'version': FORMAT_VERSION,
        'state_sizes': list(mmdp.state_space.sizes),
        'action_sizes': list(mmdp.action_space.sizes),
        'gamma': mmdp.gamma,
        'initial_state': list(mmdp.initial_state),
        'factors': factors,
    }


def mmdp_from_dict(document, path=None):
    """ Build a GroundTruthMmdp from its dict form """
    if not isinstance(document, dict):
        raise ProblemFormatError('top-level value must be an object', path)
    if document.get('format') != FORMAT_NAME:
        raise ProblemFormatError(
            'format must be %r, got %r' % (FORMAT_NAME, document.get('format')),
            path
        )
    if document.get('version') != FORMAT_VERSION:
        raise ProblemFormatError(
            'unsupported version %r' % document.get('version'), path
        )
    try:
        state_space = FactorSpace(document['state_sizes'])
        action_space = FactorSpace(document['action_sizes'])
        action_parents, state_parents = [], []
        transitions, rewards = [], []
        for entry in document['factors']:
            action_parents.append(entry['action_parents'])
            conditional = {}
            factor_t, factor_r = [], []
            for configuration in entry['configurations']:
                key = tuple(configuration['action_values'])
                conditional[key] = configuration['state_parents']
                factor_t.append(configuration['transitions'])
                factor_r.append(configuration['rewards'])
            state_parents.append(conditional)
            transitions.append(factor_t)
            rewards.append(factor_r)
        ddn = DdnStructure(state_space, action_space, action_parents, state_parents)
        return GroundTruthMmdp(
            state_space, action_space, ddn, transitions, rewards,
            document['gamma'], document.get('initial_state'),
        )
    except KeyError as error:
        raise ProblemFormatError('missing field %s' % error, path)
    except (TypeError, ValueError) as error:
        raise ProblemFormatError(str(error), path)


def dump_mmdp(mmdp, path):
    """ Write mmdp to path as a problem file """
    with open(path, 'w') as writer:
        json.dump(mmdp_to_dict(mmdp), writer)
    LOGGER.info("problem written to %s", path)


def load_mmdp(path):
    """ Read a problem file """
    try:
        with open(path, 'r') as reader:
            document = json.load(reader)
    except ValueError as error:
        raise ProblemFormatError('not valid JSON (%s)' % error, path)
    return mmdp_from_dict(document, path)
