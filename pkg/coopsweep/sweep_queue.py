# -*- encoding: utf-8 -*-
""" Priority queue over partial state-action assignments.

Entries are identified by the canonical steps of their PartialAssignment
((kind, index, value) triples, sorted). An entry keeps its id once it has
been registered; whether it is currently queued is a flag next to its
priority, both held in arrays indexed by id.

The entries are also the leaves of a trie over their steps. Nodes are
shared between entries with a common prefix and stored in flat arrays
(bound variable, value, packed step); every entry keeps the node ids of
its path. Conflicts with the assignment being built are evaluated once per
node and inherited by every entry below it.

Popping a batch seed removes the max entry, then visits the remaining
entries in a random order and merges every entry compatible with the
accumulated assignment. The random order is drawn once per pop: a 63-bit
salt from the rng keys a hash of every binding, and children of a trie
node are visited in increasing hash order. That visit order is the
lexicographic order of the keys along the entry paths, an entry coming
before the entries extending it.
"""
import logging

import numpy as np

from .model import PartialAssignment

LOGGER = logging.getLogger(__name__)

DEFAULT_THETA = 1e-4

_MASK = (1 << 64) - 1
_MIX_1 = 0xBF58476D1CE4E5B9
_MIX_2 = 0x94D049BB133111EB


def pack_step(step):
    """ Injective 64-bit code of a (kind, index, value) binding """
    kind, index, value = step
    return (kind << 62) | (index << 31) | value


def traversal_key(salt, step):
    """ Position of a binding among its siblings in the randomized
    traversal of one pop """
    z = salt ^ pack_step(step)
    z = ((z ^ (z >> 30)) * _MIX_1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX_2) & _MASK
    return z ^ (z >> 31)


def _traversal_keys(salt, packed):
    """ traversal_key over an array of packed steps """
    z = packed ^ np.uint64(salt)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_2)
    return z ^ (z >> np.uint64(31))


class SweepQueue(object):
    """ Max-priority queue of PartialAssignments with priority bumping and
    compatible batch extraction. """

    def __init__(self):
        self._ids = {}
        self._steps = []
        self._priority = np.zeros(64)
        self._live = np.zeros(64, dtype=bool)
        self._count = 0
        # node 0 is the root, it also pads the paths of short entries
        self._paths = np.zeros((64, 1), dtype=np.int64)
        self._children = {}
        self._node_var = np.zeros(256, dtype=np.int64)
        self._node_value = np.full(256, -1, dtype=np.int64)
        self._node_packed = np.zeros(256, dtype=np.uint64)
        self._num_nodes = 1
        # variable code 0 is bound to the root and never assigned
        self._var_codes = {}
        self._variables = [None]
        self._sources = None

    def __len__(self):
        return self._count

    def __bool__(self):
        return self._count > 0

    def __contains__(self, assignment):
        entry = self._ids.get(assignment.steps)
        return entry is not None and bool(self._live[entry])

    def priority(self, assignment, default=None):
        entry = self._ids.get(assignment.steps)
        if entry is None or not self._live[entry]:
            return default
        return float(self._priority[entry])

    def _variable(self, kind, index):
        code = self._var_codes.get((kind, index))
        if code is None:
            code = len(self._variables)
            self._var_codes[(kind, index)] = code
            self._variables.append((kind, index))
        return code

    def _node(self, parent, step):
        node = self._children.get((parent, step))
        if node is None:
            node = self._num_nodes
            if node == len(self._node_var):
                self._node_var = np.concatenate(
                    (self._node_var, np.zeros(node, dtype=np.int64)))
                self._node_value = np.concatenate(
                    (self._node_value, np.full(node, -1, dtype=np.int64)))
                self._node_packed = np.concatenate(
                    (self._node_packed, np.zeros(node, dtype=np.uint64)))
            self._node_var[node] = self._variable(step[0], step[1])
            self._node_value[node] = step[2]
            self._node_packed[node] = pack_step(step)
            self._children[(parent, step)] = node
            self._num_nodes += 1
        return node

    def register(self, steps):
        """ Id of the entry with canonical steps, created (not queued) on
        first use """
        entry = self._ids.get(steps)
        if entry is not None:
            return entry
        if not steps:
            raise ValueError('empty assignments cannot be queued')
        entry = len(self._steps)
        if entry == len(self._priority):
            self._priority = np.concatenate((self._priority, np.zeros(entry)))
            self._live = np.concatenate((self._live, np.zeros(entry, dtype=bool)))
            self._paths = np.concatenate(
                (self._paths, np.zeros_like(self._paths)))
        if len(steps) > self._paths.shape[1]:
            self._paths = np.pad(
                self._paths, ((0, 0), (0, len(steps) - self._paths.shape[1])))
        node = 0
        for depth, step in enumerate(steps):
            node = self._node(node, step)
            self._paths[entry, depth] = node
        self._ids[steps] = entry
        self._steps.append(steps)
        return entry

    def learner_entries(self, learner, rows):
        """ Entry ids of the parent assignments of recorded learner rows """
        if self._sources is None or self._sources[0] is not learner:
            self._sources = (learner, np.full(64, -1, dtype=np.int64))
        cache = self._sources[1]
        if learner.num_rows > len(cache):
            cache = np.concatenate(
                (cache, np.full(max(learner.num_rows, len(cache)), -1, dtype=np.int64)))
            self._sources = (learner, cache)
        entries = cache[rows]
        for position in np.flatnonzero(entries < 0).tolist():
            row = int(rows[position])
            cache[row] = entries[position] = self.register(learner.assignment(row).steps)
        return entries

    def push_or_bump(self, assignment, priority, theta=DEFAULT_THETA):
        """ Add priority to the entry of assignment (creating it if needed)
        when priority exceeds theta. Returns True if the queue changed. """
        if priority <= theta:
            return False
        entry = self.register(assignment.steps)
        if not self._live[entry]:
            self._live[entry] = True
            self._count += 1
        self._priority[entry] += priority
        return True

    def push_many(self, entries, priorities, theta=DEFAULT_THETA):
        """ push_or_bump for arrays of entry ids and priorities, in order.
        Returns the number of pushes that changed the queue. """
        priorities = np.asarray(priorities, dtype=float)
        keep = priorities > theta
        entries = np.asarray(entries, dtype=np.int64)[keep]
        if not len(entries):
            return 0
        fresh = np.unique(entries[~self._live[entries]])
        self._live[fresh] = True
        self._count += len(fresh)
        np.add.at(self._priority, entries, priorities[keep])
        return len(entries)

    def _top(self):
        live = np.flatnonzero(self._live[:len(self._steps)])
        priorities = self._priority[live]
        candidates = live[priorities == priorities.max()]
        if len(candidates) == 1:
            return int(candidates[0]), live
        return min(candidates.tolist(), key=self._steps.__getitem__), live

    def peek(self):
        """ (assignment, priority) of the max entry, or None """
        if not self._count:
            return None
        entry, _ = self._top()
        return PartialAssignment.from_steps(self._steps[entry]), \
            float(self._priority[entry])

    def _release(self, entries):
        self._live[entries] = False
        self._priority[entries] = 0.0
        self._count -= len(entries)

    def pop_batch_seed(self, rng):
        """ Remove the max entry and every entry merged with it.

        :return: the merged PartialAssignment, or None on an empty queue
        """
        if not self._count:
            return None
        best, live = self._top()
        self._release([best])

        salt = int(rng.integers(0, 1 << 63))
        accumulated = np.full(len(self._variables), -1, dtype=np.int64)
        path = self._paths[best]
        accumulated[self._node_var[path]] = self._node_value[path]
        others = live[live != best]
        if len(others):
            merged = self._merge_compatible(others, salt, accumulated)
            if len(merged):
                self._release(merged)
                LOGGER.debug("batch seed merged %d extra entries", len(merged))

        bound = np.flatnonzero(accumulated >= 0)
        variables = self._variables
        return PartialAssignment.from_steps(sorted(
            variables[code] + (value,)
            for code, value in zip(bound.tolist(), accumulated[bound].tolist())
        ))

    def _merge_compatible(self, entries, salt, accumulated):
        """ Greedy merge of entries, in traversal order, into accumulated.

        Decided in rounds: an undecided entry is merged as soon as no
        undecided entry before it binds one of its variables differently,
        and dropped once it conflicts with accumulated. The first undecided
        entry is always merged, so every round makes progress.
        """
        paths = self._paths[entries]
        present = paths > 0
        keys = _traversal_keys(salt, self._node_packed[paths])
        sort_keys = []
        for depth in range(paths.shape[1] - 1, -1, -1):
            sort_keys.append(keys[:, depth])
            sort_keys.append(present[:, depth])
        order = np.lexsort(sort_keys)
        paths, present, entries = paths[order], present[order], entries[order]

        variables = self._node_var[paths]
        values = self._node_value[paths]
        # per node conflicts, inherited by the whole subtree
        node_bound = accumulated[self._node_var[:self._num_nodes]]
        conflict = (node_bound >= 0) & (node_bound != self._node_value[:self._num_nodes])
        undecided = ~conflict[paths].any(axis=1)

        count = len(entries)
        rows, columns = np.nonzero(present)
        bindings = np.lexsort((rows, variables[rows, columns]))
        rows = rows[bindings]
        bound_vars = variables[rows, columns[bindings]]
        bound_values = values[rows, columns[bindings]]

        merged = np.zeros(count, dtype=bool)
        while undecided.any():
            alive = undecided[rows]
            row, var, value = rows[alive], bound_vars[alive], bound_values[alive]
            first = np.empty(len(var), dtype=bool)
            first[0] = True
            np.not_equal(var[1:], var[:-1], out=first[1:])
            starts = np.flatnonzero(first)
            group = np.cumsum(first) - 1
            deviates = value != value[starts][group]
            earliest = np.minimum.reduceat(
                np.where(deviates, row, count), starts)[group]
            blocked = np.zeros(count, dtype=bool)
            blocked[row[deviates | (earliest < row)]] = True

            accepted = undecided & ~blocked
            accumulated[variables[accepted]] = values[accepted]
            merged |= accepted
            undecided &= ~accepted

            pending = np.flatnonzero(undecided)
            bound = accumulated[variables[pending]]
            clash = ((bound >= 0) & (bound != values[pending])).any(axis=1)
            undecided[pending[clash]] = False
        return entries[merged]

    def dump(self):
        """ [(assignment, priority)] of the live entries, sorted by
        canonical steps """
        live = np.flatnonzero(self._live[:len(self._steps)]).tolist()
        return [
            (PartialAssignment.from_steps(self._steps[entry]),
             float(self._priority[entry]))
            for entry in sorted(live, key=self._steps.__getitem__)
        ]

    def clear(self):
        self._live[:] = False
        self._priority[:] = 0.0
        self._count = 0


def enqueue_backprop(queue, factor_deltas, learner, state, theta=DEFAULT_THETA,
                     enumerate_unvisited=False):
    """ Back-propagate factor deltas one step: for every state factor i with
    Delta_i > 0 and every parent configuration of i, push the configuration
    with priority T_i(state_i | configuration) * Delta_i.

    Only recorded configurations are enumerated unless enumerate_unvisited
    is set. Configurations without a defined estimate are skipped.

    :return: number of pushes that changed the queue
    """
    if enumerate_unvisited:
        changed = 0
        for factor, delta in enumerate(factor_deltas):
            if delta <= 0:
                continue
            for assignment, probability in learner.predecessor_probabilities(
                    factor, state[factor], True):
                if queue.push_or_bump(assignment, probability * delta, theta):
                    changed += 1
        return changed
    rows, priorities = learner.backprop_priorities(factor_deltas, state)
    keep = priorities > theta
    if not keep.any():
        return 0
    rows, priorities = rows[keep], priorities[keep]
    return queue.push_many(queue.learner_entries(learner, rows), priorities, theta)
