# -*- encoding: utf-8 -*-
""" Joint action selection by exact variable elimination over the
coordination graph of a FactoredQ conditioned on a joint state.

The scopes of the conditioned factors only depend on the Q factorization,
never on the state, so the elimination schedule is compiled once into an
EliminationPlan and replayed with fresh tables at every call.

Among several maximizing joint actions the lowest one in mixed radix order
(last variable fastest) is returned, whatever the elimination order.
"""
import logging

import numpy as np

LOGGER = logging.getLogger(__name__)


class ConditionedFactorGraph(object):
    """ Factors over action variables obtained by fixing the state in every
    Q component, plus the constant contributed by action-independent
    components. Tables may be views on the Q tables. """

    def __init__(self, action_sizes, factors, constant=0.0):
        self.action_sizes = tuple(action_sizes)
        self.factors = list(factors)
        self.constant = float(constant)

    @property
    def scopes(self):
        return tuple(scope for scope, _ in self.factors)

    @property
    def tables(self):
        return [table for _, table in self.factors]

    def evaluate(self, action):
        """ Conditioned sum at a joint action """
        total = self.constant
        for scope, table in self.factors:
            total += float(table[tuple(action[k] for k in scope)])
        return total


def condition(q, state, action_sizes=None):
    """ Fix the state variables of every component of q to state """
    if action_sizes is None:
        action_sizes = _infer_action_sizes(q)
    factors = []
    constant = 0.0
    for component in q.components:
        table = component.state_slice(state)
        if component.action_vars:
            factors.append((component.action_vars, table))
        else:
            constant += float(table)
    return ConditionedFactorGraph(action_sizes, factors, constant)


def _infer_action_sizes(q):
    sizes = {}
    for component in q.components:
        offset = len(component.state_vars)
        for position, variable in enumerate(component.action_vars):
            sizes[variable] = component.table.shape[offset + position]
    count = max(sizes) + 1 if sizes else 0
    return tuple(sizes.get(variable, 1) for variable in range(count))


def _interaction_graph(num_vars, scopes):
    neighbours = [set() for _ in range(num_vars)]
    for scope in scopes:
        for variable in scope:
            neighbours[variable].update(scope)
    for variable in range(num_vars):
        neighbours[variable].discard(variable)
    return neighbours


def tie_safe_order(num_vars, scopes):
    """ Greedy min-degree elimination order restricted to the variables
    whose index exceeds the index of every variable they are still
    connected to. Ties go to the lowest initial degree, then the lowest
    index.

    Under such an order every variable is decided, when backtracking,
    before all the variables eliminated below it, which all have higher
    indices, so taking the lowest maximizing value at each step yields the
    lowest maximizing joint action.
    """
    neighbours = _interaction_graph(num_vars, scopes)
    initial_degree = [len(adjacent) for adjacent in neighbours]

    remaining = set(range(num_vars))
    order = []
    while remaining:
        # the highest remaining index is always eligible
        eligible = [
            v for v in remaining
            if not neighbours[v] or max(neighbours[v]) < v
        ]
        chosen = min(
            eligible,
            key=lambda v: (len(neighbours[v]), initial_degree[v], v)
        )
        adjacent = neighbours[chosen]
        for variable in adjacent:
            neighbours[variable].discard(chosen)
            neighbours[variable].update(adjacent)
            neighbours[variable].discard(variable)
        remaining.discard(chosen)
        order.append(chosen)
    return tuple(order)


def default_order(graph):
    """ Elimination order used when none is given. Deterministic given the
    scopes. """
    return tie_safe_order(len(graph.action_sizes), graph.scopes)


def induced_width(graph, order):
    """ Largest scope (minus the eliminated variable) created when
    eliminating in order """
    neighbours = [set() for _ in range(len(graph.action_sizes))]
    for scope in graph.scopes:
        for variable in scope:
            neighbours[variable].update(scope)
    width = 0
    eliminated = set()
    for variable in order:
        adjacent = neighbours[variable] - eliminated - {variable}
        width = max(width, len(adjacent))
        for other in adjacent:
            neighbours[other].update(adjacent)
        eliminated.add(variable)
    return width


class EliminationPlan(object):
    """ Compiled elimination schedule for a fixed list of factor scopes.

    Each step eliminates one variable: it sums the (broadcast) tables of the
    slots whose scope contains the variable, maximizes it out, and stores
    the result in a new slot. The summed table is kept for backtracking.

    When the order is not tie safe, backtracking watches for tied maxima
    on the chosen path and, if one shows up, the tables are solved again
    with a tie safe plan over the same scopes.
    """

    def __init__(self, action_sizes, scopes, order):
        self.action_sizes = tuple(action_sizes)
        self.scopes = tuple(tuple(scope) for scope in scopes)
        self.num_factors = len(self.scopes)
        self.order = tuple(order)
        slot_scopes = list(self.scopes)
        live = set(range(len(slot_scopes)))
        self.steps = []
        for variable in self.order:
            inputs = [slot for slot in sorted(live) if variable in slot_scopes[slot]]
            if not inputs:
                self.steps.append((variable, (), (), None, 0))
                continue
            scope = tuple(sorted(set().union(*(slot_scopes[s] for s in inputs))))
            shapes = tuple(
                tuple(
                    self.action_sizes[u] if u in slot_scopes[slot] else 1
                    for u in scope
                )
                for slot in inputs
            )
            axis = scope.index(variable)
            rest = scope[:axis] + scope[axis + 1:]
            live.difference_update(inputs)
            live.add(len(slot_scopes))
            slot_scopes.append(rest)
            self.steps.append((variable, tuple(inputs), shapes, rest, axis))
        self.leftover = tuple(sorted(live))
        covered = set(self.order)
        for scope in self.scopes:
            if not covered.issuperset(scope):
                raise ValueError('elimination order misses variables of %r' % (scope,))
        self.tie_safe = all(
            all(u < variable for u in rest)
            for variable, inputs, _, rest, _ in self.steps if inputs
        )
        self._fallback = None

    @property
    def fallback(self):
        """ Tie safe plan over the same scopes """
        if self._fallback is None:
            order = tie_safe_order(len(self.action_sizes), self.scopes)
            self._fallback = EliminationPlan(self.action_sizes, self.scopes, order)
            LOGGER.debug("tie safe elimination order %r compiled", order)
        return self._fallback

    def run(self, tables, constant=0.0):
        """ Return (joint action, max value) for the given factor tables """
        action, value, tied = self._solve(tables, constant, not self.tie_safe)
        if tied:
            action, value, _ = self.fallback._solve(tables, constant, False)
        return action, value

    def _solve(self, tables, constant, check_ties):
        slots = list(tables)
        joints = []
        for _, inputs, shapes, _, axis in self.steps:
            if not inputs:
                joints.append(None)
                continue
            joint = slots[inputs[0]].reshape(shapes[0])
            for slot, shape in zip(inputs[1:], shapes[1:]):
                joint = joint + slots[slot].reshape(shape)
            joints.append(joint)
            slots.append(np.asarray(joint.max(axis=axis)))

        value = float(constant)
        for slot in self.leftover:
            value += float(slots[slot])

        action = [0] * len(self.action_sizes)
        tied = False
        for (variable, _, _, rest, axis), joint in zip(
                reversed(self.steps), reversed(joints)):
            if joint is None:
                continue
            index = tuple(action[u] for u in rest)
            line = joint[index[:axis] + (slice(None),) + index[axis:]]
            choice = int(line.argmax())
            if check_ties and not tied:
                tied = np.count_nonzero(line == line[choice]) > 1
            action[variable] = choice
        return tuple(action), value, tied


def argmax_action(graph, order=None):
    """ Exact maximization of a conditioned factor graph.

    :return: (joint action tuple, max value), the lowest mixed radix joint
        action among the maximizers
    """
    if order is None:
        order = default_order(graph)
    plan = EliminationPlan(graph.action_sizes, graph.scopes, order)
    return plan.run(graph.tables, graph.constant)


class ActionSelector(object):
    """ Reusable maximizer for one FactoredQ.

    Action variables that only appear in single-variable components are
    independent of each other and are maximized together with array
    operations over the flat Q buffer. The remaining components go through
    an EliminationPlan compiled on first use.
    """

    def __init__(self, q, action_sizes, order=None):
        self.q = q
        self.action_sizes = tuple(action_sizes)
        self._order = order
        self._plan = None

        coupled = set()
        for component in q.components:
            if len(component.action_vars) > 1:
                coupled.update(component.action_vars)
        constant, general, unary = [], [], {}
        for position, component in enumerate(q.components):
            if not component.action_vars:
                constant.append(position)
            elif component.action_vars[0] in coupled:
                general.append(position)
            else:
                variable = component.action_vars[0]
                unary.setdefault(self.action_sizes[variable], []).append(
                    (variable, position))
        self._coupled = sorted(coupled)
        self._constant = np.array(constant, dtype=np.int64)
        self._general = general
        self._general_sizes = [
            int(np.prod(q.components[p].table.shape[len(q.components[p].state_vars):]))
            for p in general
        ]
        self._general_shapes = [
            q.components[p].table.shape[len(q.components[p].state_vars):]
            for p in general
        ]
        self._unary = []
        for size, members in sorted(unary.items()):
            members.sort()
            variables = np.array([v for v, _ in members], dtype=np.int64)
            positions = np.array([p for _, p in members], dtype=np.int64)
            starts = np.flatnonzero(np.r_[True, variables[1:] != variables[:-1]])
            self._unary.append((
                np.arange(size), positions, variables[starts],
                None if len(starts) == len(variables) else starts
            ))

    @property
    def plan(self):
        if self._plan is None:
            scopes = [self.q.components[p].action_vars for p in self._general]
            graph = ConditionedFactorGraph(self.action_sizes, [
                (scope, None) for scope in scopes])
            order = self._order if self._order is not None else default_order(graph)
            self._plan = EliminationPlan(self.action_sizes, scopes, order)
            LOGGER.debug(
                "elimination plan compiled: %d coupled factors, induced width %d",
                len(scopes), induced_width(graph, order)
            )
        return self._plan

    def select(self, state):
        """ (a*, max value) of q conditioned on state """
        values = self.q.values
        bases = self.q.state_bases(state)
        total = float(values[bases[self._constant]].sum())

        action = np.zeros(len(self.action_sizes), dtype=np.int64)
        for grid, positions, variables, starts in self._unary:
            block = values[bases[positions][:, None] + grid]
            if starts is not None:
                block = np.add.reduceat(block, starts, axis=0)
            action[variables] = block.argmax(axis=1)
            total += float(block.max(axis=1).sum())

        if self._general:
            tables = [
                values[bases[p]:bases[p] + size].reshape(shape)
                for p, size, shape in zip(
                    self._general, self._general_sizes, self._general_shapes)
            ]
            coupled, value = self.plan.run(tables)
            for variable in self._coupled:
                action[variable] = coupled[variable]
            total += value
        return tuple(action.tolist()), total


def brute_force_argmax(graph):
    """ Exhaustive maximization, lowest mixed-radix action on ties. Only
    usable on small action spaces. """
    sizes = graph.action_sizes
    count = int(np.prod(sizes, dtype=np.int64))
    actions = np.indices(sizes).reshape(len(sizes), count) if sizes \
        else np.zeros((0, 1), dtype=np.int64)
    totals = np.full(count, graph.constant)
    for scope, table in graph.factors:
        totals += np.asarray(table)[tuple(actions[k] for k in scope)]
    best = int(totals.argmax())
    return tuple(int(value) for value in actions[:, best]), float(totals[best])
