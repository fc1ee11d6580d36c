# -*- encoding: utf-8 -*-
""" Exceptions for CoopSweep related errors """


class CoopSweepException(Exception):
    """ Base exception for everything raised by coopsweep """


class UnvisitedConfigurationError(CoopSweepException):
    """ Raised when a transition estimate is requested for a parent
    configuration that has neither counts nor priors """

    def __init__(self, factor, configuration):
        self.factor = factor
        self.configuration = configuration
        super(UnvisitedConfigurationError, self).__init__(str(self))

    def __str__(self):
        return 'Unvisited configuration %r for state factor %d' % (
            self.configuration, self.factor
        )


class IncompatibleAssignmentError(CoopSweepException, ValueError):
    """ Raised when merging partial assignments that disagree """

    def __init__(self, variable, left, right):
        self.variable = variable
        self.left = left
        self.right = right
        super(IncompatibleAssignmentError, self).__init__(str(self))

    def __str__(self):
        return 'Conflicting values for %s: %d != %d' % (
            self.variable, self.left, self.right
        )


class OracleSizeError(CoopSweepException):
    """ Raised when the flat oracle is asked to enumerate too much """

    def __init__(self, size, cap):
        self.size = size
        self.cap = cap
        super(OracleSizeError, self).__init__(str(self))

    def __str__(self):
        return 'Joint problem has %d state-action entries, cap is %d' % (
            self.size, self.cap
        )


class ProblemFormatError(CoopSweepException):
    """ Raised on malformed problem, spec or snapshot documents """

    def __init__(self, reason, path=None):
        self.reason = reason
        self.path = path
        super(ProblemFormatError, self).__init__(str(self))

    def __str__(self):
        if self.path is None:
            return 'Invalid document: %s' % self.reason
        return 'Invalid document %s: %s' % (self.path, self.reason)


class ConvergenceError(CoopSweepException):
    """ Raised when value iteration misbehaves or does not converge """

    def __init__(self, iteration, residual, message):
        self.iteration = iteration
        self.residual = residual
        self.message = message
        super(ConvergenceError, self).__init__(str(self))

    def __str__(self):
        return '[iteration %d, residual %.3e] %s' % (
            self.iteration, self.residual, self.message
        )
