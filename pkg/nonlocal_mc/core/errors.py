# -*- coding: utf-8 -*-
"""
    nonlocal_mc.core.errors
    ~~~~~~~~~~~~~~~~~~~~~~~

    Implements the exceptions raised by nonlocal_mc. Each one mixes with
    the closest builtin exception so that callers can catch them either
    way (e.g. a DomainError is also a ValueError).

    :copyright: 2026 by The nonlocal-mc Authors
    :license: BSD, see LICENSE for more details.
"""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""
    pass


class PreconditionError(ValueError):
    """An operation was called on an object that does not satisfy its precondition."""
    pass


class NotSupportedError(NotImplementedError):
    """ """
    pass


class ToleranceNotMetError(ArithmeticError):
    """Adaptive quadrature reached its maximum depth before converging.

    Parameters
    ----------
    message : str
    estimate : float or ndarray
        last available estimate.
    index : int or tuple, optional
        the cell (or matrix entry) that failed to converge.
    """

    def __init__(self, message, estimate=None, index=None):
        super().__init__(message)
        self.estimate = estimate
        self.index = index


class DivergenceError(ArithmeticError):
    """The integrated state became non finite.

    Parameters
    ----------
    message : str
    step : int
        time step index at which the non finite value was detected.
    metadata : dict, optional
        extra information (e.g. gamma, n and trial index) added by callers.
    """

    def __init__(self, message, step=None, metadata=None):
        super().__init__(message)
        self.step = step
        self.metadata = dict(metadata or {})

    def __str__(self):
        msg = super().__str__()
        if self.metadata:
            extra = ', '.join('%s=%s' % (k, v) for k, v in sorted(self.metadata.items()))
            msg = '%s (%s)' % (msg, extra)
        return msg


class ConfigError(Exception):
    """Malformed or invalid configuration.

    Parameters
    ----------
    message : str
    key : str, optional
        offending configuration key.
    line : int, optional
        line number in the configuration file.
    """

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line

    def __str__(self):
        msg = super().__str__()
        if self.key is not None:
            msg = "%s [key '%s']" % (msg, self.key)
        if self.line is not None:
            msg = '%s [line %d]' % (msg, self.line)
        return msg


class OutputError(OSError):
    """Could not write an output artifact."""

    def __init__(self, path, reason):
        super().__init__('Could not write %s: %s' % (path, reason))
        self.path = path
