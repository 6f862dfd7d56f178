# -*- coding: utf-8 -*-
"""
    nonlocal_mc.core.helpers
    ~~~~~~~~~~~~~~~~~~~~~~~~

    Small helpers shared by the library modules: seed mixing,
    log-log slope fitting and formatting.

    :copyright: 2026 by The nonlocal-mc Authors
    :license: BSD, see LICENSE for more details.
"""

import math

import numpy as np

from .errors import DomainError


MASK64 = (1 << 64) - 1


def splitmix64(value):
    """One step of the splitmix64 output function.

    Parameters
    ----------
    value : int
        any integer, reduced modulo 2**64.

    Returns
    -------
    int
        a 64-bit unsigned integer.

    Examples
    --------
    >>> splitmix64(0)
    16294208416658607535
    """
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(*parts):
    """Combine integers into a single 64-bit seed.

    The result depends on the order of the parts, and adding a new part
    never changes the value derived from a prefix of the others.

    >>> mix_seed(1, 2) == mix_seed(1, 2)
    True
    >>> mix_seed(1, 2) == mix_seed(2, 1)
    False
    """
    state = 0
    for part in parts:
        state = splitmix64(state ^ (int(part) & MASK64))
    return state


def loglog_slope(xs, ys):
    """Least squares slope of log(ys) against log(xs).

    Parameters
    ----------
    xs, ys : sequence of positive floats

    Returns
    -------
    float

    Raises
    ------
    DomainError
        with fewer than two points or non positive values.

    Examples
    --------
    >>> round(loglog_slope([1, 2, 4], [1, 4, 16]), 12)
    2.0
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2 or xs.size != ys.size:
        raise DomainError('A slope needs at least two (x, y) pairs, got {} and {}'.format(xs.size, ys.size))
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise DomainError('log-log fit requires positive values')
    lx, ly = np.log(xs), np.log(ys)
    lx0 = lx - lx.mean()
    denominator = float(np.dot(lx0, lx0))
    if denominator == 0:
        raise DomainError('log-log fit requires at least two distinct abscissas')
    return float(np.dot(lx0, ly - ly.mean()) / denominator)


def is_power_of_two(value):
    """
    >>> is_power_of_two(64), is_power_of_two(96), is_power_of_two(1)
    (True, False, True)
    """
    value = int(value)
    return value > 0 and value & (value - 1) == 0


def format_float(value):
    """Locale independent representation with 17 significant digits.

    >>> format_float(0.1)
    '0.10000000000000001'
    >>> format_float(float('nan'))
    'nan'
    """
    value = float(value)
    if math.isnan(value):
        return 'nan'
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return '%.17g' % value


def as_tuple(value, cast=float):
    """Normalize a scalar, a comma separated string or a sequence into a tuple.

    >>> as_tuple('0.25, 0.5')
    (0.25, 0.5)
    >>> as_tuple(3, int)
    (3,)
    """
    if isinstance(value, str):
        items = [item.strip() for item in value.split(',')]
        return tuple(cast(item) for item in items if item)
    if isinstance(value, (list, tuple, np.ndarray)):
        return tuple(cast(item) for item in value)
    return (cast(value), )
