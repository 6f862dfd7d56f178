# -*- coding: utf-8 -*-
"""
    nonlocal_mc.core.quadrature
    ~~~~~~~~~~~~~~~~~~~~~~~~~~~

    Vectorized adaptive quadrature over many axis aligned boxes at once.

    Each box is integrated with a tensor product Gauss-Legendre rule and
    compared with the sum of the same rule over its 2**dim dyadic children
    and with a tensor Gauss-Lobatto rule on the box itself. The Lobatto
    nodes include the faces of the box, so a jump close to a face, where
    the nested Legendre nodes never look, still shows up as a mismatch.
    Children that have not converged are subdivided again until the
    tolerance is met or the maximum depth is reached. All active boxes of
    all owners are processed together as numpy arrays.

    With order = 1 the Legendre rule is the tensor midpoint rule and the
    Lobatto rule is the tensor trapezoid rule.

    :copyright: 2026 by The nonlocal-mc Authors
    :license: BSD, see LICENSE for more details.
"""

import functools
import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from . import config
from .errors import ToleranceNotMetError
from .log import get_logger

_LOG = get_logger('nonlocal_mc.quadrature')


class QuadratureWarning(Warning):
    """ """
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Parameters of the adaptive quadrature.

    Parameters
    ----------
    rtol : float
        relative tolerance between a box estimate and the sum over its children.
    atol : float
        absolute tolerance expressed per unit volume, i.e. in units of a
        cell average.
    max_depth : int
        maximum number of dyadic subdivisions.
    order : int
        Gauss-Legendre points per axis (1 is the midpoint rule).
        The Lobatto check uses order + 1 points per axis.
    on_unconverged : str
        what to do when max_depth is reached without convergence:
        - 'raise' to raise ToleranceNotMetError.
        - 'warn' to log a warning and return the last estimate.
        - 'ignore' to silently (debug log) return the last estimate.
    """

    rtol: float = config.QUAD_RTOL
    atol: float = config.QUAD_ATOL
    max_depth: int = config.QUAD_MAX_DEPTH
    order: int = config.QUAD_ORDER
    on_unconverged: str = config.QUAD_ON_UNCONVERGED

    def __post_init__(self):
        if self.on_unconverged not in ('ignore', 'warn', 'raise'):
            raise ValueError("{} is not a valid value for 'on_unconverged'. "
                             "It should be either 'ignore', 'warn' or 'raise'".format(self.on_unconverged))
        if self.rtol < 0 or self.atol < 0:
            raise ValueError('Quadrature tolerances must be non negative')
        if self.max_depth < 1 or self.order < 1:
            raise ValueError('max_depth and order must be positive integers')


DEFAULT_SPEC = QuadratureSpec()


def _tensor(nodes, weights, dim):
    """Map a rule on [-1, 1] to the tensor product rule on [0, 1]**dim."""
    nodes = (np.asarray(nodes) + 1.) / 2.
    weights = np.asarray(weights) / 2.
    points = np.array(list(itertools.product(nodes, repeat=dim)))
    w = np.array([np.prod(c) for c in itertools.product(weights, repeat=dim)])
    return points, w


@functools.lru_cache(maxsize=32)
def _unit_rule(order, dim):
    """Tensor product Gauss-Legendre nodes and weights on [0, 1]**dim."""
    return _tensor(*np.polynomial.legendre.leggauss(order), dim)


@functools.lru_cache(maxsize=32)
def _lobatto_rule(points, dim):
    """Tensor product Gauss-Lobatto nodes and weights on [0, 1]**dim.

    The 1d rule has the end points plus the roots of P'_{points - 1}.
    """
    legendre = np.polynomial.legendre.Legendre.basis(points - 1)
    inner = np.sort(np.real(legendre.deriv().roots())) if points > 2 else np.zeros(0)
    nodes = np.concatenate(([-1.], inner, [1.]))
    weights = 2. / (points * (points - 1) * legendre(nodes) ** 2)
    return _tensor(nodes, weights, dim)


@functools.lru_cache(maxsize=32)
def _corners(dim):
    return np.array(list(itertools.product((0., 1.), repeat=dim)))


def _estimate(func, lo, hi, owners, rule):
    """Apply the tensor rule (points, weights) to each box. Returns (estimates, volumes)."""
    dim = lo.shape[1]
    points, weights = rule
    width = hi - lo
    volume = np.prod(width, axis=1)
    nodes = lo[:, None, :] + width[:, None, :] * points[None, :, :]
    # face nodes sit one ulp inside the box so that a value defined on the
    # face never stands in for the interior
    nodes = np.clip(nodes, np.nextafter(lo, hi)[:, None, :], np.nextafter(hi, lo)[:, None, :])
    values = func(nodes.reshape(-1, dim), np.repeat(owners, len(weights)))
    values = np.asarray(values, dtype=float).reshape(len(lo), len(weights))
    return volume * (values @ weights), volume


def _split(lo, hi):
    dim = lo.shape[1]
    corners = _corners(dim)
    half = (hi - lo) / 2.
    child_lo = lo[:, None, :] + corners[None, :, :] * half[:, None, :]
    child_hi = child_lo + half[:, None, :]
    # the upper children share the exact parent upper bound
    child_hi = np.where(corners[None, :, :] == 1., hi[:, None, :], child_hi)
    return child_lo.reshape(-1, dim), child_hi.reshape(-1, dim)


def integrate_boxes(func, lo, hi, spec=DEFAULT_SPEC, labels=None):
    """Integrate over each box [lo[k], hi[k]].

    Parameters
    ----------
    func : callable
        func(points, owners) -> values, where points has shape (m, dim)
        and owners (m,) holds the index of the box each point belongs to.
    lo, hi : array_like
        lower and upper corners, shape (boxes, dim).
    spec : QuadratureSpec
    labels : sequence, optional
        a label per box used in error messages (e.g. a matrix entry).

    Returns
    -------
    integrals : ndarray (boxes, )
    unconverged : ndarray of bool (boxes, )
    """
    lo = np.atleast_2d(np.asarray(lo, dtype=float))
    hi = np.atleast_2d(np.asarray(hi, dtype=float))
    count, dim = lo.shape
    owners = np.arange(count)
    totals = np.zeros(count)
    unconverged = np.zeros(count, dtype=bool)
    if count == 0:
        return totals, unconverged

    rule = _unit_rule(spec.order, dim)
    check = _lobatto_rule(spec.order + 1, dim)
    coarse, _ = _estimate(func, lo, hi, owners, rule)
    fan_out = 2 ** dim

    for depth in range(1, spec.max_depth + 1):
        child_lo, child_hi = _split(lo, hi)
        child_owners = np.repeat(owners, fan_out)
        child_est, child_vol = _estimate(func, child_lo, child_hi, child_owners, rule)
        child_est = child_est.reshape(-1, fan_out)
        fine = child_est.sum(axis=1)
        volume = child_vol.reshape(-1, fan_out).sum(axis=1)
        lobatto, _ = _estimate(func, lo, hi, owners, check)

        error = np.maximum(np.abs(fine - coarse), np.abs(fine - lobatto))
        tolerance = spec.rtol * np.abs(fine) + spec.atol * volume
        done = error <= tolerance
        if depth == spec.max_depth:
            unconverged[owners[~done]] = True
            done[:] = True

        np.add.at(totals, owners[done], fine[done])

        keep = ~done
        if not keep.any():
            break
        keep_children = np.repeat(keep, fan_out)
        lo, hi = child_lo[keep_children], child_hi[keep_children]
        owners = child_owners[keep_children]
        coarse = child_est[keep].ravel()

    if unconverged.any():
        failed = np.flatnonzero(unconverged)
        first = failed[0] if labels is None else labels[failed[0]]
        msg = '{} of {} boxes did not converge within depth {} (first: {})'.format(
            failed.size, count, spec.max_depth, first)
        if spec.on_unconverged == 'raise':
            raise ToleranceNotMetError(msg, estimate=totals, index=first)
        elif spec.on_unconverged == 'warn':
            warnings.warn(msg, QuadratureWarning)
            _LOG.warning(msg)
        else:
            _LOG.debug(msg)

    return totals, unconverged


def integrate_box(func, lo, hi, spec=DEFAULT_SPEC):
    """Integrate a plain function func(points) -> values over a single box."""
    totals, _ = integrate_boxes(lambda x, owners: func(x), [lo], [hi], spec)
    return float(totals[0])
