# -*- coding: utf-8 -*-
"""
    nonlocal_mc.core.grid
    ~~~~~~~~~~~~~~~~~~~~~

    Uniform partitions of the unit cube Q = [0, 1]**d, cell averaging,
    piecewise constant (step function) projection, L^p errors, the L^p
    modulus of continuity and box counting.

    Cells are half open, Q_{n,i} = prod_k [(i_k - 1)/n, i_k/n), with the
    coordinate x_k = 1 assigned to the last cell so that the cells tile
    the closed cube. Multi indices are 1-based tuples and are linearized
    in row-major order (first index slowest).

    Scalar functions on Q (or on Q**2, which is just a cube of dimension
    2d) are callables taking an array of points of shape (m, dim) and
    returning m values. A function may also expose
    `box_average(lo, hi)` returning exact averages over the boxes
    [lo[k], hi[k]] and `box_deviation(lo, hi, values, p)` returning the
    exact averages of |phi - values[k]|**p (or None when there is no
    closed form for that p); when present they are used instead of
    quadrature.

    The discrete norm used throughout is (n**-d sum v_i**2)**(1/2), which
    coincides with the L2(Q) norm of the associated step function.

    :copyright: 2026 by The nonlocal-mc Authors
    :license: BSD, see LICENSE for more details.
"""

import itertools
from collections import namedtuple
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DomainError
from .helpers import loglog_slope
from .log import get_logger
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_boxes

_LOG = get_logger('nonlocal_mc.grid')

#: 1-based multi index (i_1, ..., i_d)
MultiIndex = Tuple[int, ...]

#: Number of boxes handled at once by the memory hungry vectorized paths.
CHUNK = 8192


def _as_points(x, dim):
    points = np.asarray(x, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, dim) if dim > 1 else points.reshape(-1, 1)
    return points


@dataclass(frozen=True)
class GridPartition:
    """Partition of [0, 1]**d in n**d congruent cells.

    Parameters
    ----------
    n : int
        cells per axis.
    d : int
        spatial dimension.
    """

    n: int
    d: int = 1

    def __post_init__(self):
        for name in ('n', 'd'):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DomainError('{} must be a positive integer, not {}'.format(name, value))

    @property
    def h(self):
        """Cell width 1/n."""
        return 1. / self.n

    @property
    def size(self):
        """Number of cells n**d."""
        return self.n ** self.d

    @property
    def shape(self):
        return (self.n, ) * self.d

    def check_index(self, index):
        index = tuple(int(i) for i in np.atleast_1d(index))
        if len(index) != self.d:
            raise DomainError('A multi index in dimension {} needs {} components, got {}'.format(self.d, self.d, index))
        for i in index:
            if not 1 <= i <= self.n:
                raise DomainError('Multi index component {} not in [1, {}]'.format(i, self.n))
        return index

    def linear_index(self, index):
        """Rank in [0, n**d) of a 1-based multi index.

        >>> GridPartition(4, 2).linear_index((2, 3))
        6
        """
        index = self.check_index(index)
        return int(np.ravel_multi_index(tuple(i - 1 for i in index), self.shape))

    def multi_index(self, rank):
        """1-based multi index of a rank.

        >>> GridPartition(4, 2).multi_index(6)
        (2, 3)
        """
        rank = int(rank)
        if not 0 <= rank < self.size:
            raise DomainError('Rank {} not in [0, {})'.format(rank, self.size))
        return tuple(int(i) + 1 for i in np.unravel_index(rank, self.shape))

    def _grid_indices(self, ranks=None):
        if ranks is None:
            ranks = np.arange(self.size)
        return np.stack(np.unravel_index(np.asarray(ranks), self.shape), axis=-1).astype(float)

    def cell_bounds(self, ranks=None):
        """Lower and upper corners of the cells, arrays of shape (m, d)."""
        idx = self._grid_indices(ranks)
        return idx / self.n, (idx + 1.) / self.n

    def midpoints(self, ranks=None):
        """Cell midpoints, array of shape (m, d)."""
        return (self._grid_indices(ranks) + .5) / self.n

    def locate(self, points):
        """Ranks of the cells containing each point (no domain check)."""
        points = _as_points(points, self.d)
        idx = np.clip(np.floor(points * self.n).astype(np.int64), 0, self.n - 1)
        return np.ravel_multi_index(tuple(idx.T), self.shape)

    def cell_of(self, x):
        """Multi index of the cell containing x.

        Parameters
        ----------
        x : point in [0, 1]**d

        Returns
        -------
        MultiIndex

        Raises
        ------
        DomainError
            if a coordinate lies outside [0, 1].

        Examples
        --------
        >>> GridPartition(10, 2).cell_of((0.3, 0.74))
        (4, 8)
        >>> GridPartition(4).cell_of(1.0)
        (4,)
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.size != self.d:
            raise DomainError('Point {} does not have {} coordinates'.format(x, self.d))
        if np.any(x < 0) or np.any(x > 1) or not np.all(np.isfinite(x)):
            raise DomainError('Point {} lies outside [0, 1]**{}'.format(tuple(x), self.d))
        idx = np.minimum(np.floor(x * self.n).astype(int), self.n - 1)
        return tuple(int(i) + 1 for i in idx)


class _IndexLabels:
    """Lazy sequence of multi indices, used in error messages."""

    def __init__(self, partition):
        self.partition = partition

    def __getitem__(self, rank):
        return self.partition.multi_index(rank)


class StepFunction:
    """Piecewise constant function on a GridPartition.

    Parameters
    ----------
    partition : GridPartition
    values : array_like
        n**d cell values indexed by the linearized multi index.
    """

    def __init__(self, partition, values):
        values = np.array(values, dtype=float).ravel()
        if values.size != partition.size:
            raise DomainError('A step function on {} cells needs {} values, got {}'.format(
                partition.size, partition.size, values.size))
        values.flags.writeable = False
        self.partition = partition
        self.values = values

    @property
    def domain_dim(self):
        return self.partition.d

    def __repr__(self):
        return '<StepFunction(n={}, d={})>'.format(self.partition.n, self.partition.d)

    def __call__(self, points):
        return self.values[self.partition.locate(points)]

    def _overlap_weights(self, lo, hi):
        """Yield (slice, weights) with the fraction of each box lying in each cell."""
        n = self.partition.n
        edges = np.arange(n + 1) / n
        for start in range(0, len(lo), CHUNK):
            blo, bhi = lo[start:start + CHUNK], hi[start:start + CHUNK]
            weights = None
            for k in range(self.partition.d):
                a, b = blo[:, k:k + 1], bhi[:, k:k + 1]
                overlap = np.minimum(b, edges[None, 1:]) - np.maximum(a, edges[None, :-1])
                fraction = np.clip(overlap, 0., None) / (b - a)
                if weights is None:
                    weights = fraction
                else:
                    weights = (weights[:, :, None] * fraction[:, None, :]).reshape(len(blo), -1)
            yield slice(start, start + CHUNK), weights

    def box_average(self, lo, hi):
        """Exact averages over boxes (overlap weighted cell values)."""
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        out = np.empty(len(lo))
        for chunk, weights in self._overlap_weights(lo, hi):
            out[chunk] = weights @ self.values
        return out

    def box_deviation(self, lo, hi, values, p=2):
        """Exact averages of |self - values[k]|**p over the boxes [lo[k], hi[k]]."""
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        values = np.asarray(values, dtype=float)
        out = np.empty(len(lo))
        for chunk, weights in self._overlap_weights(lo, hi):
            spread = np.abs(self.values[None, :] - values[chunk, None]) ** p
            out[chunk] = np.sum(weights * spread, axis=1)
        return out

    def lp_norm(self, p=2):
        """L^p(Q) norm, equal to the discrete (n**-d sum |v|**p)**(1/p)."""
        return float(np.mean(np.abs(self.values) ** p) ** (1. / p))

    def l2_norm(self):
        return self.lp_norm(2)

    def inner(self, other):
        """L2(Q) inner product with a step function on the same partition."""
        if other.partition != self.partition:
            raise DomainError('Step functions live on different partitions')
        return float(np.mean(self.values * other.values))

    def refine(self, factor):
        """Same function represented on a partition factor times finer."""
        factor = int(factor)
        fine = GridPartition(self.partition.n * factor, self.partition.d)
        values = self.values.reshape(self.partition.shape)
        for axis in range(self.partition.d):
            values = np.repeat(values, factor, axis=axis)
        return StepFunction(fine, values.ravel())


# ====================================
# Functions with closed form averages
# ====================================

def deviation_from_moments(mean, square_mean, values, p):
    """Averages of |phi - v|**2 from the averages of phi and phi**2, None for p != 2."""
    if p != 2:
        return None
    return np.clip(square_mean - 2. * values * mean + values ** 2, 0., None)


class Constant:
    """Constant function on [0, 1]**dim."""

    def __init__(self, value, dim=1):
        self.value = float(value)
        self.domain_dim = dim

    def __call__(self, points):
        return np.full(len(_as_points(points, self.domain_dim)), self.value)

    def box_average(self, lo, hi):
        return np.full(len(np.atleast_2d(lo)), self.value)

    def box_deviation(self, lo, hi, values, p=2):
        return np.abs(self.value - np.asarray(values, dtype=float)) ** p


class Polynomial:
    """Sum of monomials c * prod_k x_k**p_k.

    Parameters
    ----------
    terms : iterable of (coefficient, powers)
        powers is a tuple of non negative integers, one per axis.

    Examples
    --------
    >>> square = Polynomial([(1., (2, ))])
    >>> float(square.box_average([[0.5]], [[1.]])[0])
    0.5833333333333334
    """

    def __init__(self, terms):
        self.terms = [(float(c), tuple(int(p) for p in powers)) for c, powers in terms]
        dims = {len(powers) for _, powers in self.terms}
        if len(dims) != 1:
            raise DomainError('All monomials must have the same number of variables')
        self.domain_dim = dims.pop()

    def __call__(self, points):
        points = _as_points(points, self.domain_dim)
        out = np.zeros(len(points))
        for c, powers in self.terms:
            out += c * np.prod(points ** np.array(powers, dtype=float), axis=1)
        return out

    def box_average(self, lo, hi):
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        out = np.zeros(len(lo))
        for c, powers in self.terms:
            term = np.full(len(lo), c)
            for k, p in enumerate(powers):
                a, b = lo[:, k], hi[:, k]
                term *= (b ** (p + 1) - a ** (p + 1)) / ((p + 1) * (b - a))
            out += term
        return out

    def box_deviation(self, lo, hi, values, p=2):
        square = Polynomial([(c1 * c2, tuple(a + b for a, b in zip(p1, p2)))
                             for c1, p1 in self.terms for c2, p2 in self.terms])
        return deviation_from_moments(self.box_average(lo, hi), square.box_average(lo, hi),
                             np.asarray(values, dtype=float), p)


class BoxIndicator:
    """Indicator of the closed box prod_k [a_k, b_k].

    Parameters
    ----------
    lower, upper : sequence of floats, one per axis.
    """

    def __init__(self, lower, upper):
        self.lower = np.atleast_1d(np.asarray(lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=float))
        self.domain_dim = self.lower.size

    def __call__(self, points):
        points = _as_points(points, self.domain_dim)
        inside = (points >= self.lower) & (points <= self.upper)
        return inside.all(axis=1).astype(float)

    def box_average(self, lo, hi):
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        overlap = np.minimum(hi, self.upper) - np.maximum(lo, self.lower)
        return np.prod(np.clip(overlap, 0., None) / (hi - lo), axis=1)

    def box_deviation(self, lo, hi, values, p=2):
        inside = self.box_average(lo, hi)
        values = np.asarray(values, dtype=float)
        return inside * np.abs(1. - values) ** p + (1. - inside) * np.abs(values) ** p


class PowerCusp:
    """|x - center|**exponent on [0, 1], Hoelder continuous with the given exponent.

    Parameters
    ----------
    exponent : float > 0
    center : float

    Examples
    --------
    >>> cusp = PowerCusp(.5, center=0.)
    >>> float(cusp.box_average([[0.]], [[1.]])[0])
    0.6666666666666666
    """

    domain_dim = 1

    def __init__(self, exponent, center=.5):
        if not exponent > 0:
            raise DomainError('PowerCusp needs a positive exponent, not {}'.format(exponent))
        self.exponent = float(exponent)
        self.center = float(center)

    def __call__(self, points):
        return np.abs(_as_points(points, 1)[:, 0] - self.center) ** self.exponent

    def _average(self, lo, hi, exponent):
        a = np.atleast_2d(np.asarray(lo, dtype=float))[:, 0] - self.center
        b = np.atleast_2d(np.asarray(hi, dtype=float))[:, 0] - self.center

        def antiderivative(s):
            return np.sign(s) * np.abs(s) ** (exponent + 1.) / (exponent + 1.)

        return (antiderivative(b) - antiderivative(a)) / (b - a)

    def box_average(self, lo, hi):
        return self._average(lo, hi, self.exponent)

    def box_deviation(self, lo, hi, values, p=2):
        return deviation_from_moments(self._average(lo, hi, self.exponent), self._average(lo, hi, 2. * self.exponent),
                             np.asarray(values, dtype=float), p)


# ====================================
# Operations
# ====================================

def _domain_dim(phi, d):
    if d is not None:
        return int(d)
    return int(getattr(phi, 'domain_dim', 1))


def _cell_integrals(func, partition, quad, ranks=None):
    lo, hi = partition.cell_bounds(ranks)
    integrals, unconverged = integrate_boxes(func, lo, hi, quad, labels=_IndexLabels(partition))
    return integrals, lo, hi


def cell_averages(phi, partition, quad=DEFAULT_SPEC):
    """Averages n**d * int_{Q_{n,i}} phi over every cell, in rank order."""
    lo, hi = partition.cell_bounds()
    box_average = getattr(phi, 'box_average', None)
    if box_average is not None:
        return np.asarray(box_average(lo, hi), dtype=float)
    integrals, _, _ = _cell_integrals(lambda x, owners: phi(x), partition, quad)
    return integrals * partition.n ** partition.d


def cell_average(phi, index, partition, quad=DEFAULT_SPEC):
    """Average of phi over a single cell.

    Parameters
    ----------
    phi : callable
    index : MultiIndex
    partition : GridPartition
    quad : QuadratureSpec

    Returns
    -------
    float

    Raises
    ------
    ToleranceNotMetError
        if quad.on_unconverged == 'raise' and the cell does not converge.

    Examples
    --------
    >>> round(cell_average(lambda x: x[:, 0], (1, ), GridPartition(2)), 12)
    0.25
    """
    rank = partition.linear_index(index)
    lo, hi = partition.cell_bounds([rank])
    box_average = getattr(phi, 'box_average', None)
    if box_average is not None:
        return float(np.asarray(box_average(lo, hi))[0])
    integrals, _ = integrate_boxes(lambda x, owners: phi(x), lo, hi, quad, labels=[tuple(index)])
    return float(integrals[0] * partition.n ** partition.d)


def project_step(phi, n, d=None, quad=DEFAULT_SPEC):
    """L2 projection onto the step functions of the partition with n cells per axis.

    Parameters
    ----------
    phi : callable
        function on Q (or on Q**2, then d must be 2 * the spatial dimension).
    n : int
    d : int, optional
        dimension of the domain of phi. Taken from phi.domain_dim if not given.
    quad : QuadratureSpec

    Returns
    -------
    StepFunction

    Examples
    --------
    >>> project_step(lambda x: x[:, 0], 2).values.round(12).tolist()
    [0.25, 0.75]
    """
    partition = GridPartition(n, _domain_dim(phi, d))
    if isinstance(phi, StepFunction) and phi.partition == partition:
        return StepFunction(partition, phi.values)
    return StepFunction(partition, cell_averages(phi, partition, quad))


def lp_error(phi, phi_n, p=2, quad=DEFAULT_SPEC):
    """||phi - phi_n||_{L^p(Q)} by per cell quadrature of |phi - value|**p.

    When phi exposes box_deviation and it has a closed form for p, the cell
    integrals are exact and no quadrature is done.

    Parameters
    ----------
    phi : callable
    phi_n : StepFunction
    p : float >= 1
    quad : QuadratureSpec

    Returns
    -------
    float
    """
    if p < 1:
        raise DomainError('p must be >= 1, not {}'.format(p))
    values = phi_n.values
    box_deviation = getattr(phi, 'box_deviation', None)
    if box_deviation is not None:
        lo, hi = phi_n.partition.cell_bounds()
        deviations = box_deviation(lo, hi, values, p)
        if deviations is not None:
            return float(np.mean(deviations) ** (1. / p))
    integrals, _, _ =_cell_integrals(lambda x, owners: np.abs(phi(x) - values[owners]) ** p,
                                      phi_n.partition, quad)
    return float(np.sum(integrals) ** (1. / p))


@dataclass(frozen=True)
class ShiftGrid:
    """How the supremum over shifts in lp_modulus is sampled.

    Parameters
    ----------
    shifts_per_axis : int
        uniform grid of shift values per axis in [-delta, delta]
        (the corner (delta, ..., delta) is always added).
    base_cells : int, optional
        initial subdivision per axis of the integration region before the
        adaptive refinement; None picks 64 in d=1, 8 in d=2 and 4 beyond.
    """

    shifts_per_axis: int = 32
    base_cells: int = None

    def cells_per_axis(self, d):
        if self.base_cells:
            return int(self.base_cells)
        return {1: 64, 2: 8}.get(d, 4)

    def shifts(self, delta, d):
        axis = np.linspace(-delta, delta, self.shifts_per_axis)
        grid = np.array(list(itertools.product(axis, repeat=d)))
        return np.vstack([grid, np.full((1, d), delta)])


def _region_boxes(lower, upper, cells):
    d = len(lower)
    edges = [np.linspace(lower[k], upper[k], cells + 1) for k in range(d)]
    idx = np.array(list(itertools.product(range(cells), repeat=d)))
    lo = np.stack([edges[k][idx[:, k]] for k in range(d)], axis=1)
    hi = np.stack([edges[k][idx[:, k] + 1] for k in range(d)], axis=1)
    return lo, hi


def lp_modulus(phi, delta, p=2, sampling=ShiftGrid(), d=None, quad=DEFAULT_SPEC):
    """Lower estimate of the L^p modulus of continuity.

    omega_p(phi, delta) = sup_{|xi|_inf <= delta} ||phi(. + xi) - phi||_{L^p(Q_xi)}
    with Q_xi = {x in Q: x + xi in Q}. The supremum is replaced by a
    maximum over the shifts given by sampling.

    Parameters
    ----------
    phi : callable
    delta : float in (0, 1)
    p : float >= 1
    sampling : ShiftGrid
    d : int, optional
    quad : QuadratureSpec

    Returns
    -------
    float
    """
    if not 0 < delta < 1:
        raise DomainError('delta must lie in (0, 1), not {} (Q_xi would be empty)'.format(delta))
    if p < 1:
        raise DomainError('p must be >= 1, not {}'.format(p))
    d = _domain_dim(phi, d)
    cells = sampling.cells_per_axis(d)

    best = 0.
    for xi in sampling.shifts(delta, d):
        if not np.any(xi):
            continue
        lower = np.maximum(0., -xi)
        upper = np.minimum(1., 1. - xi)
        lo, hi = _region_boxes(lower, upper, cells)

        def integrand(x, owners, xi=xi):
            shifted = np.clip(x + xi, 0., 1.)
            return np.abs(phi(shifted) - phi(x)) ** p

        integrals, _ = integrate_boxes(integrand, lo, hi, quad)
        best = max(best, float(np.sum(integrals)) ** (1. / p))
    return best


BoxCount = namedtuple('BoxCount', 'levels counts beta degenerate')


def box_counting(indicator, levels, d=None, subgrid=4, inset=1e-9):
    """Count boundary straddling cells and fit the box counting dimension.

    Each cell is sampled on a subgrid**d grid of sub-cell midpoints plus its
    2**d corners moved inwards by inset * h (so that a boundary lying on
    cell faces is not counted). A cell straddles the boundary if both
    indicator values occur among its samples. Sub-sampling can only
    undercount.

    Parameters
    ----------
    indicator : callable
        {0, 1} valued function on Q.
    levels : sequence of int
        increasing cells-per-axis values.
    d : int, optional
    subgrid : int
    inset : float

    Returns
    -------
    BoxCount
        levels, counts, beta and a flag set when fewer than two levels
        have a positive count (beta is then reported as 0).
    """
    levels = tuple(int(n) for n in levels)
    if len(levels) < 2:
        raise DomainError('box counting needs at least 2 levels, got {}'.format(len(levels)))
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise DomainError('levels must be increasing: {}'.format(levels))
    d = _domain_dim(indicator, d)

    sub = (np.arange(subgrid) + .5) / subgrid
    offsets = np.vstack([np.array(list(itertools.product(sub, repeat=d))),
                         np.array(list(itertools.product((inset, 1. - inset), repeat=d)))])

    counts = []
    for n in levels:
        partition = GridPartition(n, d)
        count = 0
        for start in range(0, partition.size, CHUNK):
            lo, _ = partition.cell_bounds(np.arange(start, min(start + CHUNK, partition.size)))
            points = lo[:, None, :] + offsets[None, :, :] * partition.h
            values = np.asarray(indicator(points.reshape(-1, d))).reshape(len(lo), -1) != 0
            count += int(np.count_nonzero(values.any(axis=1) & ~values.all(axis=1)))
        counts.append(count)
        _LOG.debug('box counting: n={} straddling cells={}', n, count)

    counts = tuple(counts)
    positive = [(n, c) for n, c in zip(levels, counts) if c > 0]
    if len(positive) < 2:
        return BoxCount(levels, counts, 0., True)
    beta = loglog_slope([n for n, _ in positive], [c for _, c in positive])
    return BoxCount(levels, counts, beta, False)
