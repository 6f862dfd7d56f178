# -*- coding: utf-8 -*-
"""
    nonlocal_mc.core.graphon
    ~~~~~~~~~~~~~~~~~~~~~~~~

    Kernel (graphon) library: definitions, sign splitting, truncation,
    the matrix of cell averages and the error exponents of singular
    kernels.

    A Graphon wraps an evaluator W(x, y) taking two arrays of points of
    shape (m, d). As a scalar function on Q**2 it can also be called with
    a single array of shape (m, 2d), so that everything in `grid` (cell
    averages, projections, L^p errors) applies to it directly.

    :copyright: 2026 by The nonlocal-mc Authors
    :license: BSD, see LICENSE for more details.
"""

import ast
import enum
import functools
import math
import operator
import threading
from collections import namedtuple
from concurrent import futures
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import config
from .errors import DomainError, NotSupportedError, PreconditionError
from .grid import GridPartition, StepFunction, deviation_from_moments, lp_error
from .log import get_logger
from .quadrature import DEFAULT_SPEC, integrate_boxes

_LOG = get_logger('nonlocal_mc.graphon')

#: Number of rows of the cell matrix computed by each task.
ROW_BLOCK = 32


class Kind(enum.Enum):

    bounded = 'bounded'
    singular = 'singular'
    band = 'band'


def _split_points(z, d):
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z.reshape(-1, 2 * d)
    return z[:, :d], z[:, d:]


class Graphon:
    """A kernel W: Q x Q -> R.

    Parameters
    ----------
    evaluator : callable
        evaluator(x, y) -> values, x and y arrays of shape (m, d).
    kind : Kind
    d : int
        spatial dimension.
    sup_bound : float, optional
        declared bound of |W| (bounded kinds).
    exponent : float, optional
        lambda of a singular kernel |x - y|**-lambda.
    radius : float, optional
        r of a band kernel.
    periodic : bool
        band kernels measure distances on the torus.
    row_bound : float, optional
        W_1, the essential supremum of the row integrals.
    nonnegative : bool or None
        None if unknown.
    profile : callable, optional
        g such that W(x, y) = g(|x - y|) (radial kernels).
    box_average : callable, optional
        exact averages over boxes of Q**2.
    box_deviation : callable, optional
        exact averages of |W - v|**p over boxes of Q**2 (see grid).
    name : str
    """

    def __init__(self, evaluator, kind=Kind.bounded, d=1, sup_bound=None, exponent=None,
                 radius=None, periodic=True, row_bound=None, nonnegative=None,
                 profile=None, box_average=None, box_deviation=None, name='W'):
        if int(d) != d or d < 1:
            raise DomainError('d must be a positive integer, not {}'.format(d))
        kind = Kind(kind)
        if kind is Kind.singular:
            if exponent is None or not 0 < exponent < d / 2.:
                raise DomainError('A singular kernel needs 0 < lambda < d/2 = {}, got {}'.format(d / 2., exponent))
        if kind is Kind.band and (radius is None or radius < 0):
            raise DomainError('A band kernel needs a non negative radius, got {}'.format(radius))
        if sup_bound is not None and sup_bound < 0:
            raise DomainError('sup_bound must be non negative')

        self.evaluator = evaluator
        self.kind = kind
        self.d = int(d)
        self.sup_bound = sup_bound
        self.exponent = exponent
        self.radius = radius
        self.periodic = periodic
        self.row_bound = row_bound
        self.nonnegative = nonnegative
        self.profile = profile
        self.truncated_at = None
        self.name = name
        self._box_average = box_average
        self._box_deviation = box_deviation
        #: cap -> (box_average, box_deviation) of min(W, cap), when known
        self.capped_forms = None

    def __repr__(self):
        return '<Graphon {} ({}, d={})>'.format(self.name, self.kind.value, self.d)

    @property
    def domain_dim(self):
        return 2 * self.d

    @property
    def box_average(self):
        if self._box_average is None:
            raise AttributeError('{} has no closed form box average'.format(self))
        return self._box_average

    @property
    def box_deviation(self):
        if self._box_deviation is None:
            raise AttributeError('{} has no closed form box deviation'.format(self))
        return self._box_deviation

    def __call__(self, z):
        x, y = _split_points(z, self.d)
        return np.asarray(self.evaluator(x, y), dtype=float)

    def evaluate(self, x, y):
        """Evaluate W at pairs of points, x and y arrays of shape (m, d) (or (m, ) when d = 1)."""
        x = np.asarray(x, dtype=float).reshape(-1, self.d)
        y = np.asarray(y, dtype=float).reshape(-1, self.d)
        return np.asarray(self.evaluator(x, y), dtype=float)

    def is_case_one(self):
        """True for non negative kernels declared bounded by 1: their cell averages
        are used as edge probabilities without truncation."""
        return (self.kind in (Kind.bounded, Kind.band) and self.nonnegative is True
                and self.sup_bound is not None and self.sup_bound <= 1.)

    def row_integrals(self, xs=None, samples=10000, seed=0):
        """Monte Carlo estimates of int_Q W(x, y) dy.

        Parameters
        ----------
        xs : array_like, optional
            rows to check, shape (m, d). Defaults to 64 random rows.
        samples : int
            uniform y samples per row.
        seed : int

        Returns
        -------
        (means, standard errors) : ndarrays of shape (m, )
        """
        rng = np.random.Generator(np.random.Philox(key=int(seed)))
        if xs is None:
            xs = rng.random((64, self.d))
        xs = np.asarray(xs, dtype=float).reshape(-1, self.d)
        means = np.empty(len(xs))
        errors = np.empty(len(xs))
        for k, x in enumerate(xs):
            ys = rng.random((samples, self.d))
            values = self.evaluator(np.broadcast_to(x, ys.shape), ys)
            means[k] = np.mean(values)
            errors[k] = np.std(values, ddof=1) / math.sqrt(samples)
        return means, errors

    def validate(self, samples=10000, seed=0, sigmas=None):
        """Check the declared properties on random samples.

        Parameters
        ----------
        samples : int
        seed : int
        sigmas : float, optional
            standard errors a sampled row integral may exceed W_1 by
            (default: config.ROW_CHECK_SIGMAS).

        Raises
        ------
        DomainError
            naming the first violated property.
        """
        rng = np.random.Generator(np.random.Philox(key=int(seed)))
        x = rng.random((samples, self.d))
        y = rng.random((samples, self.d))
        values = np.asarray(self.evaluator(x, y), dtype=float)

        if self.sup_bound is not None and np.any(np.abs(values) > self.sup_bound * (1 + 1e-12)):
            raise DomainError('{}: |W| exceeds the declared bound {}'.format(self, self.sup_bound))
        if self.kind is Kind.band and not np.all((values == 0.) | (values == 1.)):
            raise DomainError('{}: band kernels take values in {{0, 1}}'.format(self))
        if self.nonnegative and np.any(values < 0):
            raise DomainError('{}: negative values in a kernel declared non negative'.format(self))
        if self.row_bound is not None:
            means, errors = self.row_integrals(samples=samples, seed=seed)
            sigmas = config.ROW_CHECK_SIGMAS if sigmas is None else float(sigmas)
            bad = means > self.row_bound + sigmas * errors
            if np.any(bad):
                raise DomainError('{}: row integral {} exceeds W_1 = {}'.format(
                    self, float(means[bad][0]), self.row_bound))
        _LOG.debug('{} validated on {} samples', self, samples)


# ====================================
# Factories
# ====================================

def constant(value=1., d=1):
    """W(x, y) = value."""
    value = float(value)

    def evaluator(x, y):
        return np.full(len(x), value)

    def box_average(lo, hi):
        return np.full(len(np.atleast_2d(lo)), value)

    def box_deviation(lo, hi, values, p=2):
        return np.abs(value - np.asarray(values, dtype=float)) ** p

    return Graphon(evaluator, Kind.bounded, d, sup_bound=abs(value), row_bound=abs(value),
                   nonnegative=value >= 0, box_average=box_average, box_deviation=box_deviation,
                   name='constant({})'.format(value))


def _band_antiderivative(u, length):
    """int_0^u clip(v, 0, length) dv."""
    u = np.asarray(u, dtype=float)
    return np.where(u <= 0, 0.,
                    np.where(u <= length, u * u / 2., length * length / 2. + length * (u - length)))


def _band_fraction(a, b, c, e, radius, periodic):
    """Fraction of [a, b] x [c, e] where |y - x| <= radius (on the circle if periodic)."""
    length = e - c
    if periodic and radius >= .5:
        return np.ones_like(a)

    def below(s):
        # area of {(x, y) in the box: y - x <= s}
        return _band_antiderivative(b + s - c, length) - _band_antiderivative(a + s - c, length)

    area = np.zeros_like(a)
    for k in ((-1., 0., 1.) if periodic else (0., )):
        area += below(k + radius) - below(k - radius)
    return np.clip(area / ((b - a) * length), 0., 1.)


def band(radius, d=1, periodic=True):
    """Indicator kernel K(y - x) = 1{|y - x| <= r}.

    In dimension d > 1 the distance is the maximum over the axes, so the
    kernel factorizes and its box averages stay exact.

    Examples
    --------
    >>> W = band(0.2)
    >>> W.evaluate([0.1, 0.1, 0.05], [0.25, 0.35, 0.95]).tolist()
    [1.0, 0.0, 1.0]
    """
    radius = float(radius)

    def evaluator(x, y):
        delta = np.abs(y - x)
        if periodic:
            delta = np.minimum(delta, 1. - delta)
        return np.all(delta <= radius, axis=1).astype(float)

    def box_average(lo, hi):
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        out = np.ones(len(lo))
        for k in range(d):
            out *= _band_fraction(lo[:, k], hi[:, k], lo[:, d + k], hi[:, d + k], radius, periodic)
        return out

    def box_deviation(lo, hi, values, p=2):
        inside = box_average(lo, hi)
        values = np.asarray(values, dtype=float)
        return inside * np.abs(1. - values) ** p + (1. - inside) * np.abs(values) ** p

    row_bound = min(1., 2 * radius) ** d
    return Graphon(evaluator, Kind.band, d, sup_bound=1., radius=radius, periodic=periodic,
                   row_bound=row_bound, nonnegative=True, box_average=box_average,
                   box_deviation=box_deviation, name='band(r={})'.format(radius))


def _radial_antiderivative(s, exponent, cap):
    """G with G'' = min(|s|**-exponent, cap), G(0) = G'(0) = 0 (cap None for no cap)."""
    s = np.abs(s)
    scale = (1. - exponent) * (2. - exponent)
    if cap is None:
        return s ** (2. - exponent) / scale
    t = cap ** (-1. / exponent)
    outer = (cap * t * t / 2. + (cap * t - t ** (1. - exponent) / (1. - exponent)) * (s - t)
             + (s ** (2. - exponent) - t ** (2. - exponent)) / scale)
    return np.where(s <= t, cap * s * s / 2., outer)


def _radial_box_average(lo, hi, exponent, cap):
    """Averages of min(|x - y|**-exponent, cap) over boxes [a, b] x [c, e] of Q**2 (d = 1)."""
    lo = np.atleast_2d(np.asarray(lo, dtype=float))
    hi = np.atleast_2d(np.asarray(hi, dtype=float))
    a, b, c, e = lo[:, 0], hi[:, 0], lo[:, 1], hi[:, 1]

    def G(s):
        return _radial_antiderivative(s, exponent, cap)

    return (G(e - a) - G(e - b) - G(c - a) + G(c - b)) / ((b - a) * (e - c))


def _singular_closed_forms(exponent, cap=None):
    """box_average and box_deviation of min(|x - y|**-exponent, cap) in d = 1."""
    def box_average(lo, hi):
        return _radial_box_average(lo, hi, exponent, cap)

    def box_deviation(lo, hi, values, p=2):
        # the square is min(|x - y|**-2 exponent, cap**2), integrable since exponent < 1/2
        square = _radial_box_average(lo, hi, 2. * exponent, None if cap is None else cap * cap)
        return deviation_from_moments(box_average(lo, hi), square, np.asarray(values, dtype=float), p)

    return box_average, box_deviation


def singular(exponent, d=1):
    """W(x, y) = |x - y|**-lambda, infinite on the diagonal.

    In d = 1 the box averages and second moments are exact, also after
    truncation.

    Examples
    --------
    >>> singular(0.25).evaluate([0.], [0.0625]).tolist()
    [2.0]
    """
    exponent = float(exponent)

    def profile(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide='ignore'):
            return np.where(s > 0, s ** -exponent, np.inf)

    def evaluator(x, y):
        return profile(np.sqrt(np.sum((x - y) ** 2, axis=1)))

    row_bound = None
    if d == 1:
        # attained at x = 1/2
        row_bound = 2. * .5 ** (1. - exponent) / (1. - exponent)
    W = Graphon(evaluator, Kind.singular, d, exponent=exponent, row_bound=row_bound,
                nonnegative=True, profile=profile, name='singular(lambda={})'.format(exponent))
    if d == 1:
        W._box_average, W._box_deviation = _singular_closed_forms(exponent)
        W.capped_forms = functools.partial(_singular_closed_forms, exponent)
    return W


def piecewise_constant(step):
    """Graphon constant on the cells of a partition of Q**2.

    Parameters
    ----------
    step : StepFunction
        on a GridPartition of dimension 2d.
    """
    if step.partition.d % 2:
        raise DomainError('A kernel step function lives on a partition of even dimension')
    d = step.partition.d // 2
    sup = float(np.max(np.abs(step.values))) if step.values.size else 0.

    def evaluator(x, y):
        return step(np.hstack([x, y]))

    return Graphon(evaluator, Kind.bounded, d, sup_bound=sup, nonnegative=bool(np.all(step.values >= 0)),
                   box_average=step.box_average, box_deviation=step.box_deviation,
                   name='step(n={})'.format(step.partition.n))


# ====================================
# Kernel expressions
# ====================================

_BINARY = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}

_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}

_COMPARE = {ast.Lt: operator.lt, ast.LtE: operator.le, ast.Gt: operator.gt, ast.GtE: operator.ge}

_FUNCTIONS = {'abs': np.abs, 'sqrt': np.sqrt, 'exp': np.exp, 'log': np.log,
              'sin': np.sin, 'cos': np.cos, 'tan': np.tan,
              'min': np.minimum, 'max': np.maximum}

_CONSTANTS = {'pi': math.pi, 'e': math.e}


class _ExpressionCompiler:
    """Turns the ast of a kernel expression into a function of a name -> array mapping.

    Only numbers, the names x, y (x1, y1, ... for d > 1), dist = |x - y|,
    pi and e, the operators + - * / **, comparisons (< <= > >=, giving 0 or 1)
    and the functions in _FUNCTIONS are accepted.
    """

    def __init__(self, text, names):
        self.text = text
        self.names = names

    def fail(self, node, what):
        raise DomainError('Invalid kernel expression {!r}: {} (column {})'.format(
            self.text, what, getattr(node, 'col_offset', 0) + 1))

    def compile(self):
        try:
            tree = ast.parse(self.text.strip(), mode='eval')
        except SyntaxError as e:
            raise DomainError('Invalid kernel expression {!r}: {}'.format(self.text, e.msg))
        return self.visit(tree.body)

    def visit(self, node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            value = float(node.value)
            return lambda env: value
        if isinstance(node, ast.Name):
            if node.id in _CONSTANTS:
                value = _CONSTANTS[node.id]
                return lambda env: value
            if node.id in self.names:
                name = node.id
                return lambda env: env[name]
            self.fail(node, 'unknown name {!r}'.format(node.id))
        if isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
            op, left, right = _BINARY[type(node.op)], self.visit(node.left), self.visit(node.right)
            return lambda env: op(left(env), right(env))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            op, operand = _UNARY[type(node.op)], self.visit(node.operand)
            return lambda env: op(operand(env))
        if isinstance(node, ast.Compare) and len(node.ops) == 1 and type(node.ops[0]) in _COMPARE:
            op, left, right = _COMPARE[type(node.ops[0])], self.visit(node.left), self.visit(node.comparators[0])
            return lambda env: np.asarray(op(left(env), right(env)), dtype=float)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            func = _FUNCTIONS.get(node.func.id)
            if func is None:
                self.fail(node, 'unknown function {!r}'.format(node.func.id))
            args = [self.visit(arg) for arg in node.args]
            arity = 2 if node.func.id in ('min', 'max') else 1
            if len(args) != arity:
                self.fail(node, '{} takes {} argument(s)'.format(node.func.id, arity))
            return lambda env: func(*(arg(env) for arg in args))
        self.fail(node, 'unsupported construct {}'.format(type(node).__name__))


def from_expression(text, d=1, sup_bound=None, nonnegative=None):
    """Graphon defined by an arithmetic expression.

    Parameters
    ----------
    text : str
        e.g. 'cos(2 * pi * (x - y))' or 'dist <= 0.2'.
    d : int
    sup_bound : float, optional
        declared bound of |W|; kernels bounded by 1 skip truncation.
    nonnegative : bool, optional
        when not given and sup_bound is, it is read off 4096 random samples.

    Examples
    --------
    >>> W = from_expression('x - y')
    >>> W.evaluate([0.8], [0.2]).round(12).tolist()
    [0.6]
    """
    if d == 1:
        names = ('x', 'y', 'dist')
    else:
        names = tuple('x%d' % (k + 1) for k in range(d)) + tuple('y%d' % (k + 1) for k in range(d)) + ('dist', )
    body = _ExpressionCompiler(text, names).compile()

    def evaluator(x, y):
        env = {'dist': np.sqrt(np.sum((x - y) ** 2, axis=1))}
        if d == 1:
            env.update(x=x[:, 0], y=y[:, 0])
        else:
            for k in range(d):
                env['x%d' % (k + 1)] = x[:, k]
                env['y%d' % (k + 1)] = y[:, k]
        return np.broadcast_to(np.asarray(body(env), dtype=float), (len(x), )).copy()

    W = Graphon(evaluator, Kind.bounded, d, sup_bound=sup_bound, nonnegative=nonnegative, name=text)
    if nonnegative is None and sup_bound is not None:
        W.nonnegative = not _has_negative_values(W)
        _LOG.debug('{}: nonnegative={} from samples', W, W.nonnegative)
    return W


@dataclass(frozen=True)
class KernelSpec:
    """Hashable description of a kernel, as read from a [kernel] section.

    kind is one of 'constant', 'band', 'singular' or 'expression'
    ('custom-expression' is accepted as an alias).
    """

    kind: str = 'band'
    r: float = 0.2
    lam: float = 0.25
    value: float = 1.
    expression: str = None
    sup_bound: float = None
    periodic: bool = True
    nonnegative: bool = None

    def __post_init__(self):
        kind = self.kind.strip().lower()
        if kind == 'custom-expression':
            kind = 'expression'
        if kind not in ('constant', 'band', 'singular', 'expression'):
            raise DomainError("Unknown kernel kind {!r}. Use 'constant', 'band', 'singular' or 'expression'".format(self.kind))
        if kind == 'expression' and not self.expression:
            raise DomainError('An expression kernel needs an expression')
        object.__setattr__(self, 'kind', kind)

    def build(self, d=1):
        if self.kind == 'constant':
            return constant(self.value, d)
        elif self.kind == 'band':
            return band(self.r, d, self.periodic)
        elif self.kind == 'singular':
            return singular(self.lam, d)
        return from_expression(self.expression, d, self.sup_bound, self.nonnegative)


# ====================================
# Sign splitting and truncation
# ====================================

def split_sign(W):
    """Positive and negative parts, W = W+ - W-.

    Returns
    -------
    (Graphon, Graphon)
        both non negative.
    """
    def positive(x, y):
        return np.maximum(W.evaluator(x, y), 0.)

    def negative(x, y):
        return np.maximum(-np.asarray(W.evaluator(x, y)), 0.)

    common = dict(kind=W.kind if W.kind is not Kind.band else Kind.bounded, d=W.d,
                  sup_bound=W.sup_bound, exponent=W.exponent, nonnegative=True)
    if W.nonnegative:
        plus = Graphon(positive, radius=W.radius, periodic=W.periodic, row_bound=W.row_bound,
                       profile=W.profile, box_average=W._box_average, box_deviation=W._box_deviation,
                       name=W.name + '+', **common)
        plus.capped_forms = W.capped_forms
        zero = constant(0., W.d)
        zero.name = W.name + '-'
        return plus, zero
    return (Graphon(positive, name=W.name + '+', **common),
            Graphon(negative, name=W.name + '-', **common))


def _has_negative_values(W, samples=4096):
    rng = np.random.Generator(np.random.Philox(key=0))
    values = W.evaluator(rng.random((samples, W.d)), rng.random((samples, W.d)))
    return bool(np.any(np.asarray(values) < 0))


def _require_nonnegative(W, operation):
    if W.nonnegative is False or (W.nonnegative is None and _has_negative_values(W)):
        raise PreconditionError('{} requires a non negative kernel, {} takes negative values '
                                '(apply split_sign first)'.format(operation, W))


def truncate(W, alpha):
    """Kernel min(W, 1/alpha).

    Parameters
    ----------
    W : Graphon
        non negative.
    alpha : float in (0, 1]

    Returns
    -------
    Graphon
        of bounded kind with sup_bound 1/alpha.

    Raises
    ------
    PreconditionError
        if W takes negative values.
    """
    if not 0 < alpha <= 1:
        raise DomainError('alpha must lie in (0, 1], not {}'.format(alpha))
    _require_nonnegative(W, 'truncate')
    cap = 1. / alpha

    def evaluator(x, y):
        return np.minimum(W.evaluator(x, y), cap)

    profile = None
    if W.profile is not None:
        def profile(s):
            return np.minimum(W.profile(s), cap)

    sup = cap if W.sup_bound is None else min(cap, W.sup_bound)
    out = Graphon(evaluator, Kind.bounded, W.d, sup_bound=sup, row_bound=W.row_bound,
                  nonnegative=True, profile=profile, name='min({}, {})'.format(W.name, cap))
    if W.sup_bound is not None and W.sup_bound <= cap:
        out._box_average, out._box_deviation = W._box_average, W._box_deviation
    elif W.capped_forms is not None:
        out._box_average, out._box_deviation = W.capped_forms(cap)
    out.exponent = W.exponent
    out.truncated_at = cap
    return out


# ====================================
# Sparsity and cell matrices
# ====================================

@dataclass(frozen=True)
class SparsitySchedule:
    """alpha_n = n**(-d gamma).

    >>> SparsitySchedule(0.5).alpha(100)
    0.1
    """

    gamma: float
    d: int = 1

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise DomainError('gamma must lie in [0, 1), not {}'.format(self.gamma))

    def alpha(self, n):
        return float(n) ** (-self.d * self.gamma)

    def mean_degree(self, n):
        """Expected out-degree scale n**(d (1 - gamma)) for W = 1."""
        return float(n) ** (self.d * (1. - self.gamma))


@dataclass
class CellKernelMatrix:
    """Matrix of the cell averages W_{n,ij} over Q_{n,i} x Q_{n,j}.

    Parameters
    ----------
    partition : GridPartition
    entries : ndarray (n**d, n**d)
    truncated_at : float, optional
        the cap 1/alpha_n when the kernel was truncated before averaging.
    declared_bounded : bool
        True when the kernel was used without truncation.
    """

    partition: GridPartition
    entries: np.ndarray
    truncated_at: float = None
    declared_bounded: bool = True
    clamp_count: int = field(default=0, compare=False)
    _clamp_lock: threading.Lock = field(default_factory=threading.Lock, init=False, compare=False, repr=False)

    def __post_init__(self):
        size = self.partition.size
        if self.entries.shape != (size, size):
            raise DomainError('A cell matrix on {} cells must be {}x{}, got {}'.format(
                size, size, size, self.entries.shape))

    def probabilities(self, alpha):
        """Edge probabilities alpha * W_{n,ij} clamped to [0, 1]."""
        p = alpha * self.entries
        over = int(np.count_nonzero(p > 1. + 1e-12))
        if over:
            with self._clamp_lock:
                self.clamp_count += over
            if self.declared_bounded:
                _LOG.warning('{} edge probabilities above 1 were clamped; '
                             'the kernel exceeds its declared bound', over)
        return np.clip(p, 0., 1.)

    def as_step_function(self):
        """The kernel W_n as a step function on the partition of Q**2."""
        return StepFunction(GridPartition(self.partition.n, 2 * self.partition.d), self.entries.ravel())


def _pair_labels(partition):
    size = partition.size

    class Labels:
        def __getitem__(self, rank):
            i, j = divmod(int(rank), size)
            return partition.multi_index(i), partition.multi_index(j)

    return Labels()


def _block_averages(kernel, partition, rows, quad):
    size = partition.size
    square = GridPartition(partition.n, 2 * partition.d)
    ranks = (rows[:, None] * size + np.arange(size)[None, :]).ravel()
    lo, hi = square.cell_bounds(ranks)
    box_average = kernel._box_average
    if box_average is not None:
        return np.asarray(box_average(lo, hi), dtype=float).reshape(len(rows), size)

    labels = _pair_labels(partition)

    class BlockLabels:
        def __getitem__(self, k):
            return labels[ranks[k]]

    integrals, _ = integrate_boxes(lambda z, owners: kernel(z), lo, hi, quad, labels=BlockLabels())
    return (integrals * square.n ** square.d).reshape(len(rows), size)


def cell_matrix(W, partition, schedule, quad=DEFAULT_SPEC, threads=None):
    """Cell averages of W, truncated at 1/alpha_n unless W is bounded by 1.

    Parameters
    ----------
    W : Graphon
        non negative.
    partition : GridPartition
    schedule : SparsitySchedule
    quad : QuadratureSpec
    threads : int, optional
        workers for the row blocks (default: config.available_threads()).

    Returns
    -------
    CellKernelMatrix

    Raises
    ------
    PreconditionError
        if W takes negative values.
    ToleranceNotMetError
        if quad.on_unconverged == 'raise' and an entry does not converge;
        the error carries the (i, j) multi indices.
    """
    _require_nonnegative(W, 'cell_matrix')
    if W.d != partition.d:
        raise DomainError('Kernel of dimension {} on a partition of dimension {}'.format(W.d, partition.d))
    n = partition.n
    if W.is_case_one():
        kernel, cap = W, None
        _LOG.debug('cell matrix of {} (n={}): bounded by {}, no truncation', W, n, W.sup_bound)
    else:
        alpha = schedule.alpha(n)
        kernel = truncate(W, alpha)
        cap = kernel.truncated_at
        _LOG.debug('cell matrix of {} (n={}): truncated at {}', W, n, cap)

    size = partition.size
    blocks = [np.arange(start, min(start + ROW_BLOCK, size)) for start in range(0, size, ROW_BLOCK)]
    workers = config.available_threads(threads)
    if workers > 1 and len(blocks) > 1:
        with futures.ThreadPoolExecutor(max_workers=workers) as executor:
            parts = list(executor.map(lambda rows: _block_averages(kernel, partition, rows, quad), blocks))
    else:
        parts = [_block_averages(kernel, partition, rows, quad) for rows in blocks]

    entries = np.vstack(parts)
    if cap is not None:
        np.minimum(entries, cap, out=entries)
    return CellKernelMatrix(partition, entries, truncated_at=cap, declared_bounded=cap is None)


# ====================================
# Singular kernel rates
# ====================================

ErrorExponents = namedtuple('ErrorExponents', 'truncation projection monte_carlo')


def _check_singular(lam, d):
    if int(d) != d or d < 1:
        raise DomainError('d must be a positive integer, not {}'.format(d))
    if not 0 < lam <= d / 2.:
        raise DomainError('lambda must lie in (0, d/2] = (0, {}], not {}'.format(d / 2., lam))


def optimal_gamma_singular(lam, d):
    """Sparsity exponent balancing truncation and projection errors, 2 lambda / (d (d + 2)).

    >>> round(optimal_gamma_singular(0.25, 1), 6)
    0.166667
    """
    _check_singular(lam, d)
    return 2. * lam / (d * (d + 2.))


def singular_error_exponents(lam, d, gamma):
    """Exponents of h in the truncation, projection and Monte Carlo error terms.

    Returns
    -------
    ErrorExponents
        (d gamma (d / (2 lambda) - 1), 1 - d gamma (1 + 1 / lambda), d (1 - gamma) / 2)
    """
    _check_singular(lam, d)
    if not 0 <= gamma < 1:
        raise DomainError('gamma must lie in [0, 1), not {}'.format(gamma))
    return ErrorExponents(d * gamma * (d / (2. * lam) - 1.),
                          1. - d * gamma * (1. + 1. / lam),
                          d * (1. - gamma) / 2.)


def predicted_overall_rate(lam, d, gamma):
    """Smallest of the singular_error_exponents."""
    return min(singular_error_exponents(lam, d, gamma))


def indicator_rate(beta, d, p):
    """Projection rate (d - beta) / p of an indicator whose boundary has box counting dimension beta."""
    if p < 1:
        raise DomainError('p must be >= 1, not {}'.format(p))
    return (d - beta) / float(p)


def truncation_error(W, alpha):
    """||W - min(W, 1/alpha)||_{L2(Q^2)} for a radial kernel in d = 1.

    With s = |x - y| distributed with density 2 (1 - s) on [0, 1], the
    squared error is int_0^1 2 (1 - s) (g(s) - min(g(s), 1/alpha))**2 ds.
    """
    if W.d != 1 or W.profile is None:
        raise NotSupportedError('truncation_error needs a radial kernel in d = 1, got {}'.format(W))
    if not 0 < alpha <= 1:
        raise DomainError('alpha must lie in (0, 1], not {}'.format(alpha))
    cap = 1. / alpha

    def integrand(s):
        g = float(W.profile(s))
        excess = g - min(g, cap) if math.isfinite(g) else math.inf
        return 2. * (1. - s) * excess * excess

    upper = 1.
    if W.exponent:
        # the excess vanishes beyond the distance where g reaches the cap
        upper = min(1., cap ** (-1. / W.exponent))
    value, _ = integrate.quad(integrand, 0., upper, limit=200)
    return math.sqrt(max(value, 0.))


def projection_error(W, partition, schedule, quad=DEFAULT_SPEC, threads=None):
    """||W~_n - P_n W~_n||_{L2(Q^2)} where W~_n is the kernel used for the cell matrix."""
    matrix = cell_matrix(W, partition, schedule, quad, threads)
    kernel = W if matrix.truncated_at is None else truncate(W, schedule.alpha(partition.n))
    return lp_error(kernel, matrix.as_step_function(), 2, quad)


def truncated_lipschitz_bound(lam, d, gamma, n):
    """sqrt(2) lambda h**(-d gamma (1 / lambda + 1)), the Lipschitz constant of min(|x-y|**-lambda, n**(d gamma))."""
    _check_singular(lam, d)
    h = 1. / n
    return math.sqrt(2.) * lam * h ** (-d * gamma * (1. / lam + 1.))


def max_gradient(W, resolution=400, step=1e-6):
    """Largest forward difference gradient of W over a resolution x resolution sample grid (d = 1)."""
    if W.d != 1:
        raise NotSupportedError('max_gradient samples kernels in d = 1 only')
    axis = np.linspace(0., 1. - step, resolution)
    x, y = (a.ravel()[:, None] for a in np.meshgrid(axis, axis, indexing='ij'))
    base = W.evaluator(x, y)
    dx = (W.evaluator(x + step, y) - base) / step
    dy = (W.evaluator(x, y + step) - base) / step
    with np.errstate(invalid='ignore'):
        norm = np.sqrt(dx * dx + dy * dy)
    return float(np.nanmax(norm))
