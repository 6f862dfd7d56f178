# -*- coding: utf-8 -*-
"""
    nonlocal_mc.core.dynamics
    ~~~~~~~~~~~~~~~~~~~~~~~~~

    Semidiscrete systems and their integration.

    The sampled system couples node i to the targets j of its edges,

        du_i/dt = f_i(u_i, t) + (alpha_n n**d)**-1 sum_{i -> j} D(u_j - u_i)

    and the averaged system replaces the random adjacency by the matrix of
    cell averages,

        dv_i/dt = f_i(v_i, t) + n**-d sum_j W_{n,ij} D(v_j - v_i).

    States live in R (no reduction modulo 2 pi), so reference solutions
    that wind around the circle can be compared without spurious jumps.

    :copyright: 2026 by The nonlocal-mc Authors
    :license: BSD, see LICENSE for more details.
"""

import math
from dataclasses import dataclass

import numpy as np
from pimpmyclass.mixins import LogMixin

from .errors import DivergenceError, DomainError, NotSupportedError
from .graphon import CellKernelMatrix
from .log import get_logger
from .sampling import SparseGraph

_LOG = get_logger('nonlocal_mc.dynamics')

TWO_PI = 2. * math.pi


class InteractionSpec:
    """Coupling function D and local dynamics f.

    Parameters
    ----------
    D : callable
        vectorized function R -> R with sup |D| <= 1.
    lipschitz_D : float
    f : callable, optional
        f(u, ranks, t) -> array, the local term of each node.
    lipschitz_f : float
        Lipschitz constant of f in u.
    f_cell_values : array_like, optional
        precomputed f_{n,i} (independent of u and t); used when f is None.
    D_prime : callable, optional
        derivative of D, needed by jvp_averaged.
    f_prime : callable, optional
        f_prime(u, ranks, t), derivative of f in u. None means f does not depend on u.
    """

    def __init__(self, D, lipschitz_D=1., f=None, lipschitz_f=0., f_cell_values=None,
                 D_prime=None, f_prime=None, name='interaction'):
        self.D = D
        self.lipschitz_D = float(lipschitz_D)
        self.f = f
        self.lipschitz_f = float(lipschitz_f)
        self.f_cell_values = None if f_cell_values is None else np.asarray(f_cell_values, dtype=float)
        self.D_prime = D_prime
        self.f_prime = f_prime
        self.name = name

    def __repr__(self):
        return '<InteractionSpec {}>'.format(self.name)

    @classmethod
    def kuramoto(cls, omega=0.):
        """D(w) = -sin(w), so that D(u_j - u_i) = sin(u_i - u_j), and f = omega."""
        omega = float(omega)

        def forcing(u, ranks, t):
            return np.full(len(u), omega)

        return cls(lambda w: -np.sin(w), 1., forcing, 0., D_prime=lambda w: -np.cos(w),
                   name='kuramoto(omega={})'.format(omega))

    @classmethod
    def linear(cls, omega=0.):
        """No coupling (D = 0) and constant drift f = omega."""
        omega = float(omega)
        return cls(np.zeros_like, 0., lambda u, ranks, t: np.full(len(u), omega), 0.,
                   D_prime=np.zeros_like, name='drift(omega={})'.format(omega))

    def forcing(self, u, t):
        if self.f is not None:
            return np.asarray(self.f(u, np.arange(len(u)), t), dtype=float)
        if self.f_cell_values is not None:
            return np.broadcast_to(self.f_cell_values, u.shape)
        return np.zeros_like(u)

    def forcing_derivative(self, u, t):
        if self.f is None or self.f_prime is None:
            return np.zeros_like(u)
        return np.asarray(self.f_prime(u, np.arange(len(u)), t), dtype=float)

    def validate(self, samples=10000, seed=0):
        """Check the bound of D and the declared Lipschitz constants.

        Raises
        ------
        DomainError
        """
        w = np.linspace(-4 * math.pi, 4 * math.pi, samples)
        values = np.asarray(self.D(w), dtype=float)
        if np.any(np.abs(values) > 1. + 1e-12):
            raise DomainError('{}: sup |D| exceeds 1'.format(self))
        slopes = np.abs(np.diff(values)) / np.diff(w)
        if np.any(slopes > self.lipschitz_D * (1. + 1e-9)):
            raise DomainError('{}: D is not {}-Lipschitz'.format(self, self.lipschitz_D))
        if self.f is not None:
            rng = np.random.Generator(np.random.Philox(key=int(seed)))
            u1 = rng.uniform(-4 * math.pi, 4 * math.pi, samples)
            u2 = rng.uniform(-4 * math.pi, 4 * math.pi, samples)
            gap = np.abs(self.forcing(u1, 0.) - self.forcing(u2, 0.))
            if np.any(gap > self.lipschitz_f * np.abs(u1 - u2) * (1. + 1e-9) + 1e-12):
                raise DomainError('{}: f is not {}-Lipschitz in u'.format(self, self.lipschitz_f))


@dataclass(frozen=True)
class TimeGrid:
    """Fixed step time grid.

    Parameters
    ----------
    t0, t1 : float
    dt : float
        (t1 - t0) / dt must be a positive integer.
    checkpoint_interval : float, optional
        time between stored states (a multiple of dt). None stores t0 and t1 only.
    """

    t0: float = 0.
    t1: float = 1.
    dt: float = 1e-2
    checkpoint_interval: float = .1

    def __post_init__(self):
        if self.dt <= 0:
            raise DomainError('dt must be positive, not {}'.format(self.dt))
        _steps(self.t1 - self.t0, self.dt, 't1 - t0')
        if self.checkpoint_interval is not None:
            _steps(self.checkpoint_interval, self.dt, 'checkpoint_interval')

    @property
    def steps(self):
        return _steps(self.t1 - self.t0, self.dt, 't1 - t0')

    @property
    def checkpoints(self):
        """Step indices at which the state is stored, always including 0 and steps."""
        steps = self.steps
        if self.checkpoint_interval is None:
            return (0, steps)
        every = _steps(self.checkpoint_interval, self.dt, 'checkpoint_interval')
        return tuple(sorted(set(range(0, steps, every)) | {steps}))

    def time(self, step):
        return self.t0 + step * self.dt

    def times(self):
        return np.array([self.time(k) for k in self.checkpoints])


def _steps(span, dt, what):
    ratio = span / dt
    steps = int(round(ratio))
    if steps < 1 or abs(ratio - steps) > 1e-12 * max(1., steps):
        raise DomainError('{} = {} is not a positive integer multiple of dt = {}'.format(what, span, dt))
    return steps


@dataclass
class Trajectory:
    """States stored at the checkpoints of a TimeGrid."""

    times: np.ndarray
    states: np.ndarray
    steps: tuple

    @property
    def final(self):
        return self.states[-1]

    def __len__(self):
        return len(self.times)


class SemidiscreteSystem(LogMixin):
    """ODE system on the cells of a partition.

    Parameters
    ----------
    partition : GridPartition
    coupling : SparseGraph or CellKernelMatrix
        a graph gives the sampled system, a cell matrix the averaged one.
    interaction : InteractionSpec
    u0 : array_like, optional
        initial state (zeros by default).
    t : float
    name : str, optional
    """

    logger_name = None

    _get_logger = get_logger

    def __init__(self, partition, coupling, interaction, u0=None, t=0., name=None):
        size = partition.size
        if isinstance(coupling, SparseGraph):
            if coupling.node_count != size:
                raise DomainError('A graph with {} nodes does not match {} cells'.format(coupling.node_count, size))
            self._sources = coupling.sources()
        elif isinstance(coupling, CellKernelMatrix):
            if coupling.partition != partition:
                raise DomainError('The cell matrix lives on {}, not on {}'.format(coupling.partition, partition))
        else:
            raise DomainError('coupling must be a SparseGraph or a CellKernelMatrix, not {}'.format(type(coupling)))
        self.partition = partition
        self.coupling = coupling
        self.interaction = interaction
        self.name = name or '{}(n={})'.format('sampled' if self.sampled else 'averaged', partition.n)
        if self.logger_name is None:
            self.logger_name = 'nonlocal_mc.dynamics.' + self.name
        self.t = float(t)
        self.u = np.zeros(size) if u0 is None else self._check_state(u0)
        super().__init__()

    def __repr__(self):
        return '<SemidiscreteSystem({})>'.format(self.name)

    def _check_state(self, u):
        u = np.array(u, dtype=float).ravel()
        if u.size != self.partition.size:
            raise DomainError('State of length {} on {} cells'.format(u.size, self.partition.size))
        return u

    @property
    def sampled(self):
        return isinstance(self.coupling, SparseGraph)

    def rhs(self, t, u):
        if self.sampled:
            return rhs_sampled(t, u, self)
        return rhs_averaged(t, u, self)


def rhs_sampled(t, u, sys):
    """Right hand side of the sampled system.

    Parameters
    ----------
    t : float
    u : ndarray (n**d, )
    sys : SemidiscreteSystem
        with a SparseGraph coupling.
    """
    if not sys.sampled:
        raise DomainError('rhs_sampled needs a system coupled by a SparseGraph')
    graph = sys.coupling
    size = sys.partition.size
    sources = sys._sources
    contributions = sys.interaction.D(u[graph.column_indices] - u[sources])
    coupling = np.bincount(sources, weights=contributions, minlength=size)
    return sys.interaction.forcing(u, t) + coupling / (graph.alpha * size)


def rhs_averaged(t, v, sys):
    """Right hand side of the averaged system (dense, n**-d sum_j W_ij D(v_j - v_i))."""
    if sys.sampled:
        raise DomainError('rhs_averaged needs a system coupled by a CellKernelMatrix')
    W = sys.coupling.entries
    differences = v[None, :] - v[:, None]
    coupling = (W * sys.interaction.D(differences)).sum(axis=1)
    return sys.interaction.forcing(v, t) + coupling / sys.partition.size


def jvp_averaged(v, direction, sys, t=0.):
    """Directional derivative of rhs_averaged at v along direction.

    Raises
    ------
    NotSupportedError
        if the interaction does not provide D_prime.
    """
    interaction = sys.interaction
    if interaction.D_prime is None:
        raise NotSupportedError('{} has no D_prime'.format(interaction))
    W = sys.coupling.entries
    differences = v[None, :] - v[:, None]
    spread = direction[None, :] - direction[:, None]
    coupling = (W * interaction.D_prime(differences) * spread).sum(axis=1)
    return interaction.forcing_derivative(v, t) * direction + coupling / sys.partition.size


def rk4(rhs, u0, grid, name='state'):
    """Classical fourth order Runge-Kutta with a fixed step.

    Parameters
    ----------
    rhs : callable
        rhs(t, u) -> du/dt
    u0 : array_like
    grid : TimeGrid
    name : str
        used in error messages.

    Returns
    -------
    Trajectory

    Raises
    ------
    DivergenceError
        when the state stops being finite.
    """
    u = np.array(u0, dtype=float)
    dt = grid.dt
    checkpoints = grid.checkpoints
    stored = {0: u.copy()}
    wanted = set(checkpoints)
    for k in range(grid.steps):
        t = grid.time(k)
        k1 = rhs(t, u)
        k2 = rhs(t + dt / 2, u + dt / 2 * k1)
        k3 = rhs(t + dt / 2, u + dt / 2 * k2)
        k4 = rhs(t + dt, u + dt * k3)
        u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(u)):
            raise DivergenceError('{} became non finite at step {} (t={:g})'.format(name, k + 1, grid.time(k + 1)),
                                  step=k + 1)
        if k + 1 in wanted:
            stored[k + 1] = u.copy()
    return Trajectory(grid.times(), np.array([stored[k] for k in checkpoints]), checkpoints)


def rk4_integrate(sys, grid, rhs=None):
    """Integrate sys from its current state over grid.

    The system state and time are updated to the final values.

    Parameters
    ----------
    sys : SemidiscreteSystem
    grid : TimeGrid
    rhs : callable, optional
        rhs_sampled or rhs_averaged (default: chosen from the coupling).

    Returns
    -------
    Trajectory
    """
    if rhs is None:
        func = sys.rhs
    else:
        def func(t, u):
            return rhs(t, u, sys)

    sys.log_debug('integrating over [{}, {}] with dt={}', grid.t0, grid.t1, grid.dt)
    try:
        trajectory = rk4(func, sys.u, grid, sys.name)
    except DivergenceError as e:
        sys.log_warning('{}', e)
        e.metadata.setdefault('n', sys.partition.n)
        raise
    sys.u = trajectory.final.copy()
    sys.t = grid.t1
    sys.log_debug('reached t={}', sys.t)
    return trajectory


def _check_line(partition):
    if partition.d != 1:
        raise NotSupportedError('twisted states are defined in d = 1 only, got d = {}'.format(partition.d))


def _sawtooth_average(q, a, b):
    """Average of frac(q x) over [a, b]."""
    def antiderivative(z):
        return np.floor(z) / 2. + np.mod(z, 1.) ** 2 / 2.
    return (antiderivative(q * b) - antiderivative(q * a)) / (q * (b - a))


def twisted_state(q, partition, exact_average=False):
    """q-twisted state 2 pi ((q x) mod 1) at the cell midpoints.

    Parameters
    ----------
    q : int
    partition : GridPartition
        in d = 1.
    exact_average : bool
        use the exact cell averages instead of the midpoint values.

    Examples
    --------
    >>> from nonlocal_mc.core.grid import GridPartition
    >>> (twisted_state(1, GridPartition(4)) / (2 * math.pi)).round(12).tolist()
    [0.125, 0.375, 0.625, 0.875]
    """
    _check_line(partition)
    q = int(q)
    if exact_average and q != 0:
        lo, hi = partition.cell_bounds()
        return TWO_PI * _sawtooth_average(q, lo[:, 0], hi[:, 0])
    x = partition.midpoints()[:, 0]
    return TWO_PI * np.mod(q * x, 1.)


def exact_kuramoto_reference(q, omega, t, partition, exact_average=False):
    """Travelling wave twisted_state + omega t, without reduction modulo 2 pi."""
    return twisted_state(q, partition, exact_average) + omega * t


def continuum_l2_distance(u, q, omega, t, partition):
    """L2(Q) distance between the step function of u and the travelling wave
    2 pi frac(q x) + omega t, computed exactly piece by piece.

    The wave is linear between its jumps at the multiples of 1/q, so every
    cell is split there and each piece contributes
    ((l(b) - c)**3 - (l(a) - c)**3) / (3 l') for the linear part l.
    """
    _check_line(partition)
    u = np.asarray(u, dtype=float).ravel()
    if u.size != partition.size:
        raise DomainError('State of length {} on {} cells'.format(u.size, partition.size))
    q = int(q)
    n = partition.n
    edges = np.arange(n + 1) / n
    if q:
        edges = np.union1d(edges, np.arange(1, abs(q)) / abs(q))
    a, b = edges[:-1], edges[1:]
    middle = (a + b) / 2.
    owner = partition.locate(middle)
    c = u[owner] - omega * t
    if q == 0:
        contributions = (b - a) * c * c
    else:
        branch = np.floor(q * middle)
        slope = TWO_PI * q
        left = TWO_PI * (q * a - branch) - c
        right = TWO_PI * (q * b - branch) - c
        contributions = (right ** 3 - left ** 3) / (3. * slope)
    return float(math.sqrt(max(np.sum(contributions), 0.)))


def discrete_l2_distance(u, v, partition):
    """(n**-d sum (u_i - v_i)**2)**(1/2).

    >>> from nonlocal_mc.core.grid import GridPartition
    >>> discrete_l2_distance([1, -1, 1, -1], [0, 0, 0, 0], GridPartition(4))
    1.0
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.size != v.size or u.size != partition.size:
        raise DomainError('States of length {} and {} on {} cells'.format(u.size, v.size, partition.size))
    return float(math.sqrt(np.sum((u - v) ** 2) / partition.size))
