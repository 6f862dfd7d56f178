# -*- coding: utf-8 -*-
"""
    nonlocal_mc.core.experiments
    ~~~~~~~~~~~~~~~~~~~~~~~~~~~~

    Monte Carlo trials of the Kuramoto travelling wave, convergence rate
    estimation, the sampled vs averaged gap study and the projection and
    singular kernel rate studies.

    Trials are independent tasks. Their results are stored in indexed
    slots, so the reports do not depend on the number of workers or on
    the completion order.

    :copyright: 2026 by The nonlocal-mc Authors
    :license: BSD, see LICENSE for more details.
"""

import dataclasses
import hashlib
import math
import threading
import time
from concurrent import futures
from dataclasses import dataclass, field

import numpy as np
from pimpmyclass.mixins import LogMixin
from PySignal import ClassSignal

from .config import available_threads
from .errors import ConfigError, DivergenceError, DomainError
from .graphon import (KernelSpec, SparsitySchedule, cell_matrix, from_expression, indicator_rate,
                      optimal_gamma_singular, projection_error, singular, singular_error_exponents,
                      truncation_error)
from .grid import BoxIndicator, GridPartition, Polynomial, PowerCusp, box_counting, lp_error, project_step
from .dynamics import (InteractionSpec, SemidiscreteSystem, TimeGrid, continuum_l2_distance,
                       discrete_l2_distance, exact_kuramoto_reference, rk4_integrate, twisted_state)
from .helpers import as_tuple, is_power_of_two, loglog_slope, mix_seed
from .log import get_logger
from .quadrature import DEFAULT_SPEC
from .sampling import sample_graph

_LOG = get_logger('nonlocal_mc.experiments')

DESK_GAMMAS = (0.2, 0.35, 0.5, 0.65, 0.8)

FULL_GAMMAS = tuple(round(0.05 * k, 2) for k in range(1, 19))


def _as_bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ('1', 'true', 'yes', 'on'):
        return True
    if text in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError('{!r} is not a boolean'.format(value))


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of the travelling wave experiments.

    The defaults are the desk-scale profile; `paper_scale` returns the
    full profile (n in {128, 256}, 200 trials, gamma in 0.05 ... 0.9).

    Raises
    ------
    ConfigError
        naming the offending key when a value is invalid.
    """

    kernel: KernelSpec = KernelSpec('band', r=.2)
    gammas: tuple = DESK_GAMMAS
    ns: tuple = (64, 128)
    trials: int = 30
    q: int = 3
    omega: float = .5
    t1: float = 1.
    dt: float = 1e-2
    checkpoint: float = .1
    seed: int = 0
    error: str = 'sup-time'
    reference: str = 'midpoint'
    exact_average: bool = False
    d: int = 1

    #: config key -> (field, cast)
    KEYS = {'gamma': ('gammas', lambda v: as_tuple(v, float)),
            'n': ('ns', lambda v: as_tuple(v, int)),
            'trials': ('trials', int),
            'seeds': ('trials', int),
            'q': ('q', int),
            'omega': ('omega', float),
            't1': ('t1', float),
            'dt': ('dt', float),
            'checkpoint': ('checkpoint', float),
            'seed': ('seed', int),
            'error': ('error', str),
            'reference': ('reference', str),
            'exact_average': ('exact_average', _as_bool)}

    def __post_init__(self):
        if not self.gammas:
            raise ConfigError('the gamma list is empty', key='gamma')
        for gamma in self.gammas:
            if not 0 <= gamma < 1:
                raise ConfigError('gamma must lie in [0, 1), got {}'.format(gamma), key='gamma')
        if len(self.ns) < 2:
            raise ConfigError('rate estimation needs at least 2 values of n, got {}'.format(self.ns), key='n')
        for n in self.ns:
            if not is_power_of_two(n):
                raise ConfigError('n must be a power of 2, got {}'.format(n), key='n')
        if list(self.ns) != sorted(set(self.ns)):
            raise ConfigError('n values must be increasing, got {}'.format(self.ns), key='n')
        if self.trials < 1:
            raise ConfigError('trials must be >= 1, got {}'.format(self.trials), key='trials')
        if self.error not in ('sup-time', 'final-time'):
            raise ConfigError("error must be 'sup-time' or 'final-time', not {!r}".format(self.error), key='error')
        if self.reference not in ('midpoint', 'continuum'):
            raise ConfigError("reference must be 'midpoint' or 'continuum', not {!r}".format(self.reference),
                              key='reference')
        if self.d != 1:
            raise ConfigError('the travelling wave experiments are defined in d = 1', key='d')
        try:
            self.time_grid()
        except DomainError as e:
            raise ConfigError(str(e), key='dt')

    @classmethod
    def paper_scale(cls, **kwargs):
        values = dict(gammas=FULL_GAMMAS, ns=(128, 256), trials=200)
        values.update(kwargs)
        return cls(**values)

    @property
    def r(self):
        return self.kernel.r

    def time_grid(self):
        return TimeGrid(0., self.t1, self.dt, self.checkpoint)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def config_hash(self):
        """sha256 of the canonical representation of every field."""
        canonical = repr(sorted((f.name, getattr(self, f.name)) for f in dataclasses.fields(self)))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def as_dict(self):
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, KernelSpec):
                value = {k: v for k, v in dataclasses.asdict(value).items() if v is not None}
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    @classmethod
    def from_section(cls, values, base=None, file=None, section='rate-sweep', kernel=None):
        """Build a config from the key/value pairs of a section.

        Parameters
        ----------
        values : dict
        base : ExperimentConfig, optional
            values not given are taken from it (default: desk scale).
        file : ExperimentFile, optional
            used to report the line of a faulty key.
        section : str
        kernel : dict, optional
            the [kernel] section.
        """
        base = base or cls()

        def error(key, message):
            if file is not None:
                return file.error(section, key, message)
            return ConfigError(message, key='{}.{}'.format(section, key))

        changes = {}
        for key, value in values.items():
            key = key.lower()
            if key not in cls.KEYS:
                raise error(key, 'unknown key')
            name, cast = cls.KEYS[key]
            try:
                changes[name] = cast(value)
            except (TypeError, ValueError) as e:
                raise error(key, 'invalid value {!r}: {}'.format(value, e))

        if kernel:
            changes['kernel'] = kernel_spec_from_section(kernel, file)
        try:
            config = dataclasses.replace(base, **changes)
        except ConfigError as e:
            key = (e.key or '').split('.')[-1]
            raise error(key, e.args[0])
        try:
            _interaction(config).validate()
        except DomainError as e:
            raise error('omega', str(e))
        return config


KERNEL_KEYS = {'kind': ('kind', str), 'r': ('r', float), 'lambda': ('lam', float),
               'value': ('value', float), 'expression': ('expression', str),
               'sup_bound': ('sup_bound', float), 'periodic': ('periodic', _as_bool),
               'nonnegative': ('nonnegative', _as_bool)}


def kernel_spec_from_section(values, file=None, section='kernel', d=1):
    """KernelSpec from a [kernel] section (keys: kind, r, lambda, value, expression, sup_bound,
    periodic, nonnegative). The kernel is built in dimension d and its declared properties
    are checked with Graphon.validate."""
    kwargs = {}
    for key, value in values.items():
        key = key.lower()
        if key not in KERNEL_KEYS:
            raise _section_error(file, section, key, 'unknown key')
        name, cast = KERNEL_KEYS[key]
        try:
            kwargs[name] = cast(value)
        except (TypeError, ValueError) as e:
            raise _section_error(file, section, key, 'invalid value {!r}: {}'.format(value, e))
    try:
        spec = KernelSpec(**kwargs)
    except DomainError as e:
        raise _section_error(file, section, 'kind', str(e))
    try:
        spec.build(d).validate()
    except DomainError as e:
        raise _section_error(file, section, 'expression' if spec.kind == 'expression' else 'kind', str(e))
    return spec


def _section_error(file, section, key, message):
    if file is not None:
        return file.error(section, key, message)
    return ConfigError(message, key='{}.{}'.format(section, key))


def trial_seed(base_seed, gamma_index, n, trial):
    """Seed of a trial. Adding gamma values or trials does not change existing seeds."""
    return mix_seed(base_seed, gamma_index, n, trial)


@dataclass
class TrialResult:
    """Outcome of a single trial.

    error is the configured error functional (sup over the checkpoints or
    final time). Excluded trials (divergence) carry the reason and nan errors.
    """

    gamma: float
    n: int
    trial: int
    seed: int
    sup_error: float = math.nan
    final_error: float = math.nan
    error: float = math.nan
    edges: int = 0
    excluded: bool = False
    reason: str = ''


def estimate_rate(e_coarse, e_fine):
    """ln(e_coarse / e_fine) / ln 2 for a grid refined by a factor 2.

    >>> round(estimate_rate(0.02, 0.0141), 3)
    0.504
    """
    if e_coarse <= 0 or e_fine <= 0:
        raise DomainError('errors must be positive to estimate a rate, got {} and {}'.format(e_coarse, e_fine))
    return math.log(e_coarse / e_fine) / math.log(2.)


def fit_rate(ns, errors):
    """Decay exponent of errors against n: minus the least squares slope of ln e vs ln n.

    With two levels n and 2n this equals estimate_rate.
    """
    if len(ns) == 2 and ns[1] == 2 * ns[0]:
        return estimate_rate(errors[0], errors[1])
    return -loglog_slope(ns, errors)


def _trajectory_errors(trajectory, config, partition):
    errors = []
    for t, state in zip(trajectory.times, trajectory.states):
        if config.reference == 'continuum':
            errors.append(continuum_l2_distance(state, config.q, config.omega, t, partition))
        else:
            exact = exact_kuramoto_reference(config.q, config.omega, t, partition, config.exact_average)
            errors.append(discrete_l2_distance(state, exact, partition))
    return np.array(errors)


def _interaction(config):
    return InteractionSpec.kuramoto(config.omega)


def build_cells(config, gamma, n, threads=1):
    """Cell matrix of the configured kernel."""
    partition = GridPartition(n, config.d)
    return cell_matrix(config.kernel.build(config.d), partition, SparsitySchedule(gamma, config.d),
                       threads=threads)


def run_trial(config, gamma, n, trial, gamma_index=0, cells=None, coupling='sampled', interaction=None):
    """Integrate one realization and measure its error.

    Parameters
    ----------
    config : ExperimentConfig
    gamma : float
    n : int
    trial : int
    gamma_index : int
        position of gamma in the sweep, mixed into the seed.
    cells : CellKernelMatrix, optional
        precomputed cell matrix for (kernel, n, gamma).
    coupling : str
        'sampled' (random graph) or 'averaged' (cell matrix).
    interaction : InteractionSpec, optional
        defaults to the Kuramoto interaction with the configured omega.

    Returns
    -------
    TrialResult

    Raises
    ------
    DivergenceError
        with gamma, n and trial in its metadata.
    """
    partition = GridPartition(n, config.d)
    schedule = SparsitySchedule(gamma, config.d)
    if cells is None:
        cells = build_cells(config, gamma, n)
    seed = trial_seed(config.seed, gamma_index, n, trial)
    interaction = interaction or _interaction(config)
    u0 = twisted_state(config.q, partition, config.exact_average)

    edges = 0
    if coupling == 'sampled':
        graph = sample_graph(cells, schedule, seed, threads=1)
        edges = graph.edge_count
        system = SemidiscreteSystem(partition, graph, interaction, u0)
    elif coupling == 'averaged':
        system = SemidiscreteSystem(partition, cells, interaction, u0)
    else:
        raise DomainError("coupling must be 'sampled' or 'averaged', not {!r}".format(coupling))

    try:
        trajectory = rk4_integrate(system, config.time_grid())
    except DivergenceError as e:
        e.metadata.update(gamma=gamma, n=n, trial=trial)
        raise
    errors = _trajectory_errors(trajectory, config, partition)
    result = TrialResult(gamma, n, trial, seed, float(errors.max()), float(errors[-1]), 0., edges)
    result.error = result.sup_error if config.error == 'sup-time' else result.final_error
    return result


@dataclass
class RateRow:
    """Aggregate of the trials of one (gamma, n) pair."""

    gamma: float
    n: int
    trials: int
    mean_error: float
    stderr: float
    alpha_gamma: float
    theory_rate: float
    excluded: int = 0


@dataclass
class RateReport:
    """Rows per (gamma, n), fitted rates per gamma and the individual trials."""

    rows: list
    rates: dict
    trials: list
    metadata: dict = field(default_factory=dict)

    @property
    def excluded(self):
        return sum(1 for t in self.trials if t is not None and t.excluded)


def _mean_and_stderr(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan, math.nan
    if values.size == 1:
        return float(values[0]), 0.
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def aggregate(config, results):
    """Rows and fitted rates from the finished trials (None slots are skipped)."""
    rows, rates = [], {}
    for gamma in config.gammas:
        levels = []
        for n in config.ns:
            done = [r for r in results if r is not None and r.gamma == gamma and r.n == n]
            kept = [r.error for r in done if not r.excluded]
            mean, stderr = _mean_and_stderr(kept)
            levels.append((n, mean, stderr, len(kept), len(done) - len(kept)))

        usable = [(n, mean) for n, mean, _, count, _ in levels if count and mean > 0]
        alpha = math.nan
        if len(usable) >= 2:
            alpha = fit_rate([n for n, _ in usable], [mean for _, mean in usable])
        rates[gamma] = alpha
        theory = (1. - gamma) / 2.
        for n, mean, stderr, count, excluded in levels:
            if count or excluded:
                rows.append(RateRow(gamma, n, count, mean, stderr, alpha, theory, excluded))
    return rows, rates


class RateSweep(LogMixin):
    """Runs every (gamma, n, trial) of a config in a thread pool.

    Signals
    -------
    trial_done(TrialResult)
        emitted as each trial finishes (in the worker thread).
    level_done(gamma, n)
        emitted when every trial of a pair has finished.
    """

    trial_done = ClassSignal()

    level_done = ClassSignal()

    logger_name = 'nonlocal_mc.experiments.RateSweep'

    _get_logger = get_logger

    def __init__(self, config, threads=None, coupling='sampled'):
        super().__init__()
        self.name = 'RateSweep'
        self.config = config
        self.threads = available_threads(threads)
        self.coupling = coupling
        self.tasks = [(gi, gamma, n, trial)
                      for gi, gamma in enumerate(config.gammas)
                      for n in config.ns
                      for trial in range(config.trials)]
        self.results = [None] * len(self.tasks)
        self._cells = {}
        self._pending = {}
        self._lock = threading.Lock()

    def cells(self, gamma, n):
        """Cell matrix for (gamma, n), shared by the trials.

        Kernels bounded by 1 are not truncated, so their matrix does not depend on gamma.
        """
        kernel = self.config.kernel.build(self.config.d)
        key = (self.config.kernel, n, None if kernel.is_case_one() else gamma)
        if key not in self._cells:
            self._cells[key] = build_cells(self.config, gamma, n, threads=self.threads)
        return self._cells[key]

    def _run_task(self, index):
        gi, gamma, n, trial = self.tasks[index]
        try:
            return run_trial(self.config, gamma, n, trial, gi, self.cells(gamma, n), self.coupling)
        except DivergenceError as e:
            self.log_warning('trial excluded: {}', e)
            return TrialResult(gamma, n, trial, trial_seed(self.config.seed, gi, n, trial),
                               excluded=True, reason=str(e))

    def _store(self, index):
        def _inner(fut):
            if fut.cancelled() or fut.exception() is not None:
                return
            result = fut.result()
            self.results[index] = result
            self.log_debug('trial {} of gamma={} n={}: error {}', result.trial, result.gamma,
                           result.n, result.error)
            self.trial_done.emit(result)
            key = (result.gamma, result.n)
            with self._lock:
                self._pending[key] -= 1
                finished = not self._pending[key]
            if finished:
                self.level_done.emit(result.gamma, result.n)
        return _inner

    def run(self):
        """Run every pending trial and aggregate.

        Returns
        -------
        RateReport

        On KeyboardInterrupt the pending trials are cancelled; `results`
        keeps the finished ones so that they can be written.
        """
        start = time.perf_counter()
        # cell matrices are built before the trials start
        for gamma in self.config.gammas:
            for n in self.config.ns:
                self.cells(gamma, n)

        todo = [k for k, r in enumerate(self.results) if r is None]
        self._pending = {}
        for k in todo:
            _, gamma, n, _ = self.tasks[k]
            self._pending[(gamma, n)] = self._pending.get((gamma, n), 0) + 1

        self.log_info('running {} trials on {} worker(s)', len(todo), self.threads)
        executor = futures.ThreadPoolExecutor(max_workers=self.threads)
        futs = []
        try:
            for k in todo:
                fut = executor.submit(self._run_task, k)
                fut.add_done_callback(self._store(k))
                futs.append(fut)
            futures.wait(futs)
            for fut in futs:
                if fut.exception() is not None:
                    raise fut.exception()
        except KeyboardInterrupt:
            for fut in futs:
                fut.cancel()
            raise
        finally:
            executor.shutdown(wait=True)

        report = self.report()
        report.metadata['wall_time'] = time.perf_counter() - start
        for gamma, alpha in report.rates.items():
            self.log_info('gamma={}: fitted rate {:.4f}, theory {:.4f}', gamma, alpha, (1. - gamma) / 2.)
        return report

    def report(self):
        """Aggregate whatever has finished so far."""
        rows, rates = aggregate(self.config, self.results)
        return RateReport(rows, rates, [r for r in self.results if r is not None],
                          dict(seed=self.config.seed, config_hash=self.config.config_hash()))


def rate_sweep(config, threads=None, coupling='sampled'):
    """Run the gamma sweep of config and fit a rate per gamma.

    Returns
    -------
    RateReport
    """
    return RateSweep(config, threads, coupling).run()


# ====================================
# Sampled vs averaged gap
# ====================================

@dataclass
class GapRow:

    n: int
    seeds: int
    mean_gap: float
    stderr: float


@dataclass
class GapReport:
    """Mean sup-in-time distance between the sampled and averaged systems."""

    gamma: float
    rows: list
    exponent: float
    theory: float


def sampled_vs_averaged(config, gamma, ns=None, seeds=None, threads=None):
    """Gap between the sampled and the averaged system started from the same state.

    Parameters
    ----------
    config : ExperimentConfig
    gamma : float
    ns : sequence of int, optional
        defaults to config.ns.
    seeds : int, optional
        realizations per n (defaults to config.trials).
    threads : int, optional

    Returns
    -------
    GapReport
        with the fitted decay exponent next to d (1 - gamma) / 2.
    """
    ns = tuple(ns or config.ns)
    seeds = int(seeds or config.trials)
    gamma_index = config.gammas.index(gamma) if gamma in config.gammas else 0
    grid = config.time_grid()
    interaction = _interaction(config)
    schedule = SparsitySchedule(gamma, config.d)
    workers = available_threads(threads)

    rows = []
    for n in ns:
        partition = GridPartition(n, config.d)
        cells = build_cells(config, gamma, n, threads=workers)
        u0 = twisted_state(config.q, partition, config.exact_average)
        averaged = rk4_integrate(SemidiscreteSystem(partition, cells, interaction, u0), grid)

        def gap(s, n=n, partition=partition, cells=cells, u0=u0, averaged=averaged):
            graph = sample_graph(cells, schedule, trial_seed(config.seed, gamma_index, n, s), threads=1)
            sampled = rk4_integrate(SemidiscreteSystem(partition, graph, interaction, u0), grid)
            return max(discrete_l2_distance(u, v, partition)
                       for u, v in zip(sampled.states, averaged.states))

        with futures.ThreadPoolExecutor(max_workers=workers) as executor:
            gaps = list(executor.map(gap, range(seeds)))
        mean, stderr = _mean_and_stderr(gaps)
        rows.append(GapRow(n, seeds, mean, stderr))
        _LOG.info('gap study gamma={} n={}: mean gap {:.6g} +- {:.2g}', gamma, n, mean, stderr)

    positive = [(row.n, row.mean_gap) for row in rows if row.mean_gap > 0]
    exponent = math.nan
    if len(positive) >= 2:
        exponent = fit_rate([n for n, _ in positive], [g for _, g in positive])
    return GapReport(gamma, rows, exponent, config.d * (1. - gamma) / 2.)


# ====================================
# Projection and singular kernel studies
# ====================================

@dataclass
class ProjectionReport:

    family: str
    p: float
    levels: tuple
    errors: tuple
    slope: float
    predicted: float


def function_family(name, d=1, p=2, exponent=.5, center=.5, threshold=1. / math.sqrt(2.),
                    expression=None, levels=(8, 16, 32, 64, 128, 256, 512)):
    """Test function of a projection study and the exponent the theory predicts.

    Families
    --------
    linear : phi(x) = x, Lipschitz, predicted 1.
    indicator : 1 on [0, threshold], predicted (d - beta) / p with the
        box counting dimension beta of its boundary measured on levels.
    power : |x - center|**exponent, Hoelder, predicted exponent.
    expression : an expression in x, predicted nan.

    Returns
    -------
    (callable, float)
    """
    if d != 1:
        raise DomainError('projection study families are defined in d = 1')
    if name == 'linear':
        return Polynomial([(1., (1, ))]), 1.
    elif name == 'indicator':
        phi = BoxIndicator([0.], [threshold])
        counted = box_counting(phi, levels)
        return phi, indicator_rate(counted.beta, d, p)
    elif name == 'power':
        return PowerCusp(exponent, center), float(exponent)
    elif name == 'expression':
        if not expression:
            raise DomainError('the expression family needs an expression')
        kernel = from_expression(expression, 1)

        def phi(x):
            x = np.asarray(x)
            return kernel.evaluate(x[:, 0], np.zeros(len(x)))
        return phi, math.nan
    raise DomainError("Unknown function family {!r}. Use 'linear', 'indicator', 'power' or 'expression'".format(name))


def projection_rate_study(phi, p=2, levels=(8, 16, 32, 64, 128, 256, 512), predicted=math.nan,
                          d=1, family='custom', quad=DEFAULT_SPEC):
    """Measure ||phi - P_n phi||_{L^p} over dyadic levels and fit the decay exponent.

    Returns
    -------
    ProjectionReport
    """
    levels = tuple(int(n) for n in levels)
    if len(levels) < 2 or not all(is_power_of_two(n) for n in levels):
        raise DomainError('projection studies need at least two dyadic levels, got {}'.format(levels))
    errors = []
    for n in levels:
        step = project_step(phi, n, d, quad)
        errors.append(lp_error(phi, step, p, quad))
        _LOG.debug('projection study {}: n={} error={}', family, n, errors[-1])
    slope = fit_rate(levels, errors) if all(e > 0 for e in errors) else math.nan
    _LOG.info('projection study {} (p={}): slope {:.4f}, predicted {:.4f}', family, p, slope, predicted)
    return ProjectionReport(family, p, levels, tuple(errors), slope, predicted)


@dataclass
class SingularRow:

    n: int
    alpha: float
    truncation_error: float
    projection_error: float


@dataclass
class SingularReport:
    """Errors of the singular kernel |x - y|**-lambda across levels."""

    lam: float
    d: int
    gamma: float
    optimal_gamma: float
    exponents: tuple
    rows: list
    truncation_slope: float
    projection_slope: float

    @property
    def predicted_overall_rate(self):
        return min(self.exponents)


def singular_study(lam, d=1, gamma=None, levels=(16, 32, 64, 128, 256), projection_max_n=64,
                   quad=DEFAULT_SPEC, threads=None):
    """Truncation and projection errors of the singular kernel.

    Parameters
    ----------
    lam : float
        exponent of |x - y|**-lambda.
    d : int
    gamma : float, optional
        sparsity exponent (defaults to optimal_gamma_singular).
    levels : sequence of int
    projection_max_n : int
        the projection error (a full adaptive integration over Q**2) is
        only measured up to this n; larger levels report nan.
    """
    optimal = optimal_gamma_singular(lam, d)
    if gamma is None:
        gamma = optimal
    exponents = singular_error_exponents(lam, d, gamma)
    W = singular(lam, d)
    schedule = SparsitySchedule(gamma, d)

    rows = []
    for n in levels:
        alpha = schedule.alpha(n)
        trunc = truncation_error(W, alpha)
        proj = math.nan
        if n <= projection_max_n:
            proj = projection_error(W, GridPartition(n, d), schedule, quad, threads)
        rows.append(SingularRow(n, alpha, trunc, proj))
        _LOG.debug('singular study n={}: truncation {} projection {}', n, trunc, proj)

    def slope(values):
        pairs = [(row.n, v) for row, v in zip(rows, values) if v > 0 and math.isfinite(v)]
        if len(pairs) < 2:
            return math.nan
        return fit_rate([n for n, _ in pairs], [v for _, v in pairs])

    report = SingularReport(lam, d, gamma, optimal, tuple(exponents), rows,
                            slope([r.truncation_error for r in rows]),
                            slope([r.projection_error for r in rows]))
    _LOG.info('singular study lambda={} gamma={}: truncation slope {:.4f} (predicted {:.4f})',
              lam, gamma, report.truncation_slope, exponents.truncation)
    return report


# ====================================
# Single integration
# ====================================

@dataclass
class SolveResult:

    partition: GridPartition
    trajectory: object
    errors: np.ndarray
    references: np.ndarray
    edges: int = 0


def solve(config, n=None, gamma=None, coupling='sampled', trial=0, threads=None):
    """Integrate one system and keep the checkpointed trajectory.

    Parameters
    ----------
    config : ExperimentConfig
    n : int, optional
        defaults to the finest config.ns.
    gamma : float, optional
        defaults to the first config.gammas.
    coupling : str
        'sampled' or 'averaged'.
    trial : int

    Returns
    -------
    SolveResult
    """
    n = int(n or config.ns[-1])
    gamma = config.gammas[0] if gamma is None else float(gamma)
    gamma_index = config.gammas.index(gamma) if gamma in config.gammas else 0
    partition = GridPartition(n, config.d)
    schedule = SparsitySchedule(gamma, config.d)
    cells = build_cells(config, gamma, n, threads=available_threads(threads))
    u0 = twisted_state(config.q, partition, config.exact_average)

    edges = 0
    if coupling == 'sampled':
        graph = sample_graph(cells, schedule, trial_seed(config.seed, gamma_index, n, trial), threads)
        edges = graph.edge_count
        system = SemidiscreteSystem(partition, graph, _interaction(config), u0)
    elif coupling == 'averaged':
        system = SemidiscreteSystem(partition, cells, _interaction(config), u0)
    else:
        raise DomainError("coupling must be 'sampled' or 'averaged', not {!r}".format(coupling))

    try:
        trajectory = rk4_integrate(system, config.time_grid())
    except DivergenceError as e:
        e.metadata.update(gamma=gamma, n=n, trial=trial)
        raise
    references = np.array([exact_kuramoto_reference(config.q, config.omega, t, partition, config.exact_average)
                           for t in trajectory.times])
    errors = _trajectory_errors(trajectory, config, partition)
    _LOG.info('solve n={} gamma={} ({}): sup error {:.6g}', n, gamma, coupling, errors.max())
    return SolveResult(partition, trajectory, errors, references, edges)
