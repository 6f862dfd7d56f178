# -*- coding: utf-8 -*-
"""
    nonlocal_mc.core.__main__
    ~~~~~~~~~~~~~~~~~~~~~~~~~

    Subcommands of the `nonlocal-mc` command line tool.

    Every subcommand writes plain data files (CSV with 17 significant
    digits, PGM images) and a manifest.yaml into --out. Plotting is left
    to external tools, e.g.

        import pandas, matplotlib.pyplot as plt
        pandas.read_csv('rates.csv').plot.scatter('gamma', 'alpha_gamma'); plt.show()

    Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
    4 input/output error, 5 quadrature tolerance not met, 130 interrupted
    (finished rows are written first).

    :copyright: 2026 by The nonlocal-mc Authors
    :license: BSD, see LICENSE for more details.
"""

import argparse
import csv
import functools
import os
import sys
import time
from dataclasses import dataclass, field

EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4
EXIT_TOLERANCE = 5
EXIT_INTERRUPTED = 130


def _logger():
    from .log import get_logger
    return get_logger('nonlocal_mc.cli')


def _exit_codes(func):
    """Map library exceptions to the documented exit codes."""

    @functools.wraps(func)
    def _inner(args=None):
        from .errors import ConfigError, DivergenceError, DomainError, OutputError, ToleranceNotMetError
        log = _logger()
        try:
            return func(args)
        except ConfigError as e:
            log.error('configuration error: {}', e)
            print('error: %s' % e, file=sys.stderr)
            sys.exit(EXIT_CONFIG)
        except DomainError as e:
            log.error('invalid parameters: {}', e)
            print('error: %s' % e, file=sys.stderr)
            sys.exit(EXIT_CONFIG)
        except DivergenceError as e:
            log.error('numerical divergence: {}', e)
            print('error: %s' % e, file=sys.stderr)
            sys.exit(EXIT_DIVERGENCE)
        except ToleranceNotMetError as e:
            log.error('quadrature tolerance not met at {}: {}', e.index, e)
            print('error: %s' % e, file=sys.stderr)
            sys.exit(EXIT_TOLERANCE)
        except (OutputError, OSError) as e:
            log.error('input/output error: {}', e)
            print('error: %s' % e, file=sys.stderr)
            sys.exit(EXIT_IO)

    return _inner


def _parser(name, description):
    from .config import LOG_LEVEL
    parser = argparse.ArgumentParser(prog='nonlocal-mc ' + name, description=description)
    parser.add_argument('--config', default=None, help='experiment file (ini or yaml)')
    parser.add_argument('--out', default='.', help='output directory')
    parser.add_argument('--seed', type=int, default=None, help='base seed')
    parser.add_argument('--threads', type=int, default=None,
                        help='workers (default: NONLOCAL_MC_THREADS or the available parallelism)')
    parser.add_argument('--log-level', default=LOG_LEVEL, help='debug, info, warning or error')
    return parser


def _setup(args):
    from .log import log_to_screen
    from .errors import ConfigError, OutputError
    try:
        log_to_screen(args.log_level)
    except ValueError as e:
        raise ConfigError(str(e), key='log-level')
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as e:
        raise OutputError(args.out, e.strerror or e)


def _load(args, section):
    """Experiment file (or None), the values of section and of [kernel]."""
    if not args.config:
        return None, {}, {}
    from .config import load_experiment_file
    file = load_experiment_file(args.config)
    return file, dict(file.section(section)), dict(file.section('kernel'))


def _experiment_config(args, section, base, values, file, kernel):
    from .experiments import ExperimentConfig
    config = ExperimentConfig.from_section(values, base, file, section, kernel)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    return config


def _pop(values, key, cast, default, file, section):
    from .errors import ConfigError
    if key not in values:
        return default
    value = values.pop(key)
    try:
        return cast(value)
    except (TypeError, ValueError) as e:
        if file is not None:
            raise file.error(section, key, 'invalid value {!r}: {}'.format(value, e))
        raise ConfigError('invalid value {!r}: {}'.format(value, e), key='{}.{}'.format(section, key))


def _cell(value):
    from .helpers import format_float
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, bool):
        return int(value)
    return value


def write_csv(path, header, rows):
    """Write a CSV file with 17 significant digits for floats."""
    from .errors import OutputError
    try:
        with open(path, 'w', newline='', encoding='ascii') as fo:
            writer = csv.writer(fo, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    except OSError as e:
        raise OutputError(path, e.strerror or e)
    _logger().info('wrote {}', path)
    return path


@dataclass
class RunManifest:
    """Record of a run written as manifest.yaml next to its outputs."""

    command: str
    config_hash: str = ''
    version: str = ''
    parameters: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    started: float = field(default_factory=time.perf_counter)
    duration: float = 0.
    interrupted: bool = False

    def add(self, path):
        self.files.append(path)
        return path

    def check(self):
        """Every listed file exists with a nonzero size."""
        missing = [p for p in self.files if not os.path.isfile(p) or not os.path.getsize(p)]
        if missing:
            from .errors import OutputError
            raise OutputError(missing[0], 'missing or empty output')

    def write(self, out):
        import serialize
        from . import __version__
        from .errors import OutputError
        self.version = __version__
        self.duration = time.perf_counter() - self.started
        self.check()
        path = os.path.join(out, 'manifest.yaml')
        content = dict(command=self.command, config_hash=self.config_hash, version=self.version,
                       duration=round(self.duration, 3), interrupted=self.interrupted,
                       parameters=self.parameters,
                       files=[dict(path=os.path.basename(p), size=os.path.getsize(p)) for p in self.files])
        try:
            serialize.dump(content, path)
        except OSError as e:
            raise OutputError(path, e.strerror or e)
        _logger().info('wrote {}', path)
        return path


# ====================================
# Subcommands
# ====================================

@_exit_codes
def rate_sweep(args=None):
    """Monte Carlo convergence rates of the sampled Kuramoto system as a function of gamma.

    Writes rates.csv (gamma, n, trials, mean_error, stderr, alpha_gamma,
    theory_rate) and errors.csv (one row per trial).
    """
    from .experiments import ExperimentConfig, RateSweep

    parser = _parser('rate-sweep', rate_sweep.__doc__)
    parser.add_argument('--paper-scale', action='store_true',
                        help='n in {128, 256}, 200 trials, gamma in 0.05 ... 0.9')
    parser.add_argument('--coupling', choices=('sampled', 'averaged'), default='sampled')
    args = parser.parse_args(args)
    _setup(args)

    file, values, kernel = _load(args, 'rate-sweep')
    base = ExperimentConfig.paper_scale() if args.paper_scale else ExperimentConfig()
    config = _experiment_config(args, 'rate-sweep', base, values, file, kernel)
    manifest = RunManifest('rate-sweep', config.config_hash(), parameters=config.as_dict())

    log = _logger()
    sweep = RateSweep(config, args.threads, args.coupling)
    sweep.level_done.connect(lambda gamma, n: log.info('finished gamma={} n={}', gamma, n))

    try:
        report = sweep.run()
    except KeyboardInterrupt:
        log.warning('interrupted, writing the finished trials')
        report = sweep.report()
        manifest.interrupted = True

    manifest.add(write_csv(os.path.join(args.out, 'rates.csv'),
                           ('gamma', 'n', 'trials', 'mean_error', 'stderr', 'alpha_gamma', 'theory_rate'),
                           [(r.gamma, r.n, r.trials, r.mean_error, r.stderr, r.alpha_gamma, r.theory_rate)
                            for r in report.rows]))
    manifest.add(write_csv(os.path.join(args.out, 'errors.csv'),
                           ('gamma', 'n', 'trial', 'seed', 'sup_error', 'final_error', 'error', 'excluded'),
                           [(t.gamma, t.n, t.trial, t.seed, t.sup_error, t.final_error, t.error, t.excluded)
                            for t in report.trials]))
    if report.excluded:
        log.warning('{} trial(s) excluded after diverging', report.excluded)
    manifest.write(args.out)
    if manifest.interrupted:
        sys.exit(EXIT_INTERRUPTED)


@_exit_codes
def pixmap(args=None):
    """Adjacency matrices of W-random graphs as PGM images, one per gamma."""
    from .experiments import kernel_spec_from_section
    from .graphon import SparsitySchedule, cell_matrix
    from .grid import GridPartition
    from .helpers import as_tuple
    from .errors import DomainError
    from .sampling import MAX_PIXMAP_NODES, adjacency_pixmap, sample_graph

    parser = _parser('pixmap', pixmap.__doc__)
    parser.add_argument('--n', type=int, default=None, help='cells per axis (default 512)')
    parser.add_argument('--gamma', default=None, help='comma separated (default 0.25,0.5,0.75,0.95)')
    args = parser.parse_args(args)
    _setup(args)

    section = 'pixmap'
    file, values, kernel = _load(args, section)
    n = _pop(values, 'n', int, 512, file, section)
    gammas = _pop(values, 'gamma', as_tuple, (.25, .5, .75, .95), file, section)
    seed = _pop(values, 'seed', int, 0, file, section)
    if args.n:
        n = args.n
    if args.gamma:
        gammas = as_tuple(args.gamma)
    if args.seed is not None:
        seed = args.seed
    d = _pop(values, 'd', int, 1, file, section)
    if values:
        key = sorted(values)[0]
        raise _unknown(file, section, key)
    spec = kernel_spec_from_section(kernel, file, d=d)

    W = spec.build(d)
    partition = GridPartition(n, d)
    manifest = RunManifest('pixmap', parameters=dict(n=n, gamma=list(gammas), seed=seed, d=d, kernel=spec.kind))
    if partition.size > MAX_PIXMAP_NODES:
        raise DomainError('n**d = {} exceeds the pixmap limit of {} nodes'.format(partition.size, MAX_PIXMAP_NODES))
    for gamma in gammas:
        schedule = SparsitySchedule(gamma, d)
        graph = sample_graph(cell_matrix(W, partition, schedule, threads=args.threads), schedule, seed, args.threads)
        path = os.path.join(args.out, 'adj_n{}_g{:g}.pgm'.format(n, gamma))
        manifest.add(adjacency_pixmap(graph, path))
        _logger().info('wrote {} ({} edges)', path, graph.edge_count)
    manifest.write(args.out)


def _unknown(file, section, key):
    from .errors import ConfigError
    if file is not None:
        return file.error(section, key, 'unknown key')
    return ConfigError('unknown key', key='{}.{}'.format(section, key))


@_exit_codes
def project_study(args=None):
    """Decay of the L^p projection error of test functions over dyadic levels."""
    from .experiments import function_family, projection_rate_study
    from .helpers import as_tuple
    from .quadrature import QuadratureSpec

    parser = _parser('project-study', project_study.__doc__)
    parser.add_argument('--family', default=None, help='linear, indicator, power or expression (comma separated)')
    args = parser.parse_args(args)
    _setup(args)

    section = 'project-study'
    file, values, _ = _load(args, section)
    families = _pop(values, 'family', lambda v: as_tuple(v, str), ('linear', 'indicator', 'power'), file, section)
    if args.family:
        families = as_tuple(args.family, str)
    p = _pop(values, 'p', float, 2., file, section)
    levels = _pop(values, 'levels', lambda v: as_tuple(v, int), (8, 16, 32, 64, 128, 256, 512), file, section)
    exponent = _pop(values, 'exponent', float, .5, file, section)
    center = _pop(values, 'center', float, .5, file, section)
    threshold = _pop(values, 'threshold', float, 2 ** -.5, file, section)
    expression = _pop(values, 'expression', str, None, file, section)
    quad = _pop(values, 'on_unconverged', lambda v: QuadratureSpec(on_unconverged=v.strip()), QuadratureSpec(),
                file, section)
    if values:
        raise _unknown(file, section, sorted(values)[0])

    manifest = RunManifest('project-study', parameters=dict(family=list(families), p=p, levels=list(levels),
                                                           exponent=exponent, center=center,
                                                           threshold=threshold, expression=expression,
                                                           on_unconverged=quad.on_unconverged))
    rows = []
    for family in families:
        phi, predicted = function_family(family, 1, p, exponent, center, threshold, expression, levels)
        report = projection_rate_study(phi, p, levels, predicted, family=family, quad=quad)
        rows.extend((family, p, n, error, report.slope, report.predicted)
                    for n, error in zip(report.levels, report.errors))
        print('%s: fitted slope %.4f, predicted %.4f' % (family, report.slope, report.predicted))
    manifest.add(write_csv(os.path.join(args.out, 'projection.csv'),
                           ('family', 'p', 'n', 'error', 'fitted_slope', 'predicted_exponent'), rows))
    manifest.write(args.out)


@_exit_codes
def singular_study(args=None):
    """Truncation and projection errors of the singular kernel |x - y|**-lambda."""
    from .experiments import singular_study as study
    from .helpers import as_tuple

    parser = _parser('singular-study', singular_study.__doc__)
    parser.add_argument('--lambda', dest='lam', type=float, default=None)
    args = parser.parse_args(args)
    _setup(args)

    section = 'singular-study'
    file, values, _ = _load(args, section)
    lam = _pop(values, 'lambda', float, .25, file, section)
    if args.lam is not None:
        lam = args.lam
    d = _pop(values, 'd', int, 1, file, section)
    gamma = _pop(values, 'gamma', float, None, file, section)
    levels = _pop(values, 'levels', lambda v: as_tuple(v, int), (16, 32, 64, 128, 256), file, section)
    projection_max_n = _pop(values, 'projection_max_n', int, 64, file, section)
    if values:
        raise _unknown(file, section, sorted(values)[0])

    report = study(lam, d, gamma, levels, projection_max_n, threads=args.threads)
    print('optimal gamma = %.6f' % report.optimal_gamma)
    print('exponents at gamma = %.6f: truncation %.6f, projection %.6f, monte carlo %.6f'
          % ((report.gamma, ) + tuple(report.exponents)))
    print('predicted overall rate = %.6f' % report.predicted_overall_rate)

    manifest = RunManifest('singular-study', parameters=dict(lam=lam, d=d, gamma=report.gamma, levels=list(levels),
                                                            projection_max_n=projection_max_n))
    manifest.add(write_csv(os.path.join(args.out, 'singular.csv'),
                           ('n', 'alpha', 'truncation_error', 'projection_error',
                            'truncation_slope', 'projection_slope', 'predicted_truncation', 'predicted_projection'),
                           [(r.n, r.alpha, r.truncation_error, r.projection_error, report.truncation_slope,
                             report.projection_slope, report.exponents[0], report.exponents[1])
                            for r in report.rows]))
    manifest.write(args.out)


@_exit_codes
def gap_study(args=None):
    """Distance between the sampled and the averaged systems as n grows."""
    from .experiments import ExperimentConfig, sampled_vs_averaged

    parser = _parser('gap-study', gap_study.__doc__)
    args = parser.parse_args(args)
    _setup(args)

    section = 'gap-study'
    file, values, kernel = _load(args, section)
    base = ExperimentConfig(gammas=(.5, ), ns=(64, 128, 256), trials=20)
    config = _experiment_config(args, section, base, values, file, kernel)
    manifest = RunManifest('gap-study', config.config_hash(), parameters=config.as_dict())

    rows = []
    for gamma in config.gammas:
        report = sampled_vs_averaged(config, gamma, threads=args.threads)
        rows.extend((gamma, r.n, r.seeds, r.mean_gap, r.stderr, report.exponent, report.theory)
                    for r in report.rows)
        print('gamma=%g: fitted exponent %.4f, theory %.4f' % (gamma, report.exponent, report.theory))
    manifest.add(write_csv(os.path.join(args.out, 'gaps.csv'),
                           ('gamma', 'n', 'seeds', 'mean_gap', 'stderr', 'fitted_exponent', 'theory_exponent'),
                           rows))
    manifest.write(args.out)


@_exit_codes
def solve(args=None):
    """Single integration; dumps the checkpointed trajectory and its errors."""
    from .experiments import ExperimentConfig, solve as run

    parser = _parser('solve', solve.__doc__)
    parser.add_argument('--n', type=int, default=None)
    parser.add_argument('--gamma', type=float, default=None)
    parser.add_argument('--coupling', choices=('sampled', 'averaged'), default=None)
    args = parser.parse_args(args)
    _setup(args)

    section = 'solve'
    file, values, kernel = _load(args, section)
    n = _pop(values, 'n', int, 128, file, section)
    gamma = _pop(values, 'gamma', float, .25, file, section)
    coupling = _pop(values, 'coupling', str, 'sampled', file, section)
    if args.n:
        n = args.n
    if args.gamma is not None:
        gamma = args.gamma
    if args.coupling:
        coupling = args.coupling
    trial = _pop(values, 'trial', int, 0, file, section)
    base = ExperimentConfig(gammas=(gamma, ))
    config = _experiment_config(args, section, base, values, file, kernel)

    result = run(config, n, gamma, coupling, trial, args.threads)
    manifest = RunManifest('solve', config.config_hash(),
                           parameters=dict(config.as_dict(), n=n, gamma=gamma, coupling=coupling, trial=trial))

    rows = []
    for t, state, reference in zip(result.trajectory.times, result.trajectory.states, result.references):
        rows.extend((t, i + 1, u, ref) for i, (u, ref) in enumerate(zip(state, reference)))
    manifest.add(write_csv(os.path.join(args.out, 'trajectory.csv'), ('t', 'cell', 'u', 'reference'), rows))
    manifest.add(write_csv(os.path.join(args.out, 'solve_errors.csv'), ('t', 'error'),
                           list(zip(result.trajectory.times, result.errors))))
    manifest.write(args.out)


def config(args=None):
    """Get or set configuration variables.

    Example
    -------

    $ nonlocal-mc config core.quad_rtol 1e-8
    """

    from .config import CONFIG_FILE, FULL_CONFIG, cfg, save_config

    parser = argparse.ArgumentParser(prog='nonlocal-mc config', description='nonlocal-mc configuration')
    parser.add_argument('key', nargs='?', help='Configuration key', default=None)
    parser.add_argument('value', nargs='?', help='Configuration value', default=None)
    parser.add_argument('--show-all', action='store_true')
    parser.add_argument('--show-path', action='store_true')

    args = parser.parse_args(args)

    if args.show_path:
        print('Configuration file: %s' % CONFIG_FILE)

    if args.show_all:
        if args.key is None:
            for key in sorted(FULL_CONFIG.keys()):
                source, val = FULL_CONFIG[key]
                print('%s: %s = %s' % (source, key, val))
        else:
            key = args.key.lower()
            if key not in FULL_CONFIG:
                print('%s is not a valid key' % args.key)
                sys.exit(1)

            if args.value is None:
                source, val = FULL_CONFIG[key]
                print('%s: %s = %s' % (source, key, val))
            else:
                print('actual argument is not compatible with a set operation.')
                sys.exit(1)

    else:
        if args.key is None:
            for section in cfg.sections():
                for subkey in cfg[section].keys():
                    print('%s.%s = %s' % (section, subkey, cfg[section][subkey]))
        else:
            key = args.key.lower()
            if key not in FULL_CONFIG:
                print('%s is not a valid key' % args.key)
                sys.exit(1)

            section, subkey = key.split('.')
            if args.value is None:
                try:
                    print('%s' % cfg[section][subkey])
                except KeyError:
                    pass
            else:
                if section not in cfg:
                    cfg[section] = {}
                cfg[section][subkey] = args.value
                save_config()


#: name -> callable, the subcommands provided by this package.
SUBCOMMANDS = {'rate-sweep': rate_sweep,
               'pixmap': pixmap,
               'project-study': project_study,
               'singular-study': singular_study,
               'gap-study': gap_study,
               'solve': solve,
               'config': config}


if __name__ == '__main__':
    config()
