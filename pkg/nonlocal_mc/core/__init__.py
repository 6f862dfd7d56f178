# -*- coding: utf-8 -*-
"""
    nonlocal_mc.core
    ~~~~~~~~~~~~~~~~

    Semidiscrete approximation of nonlocal diffusion equations on
    W-random graphs.

    The nonlocal_mc.core package provides uniform partitions and step
    function projections, graphon kernels and their cell averages, the
    sampling of sparse W-random graphs, the sampled and averaged ODE
    systems with a fixed step integrator, and the convergence rate
    experiments built on top of them.

    :copyright: 2026 by The nonlocal-mc Authors
    :license: BSD, see LICENSE for more details.
"""

import pkg_resources

try:
    __version__ = pkg_resources.get_distribution('nonlocal-mc').version
except:
    __version__ = "unknown"

from .log import LOGGER
from .errors import (DomainError, PreconditionError, NotSupportedError, ToleranceNotMetError,
                     DivergenceError, ConfigError, OutputError)
from .quadrature import QuadratureSpec
from .grid import (GridPartition, StepFunction, cell_average, cell_averages, project_step,
                   lp_error, lp_modulus, box_counting)
from .graphon import (Graphon, SparsitySchedule, CellKernelMatrix, cell_matrix, split_sign, truncate,
                      optimal_gamma_singular, singular_error_exponents)
from .sampling import SparseGraph, sample_graph, degree_stats, adjacency_pixmap
from .dynamics import (InteractionSpec, SemidiscreteSystem, TimeGrid, rhs_sampled, rhs_averaged,
                       rk4_integrate, twisted_state, exact_kuramoto_reference, discrete_l2_distance)
from .experiments import (ExperimentConfig, run_trial, estimate_rate, rate_sweep, sampled_vs_averaged,
                          projection_rate_study)

__all__ = ['GridPartition', 'StepFunction', 'project_step', 'lp_error', 'lp_modulus', 'box_counting',
           'Graphon', 'SparsitySchedule', 'CellKernelMatrix', 'cell_matrix', 'sample_graph',
           'SemidiscreteSystem', 'rk4_integrate', 'ExperimentConfig', 'rate_sweep']


def test():
    """Run all tests.

    Parameters
    ----------

    Returns
    -------
    unittest.TestResult

    """
    from .testsuite import run
    return run()
