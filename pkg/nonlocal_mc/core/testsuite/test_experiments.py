# -*- coding: utf-8 -*-

import doctest
import math
import threading
import unittest
from unittest import mock

import numpy as np

import nonlocal_mc.core.experiments as experiments
from nonlocal_mc.core.dynamics import InteractionSpec
from nonlocal_mc.core.errors import ConfigError, DomainError
from nonlocal_mc.core.experiments import (ExperimentConfig, RateSweep, TrialResult, aggregate, estimate_rate,
                                          fit_rate, function_family, kernel_spec_from_section,
                                          projection_rate_study, rate_sweep, run_trial, sampled_vs_averaged,
                                          singular_study, solve, trial_seed)
from nonlocal_mc.core.graphon import KernelSpec
from nonlocal_mc.core.testsuite import slow


def tiny(**kwargs):
    values = dict(kernel=KernelSpec('band', r=.2), gammas=(.25, .5), ns=(8, 16), trials=3,
                  t1=.2, dt=.05, checkpoint=.1)
    values.update(kwargs)
    return ExperimentConfig(**values)


class TestRates(unittest.TestCase):

    def test_docs(self):
        self.assertEqual(doctest.testmod(experiments).failed, 0)

    def test_estimate_rate(self):
        self.assertAlmostEqual(estimate_rate(.2, .1), 1.)
        self.assertEqual(estimate_rate(.1, .1), 0.)
        self.assertAlmostEqual(estimate_rate(.02, .0141), math.log(.02 / .0141) / math.log(2.))
        self.assertRaises(DomainError, estimate_rate, 0., .1)
        self.assertRaises(DomainError, estimate_rate, .1, -1.)

    def test_fit_rate(self):
        self.assertAlmostEqual(fit_rate((64, 128), (.02, .0141)), estimate_rate(.02, .0141))
        self.assertAlmostEqual(fit_rate((8, 16, 32), (1., .5, .25)), 1.)
        self.assertAlmostEqual(fit_rate((8, 32), (1., .25)), 1.)


class TestConfig(unittest.TestCase):

    def assertKey(self, key, **kwargs):
        with self.assertRaises(ConfigError) as cm:
            ExperimentConfig(**kwargs)
        self.assertEqual(cm.exception.key, key)

    def test_defaults(self):
        config = ExperimentConfig()
        self.assertEqual(config.gammas, (.2, .35, .5, .65, .8))
        self.assertEqual(config.ns, (64, 128))
        self.assertEqual(config.r, .2)
        self.assertEqual(config.time_grid().steps, 100)
        full = ExperimentConfig.paper_scale()
        self.assertEqual(full.ns, (128, 256))
        self.assertEqual(full.trials, 200)
        self.assertEqual(len(full.gammas), 18)
        self.assertEqual((full.gammas[0], full.gammas[-1]), (.05, .9))

    def test_invalid(self):
        self.assertKey('gamma', gammas=(.5, 1.))
        self.assertKey('gamma', gammas=())
        self.assertKey('n', ns=(64, ))
        self.assertKey('n', ns=(64, 96))
        self.assertKey('n', ns=(128, 64))
        self.assertKey('trials', trials=0)
        self.assertKey('error', error='mean')
        self.assertKey('reference', reference='exact')
        self.assertKey('dt', dt=.3)

    def test_from_section(self):
        config = ExperimentConfig.from_section({'gamma': '0.25, 0.5', 'N': '8,16', 'seeds': '4', 'seed': '9',
                                                'exact_average': 'yes'},
                                               kernel={'kind': 'singular', 'lambda': '0.25'})
        self.assertEqual(config.gammas, (.25, .5))
        self.assertEqual(config.ns, (8, 16))
        self.assertEqual(config.trials, 4)
        self.assertEqual(config.seed, 9)
        self.assertTrue(config.exact_average)
        self.assertEqual(config.kernel, KernelSpec('singular', lam=.25))

    def test_from_section_errors(self):
        for values, key in (({'bogus': '1'}, 'rate-sweep.bogus'),
                            ({'trials': 'many'}, 'rate-sweep.trials'),
                            ({'gamma': '1.5'}, 'rate-sweep.gamma'),
                            ({'exact_average': 'maybe'}, 'rate-sweep.exact_average')):
            with self.assertRaises(ConfigError) as cm:
                ExperimentConfig.from_section(values)
            self.assertEqual(cm.exception.key, key)
        with self.assertRaises(ConfigError) as cm:
            ExperimentConfig.from_section({}, kernel={'kind': 'gaussian'})
        self.assertEqual(cm.exception.key, 'kernel.kind')
        with self.assertRaises(ConfigError) as cm:
            ExperimentConfig.from_section({}, kernel={'radius': '0.1'})
        self.assertEqual(cm.exception.key, 'kernel.radius')

    def test_kernel_is_validated(self):
        with self.assertRaises(ConfigError) as cm:
            kernel_spec_from_section({'kind': 'expression', 'expression': '2', 'sup_bound': '1'})
        self.assertEqual(cm.exception.key, 'kernel.expression')
        with self.assertRaises(ConfigError) as cm:
            ExperimentConfig.from_section({}, kernel={'kind': 'expression', 'expression': 'x - y',
                                                      'sup_bound': '1', 'nonnegative': 'yes'})
        self.assertEqual(cm.exception.key, 'kernel.expression')
        spec = kernel_spec_from_section({'kind': 'expression', 'expression': 'x - y', 'sup_bound': '1',
                                         'nonnegative': 'no'})
        self.assertFalse(spec.nonnegative)
        self.assertFalse(spec.build().nonnegative)
        self.assertTrue(kernel_spec_from_section({'kind': 'expression', 'expression': 'x * y',
                                                  'sup_bound': '1'}).build().nonnegative)
        with self.assertRaises(ConfigError) as cm:
            kernel_spec_from_section({'kind': 'band', 'nonnegative': 'perhaps'})
        self.assertEqual(cm.exception.key, 'kernel.nonnegative')

    def test_interaction_is_validated(self):
        broken = InteractionSpec(lambda w: 2 * np.sin(w), 2.)
        with mock.patch.object(experiments, '_interaction', return_value=broken):
            with self.assertRaises(ConfigError) as cm:
                ExperimentConfig.from_section({'omega': '0.5'})
        self.assertEqual(cm.exception.key, 'rate-sweep.omega')

    def test_hash(self):
        config = tiny()
        self.assertEqual(config.config_hash(), tiny().config_hash())
        self.assertNotEqual(config.config_hash(), tiny(seed=1).config_hash())
        self.assertEqual(len(config.config_hash()), 64)
        self.assertEqual(config.as_dict()['kernel'], {'kind': 'band', 'r': .2, 'lam': .25, 'value': 1.,
                                                      'periodic': True})

    def test_trial_seed(self):
        seeds = {trial_seed(0, g, n, t) for g in range(3) for n in (64, 128) for t in range(10)}
        self.assertEqual(len(seeds), 60)
        self.assertEqual(trial_seed(0, 1, 64, 3), trial_seed(0, 1, 64, 3))
        self.assertNotEqual(trial_seed(0, 1, 64, 3), trial_seed(1, 1, 64, 3))


class TestTrials(unittest.TestCase):

    def test_synchronous_equilibrium(self):
        config = tiny(kernel=KernelSpec('constant'), gammas=(0., ), q=0, omega=0.)
        result = run_trial(config, 0., 8, 0)
        self.assertLess(result.error, 1e-10)
        self.assertEqual(result.edges, 64)
        self.assertFalse(result.excluded)

    def test_sampled_and_averaged(self):
        config = tiny(ns=(32, 64), t1=1., dt=.01)
        sampled = [run_trial(config, .25, 32, trial) for trial in range(4)]
        averaged = run_trial(config, .25, 32, 0, coupling='averaged')
        mean = np.mean([r.error for r in sampled])
        self.assertGreater(mean, 0.)
        self.assertLess(averaged.error, mean)
        self.assertEqual(averaged.edges, 0)
        for result in sampled:
            self.assertGreaterEqual(result.sup_error, result.final_error)
            self.assertEqual(result.error, result.sup_error)

    def test_final_time_error(self):
        config = tiny(error='final-time')
        result = run_trial(config, .5, 8, 1)
        self.assertEqual(result.error, result.final_error)

    def test_continuum_reference(self):
        config = tiny(kernel=KernelSpec('constant'), gammas=(0., ), q=1, omega=0., reference='continuum')
        result = run_trial(config, 0., 8, 0, coupling='averaged')
        # a rigid wave, so the error stays the projection error of the initial state
        self.assertAlmostEqual(result.error, 2 * math.pi / 8 / (2 * math.sqrt(3.)), places=9)

    def test_reproducible(self):
        config = tiny()
        self.assertEqual(run_trial(config, .5, 16, 2).error, run_trial(config, .5, 16, 2).error)
        self.assertRaises(DomainError, run_trial, config, .5, 16, 2, coupling='dense')


class TestSweep(unittest.TestCase):

    def test_threads(self):
        config = tiny()
        one = rate_sweep(config, threads=1)
        many = rate_sweep(config, threads=3)
        self.assertEqual([t.error for t in one.trials], [t.error for t in many.trials])
        self.assertEqual(len(one.rows), 4)
        self.assertEqual(set(one.rates), {.25, .5})
        self.assertEqual(one.excluded, 0)
        self.assertEqual(one.metadata['config_hash'], config.config_hash())
        for row in one.rows:
            self.assertEqual(row.trials, 3)
            self.assertAlmostEqual(row.theory_rate, (1 - row.gamma) / 2)

    def test_signals(self):
        config = tiny(gammas=(.5, ))
        sweep = RateSweep(config, threads=2)
        done, levels = [], []
        lock = threading.Lock()

        def on_trial(result):
            with lock:
                done.append(result)

        def on_level(gamma, n):
            with lock:
                levels.append((gamma, n))

        sweep.trial_done.connect(on_trial)
        sweep.level_done.connect(on_level)
        report = sweep.run()
        self.assertEqual(len(done), 6)
        self.assertEqual(sorted(levels), [(.5, 8), (.5, 16)])
        self.assertIn('wall_time', report.metadata)

    def test_cells_shared(self):
        sweep = RateSweep(tiny(), threads=1)
        self.assertIs(sweep.cells(.25, 8), sweep.cells(.5, 8))
        singular_sweep = RateSweep(tiny(kernel=KernelSpec('singular', lam=.25)), threads=1)
        self.assertIsNot(singular_sweep.cells(.25, 8), singular_sweep.cells(.5, 8))

    def test_report_before_run(self):
        report = RateSweep(tiny(), threads=1).report()
        self.assertEqual(report.rows, [])
        self.assertEqual(report.trials, [])

    def test_aggregate_excluded(self):
        config = tiny(gammas=(.5, ), trials=2)
        results = [TrialResult(.5, 8, 0, 1, .2, .1, .2), TrialResult(.5, 8, 1, 2, excluded=True, reason='inf'),
                   TrialResult(.5, 16, 0, 3, .1, .05, .1), TrialResult(.5, 16, 1, 4, .1, .05, .1)]
        rows, rates = aggregate(config, results)
        self.assertEqual([(r.n, r.trials, r.excluded) for r in rows], [(8, 1, 1), (16, 2, 0)])
        self.assertAlmostEqual(rates[.5], 1.)
        self.assertEqual(rows[0].stderr, 0.)

    def test_aggregate_partial(self):
        config = tiny(gammas=(.5, ), trials=2)
        rows, rates = aggregate(config, [TrialResult(.5, 8, 0, 1, .2, .1, .2), None, None, None])
        self.assertEqual(len(rows), 1)
        self.assertTrue(math.isnan(rates[.5]))

    @slow
    def test_rates_decrease_with_gamma(self):
        report = rate_sweep(ExperimentConfig(gammas=(.2, .5, .8)))
        rates = [report.rates[gamma] for gamma in (.2, .5, .8)]
        self.assertTrue(rates[0] > rates[1] > rates[2], rates)

    @slow
    def test_rate_near_theory(self):
        config = ExperimentConfig(gammas=(.5, ), ns=(64, 128), trials=30)
        report = rate_sweep(config)
        self.assertAlmostEqual(report.rates[.5], .25, delta=.1)


class TestStudies(unittest.TestCase):

    def test_gap_complete_graph(self):
        config = tiny(kernel=KernelSpec('constant'), gammas=(0., ))
        report = sampled_vs_averaged(config, 0., ns=(8, 16), seeds=2, threads=1)
        self.assertEqual([row.n for row in report.rows], [8, 16])
        for row in report.rows:
            self.assertLess(row.mean_gap, 1e-10)
        self.assertEqual(report.theory, .5)

    def test_gap_positive(self):
        report = sampled_vs_averaged(tiny(), .5, ns=(16, 32), seeds=3, threads=2)
        self.assertTrue(all(row.mean_gap > 0 for row in report.rows))
        self.assertEqual(report.theory, .25)

    @slow
    def test_gap_grows_with_gamma(self):
        config = ExperimentConfig(ns=(128, 256), trials=20)
        gaps = [sampled_vs_averaged(config, gamma, ns=(128, ), seeds=20).rows[0].mean_gap
                for gamma in (.2, .5, .8)]
        self.assertTrue(gaps[0] < gaps[1] < gaps[2], gaps)

    @slow
    def test_gap_exponent(self):
        config = ExperimentConfig(gammas=(.5, ), ns=(64, 128, 256), trials=20)
        report = sampled_vs_averaged(config, .5)
        self.assertEqual(report.theory, .25)
        self.assertTrue(.15 <= report.exponent <= .35, report.exponent)

    def test_singular_truncation_rate(self):
        report = singular_study(.25, levels=(16, 32, 64, 128, 256), projection_max_n=0, threads=1)
        self.assertAlmostEqual(report.truncation_slope, 1. / 6., delta=.3 / 6.)
        self.assertTrue(all(math.isnan(row.projection_error) for row in report.rows))

    def test_projection_linear(self):
        phi, predicted = function_family('linear')
        report = projection_rate_study(phi, 2, (8, 16, 32, 64), predicted, family='linear')
        self.assertAlmostEqual(report.slope, 1., places=6)
        self.assertEqual(report.predicted, 1.)
        self.assertEqual(len(report.errors), 4)

    def test_projection_indicator(self):
        levels = (8, 16, 32, 64)
        phi, predicted = function_family('indicator', levels=levels)
        self.assertAlmostEqual(predicted, .5)
        report = projection_rate_study(phi, 2, levels, predicted, family='indicator')
        self.assertAlmostEqual(report.slope, .5, delta=.1)

    def test_projection_power(self):
        phi, predicted = function_family('power', exponent=.25)
        report = projection_rate_study(phi, 2, (8, 16, 32, 64), predicted, family='power')
        self.assertGreaterEqual(report.slope, predicted - .05)

    def test_families(self):
        phi, predicted = function_family('expression', expression='x ** 2')
        self.assertTrue(math.isnan(predicted))
        np.testing.assert_allclose(phi(np.array([[.5], [1.]])), [.25, 1.])
        self.assertRaises(DomainError, function_family, 'expression')
        self.assertRaises(DomainError, function_family, 'wavelet')
        self.assertRaises(DomainError, function_family, 'linear', d=2)
        self.assertRaises(DomainError, projection_rate_study, phi, 2, (8, 12))

    def test_singular(self):
        report = singular_study(.25, levels=(16, 32, 64), projection_max_n=16, threads=1)
        self.assertAlmostEqual(report.optimal_gamma, 1. / 6.)
        self.assertAlmostEqual(report.gamma, 1. / 6.)
        np.testing.assert_allclose(report.exponents, (1. / 6., 1. / 6., 5. / 12.))
        self.assertAlmostEqual(report.predicted_overall_rate, 1. / 6.)
        self.assertAlmostEqual(report.truncation_slope, 1. / 6., delta=.01)
        self.assertGreater(report.rows[0].projection_error, 0.)
        self.assertTrue(math.isnan(report.rows[1].projection_error))
        self.assertTrue(math.isnan(report.projection_slope))

    def test_solve(self):
        config = tiny()
        result = solve(config, 8, .5, threads=1)
        self.assertEqual(result.trajectory.states.shape, (3, 8))
        self.assertEqual(result.references.shape, (3, 8))
        self.assertEqual(len(result.errors), 3)
        self.assertAlmostEqual(result.errors[0], 0., places=12)
        self.assertGreater(result.edges, 0)
        averaged = solve(config, 8, .5, coupling='averaged', threads=1)
        self.assertEqual(averaged.edges, 0)
        self.assertRaises(DomainError, solve, config, 8, .5, coupling='dense')


if __name__ == '__main__':
    unittest.main()
