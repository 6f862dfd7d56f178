# -*- coding: utf-8 -*-

import math
import unittest

import numpy as np

from nonlocal_mc.core.errors import ToleranceNotMetError
from nonlocal_mc.core.quadrature import (QuadratureSpec, QuadratureWarning, _lobatto_rule, _unit_rule,
                                         integrate_box, integrate_boxes)
from nonlocal_mc.core.testsuite import capture_log, must_warn

BEST_EFFORT = QuadratureSpec(on_unconverged='ignore')


def step_at(c):
    return lambda x, owners: (x[:, 0] <= c).astype(float)


class TestQuadrature(unittest.TestCase):

    def test_invalid_spec(self):
        self.assertRaises(ValueError, QuadratureSpec, on_unconverged='na')
        self.assertRaises(ValueError, QuadratureSpec, rtol=-1)
        self.assertRaises(ValueError, QuadratureSpec, max_depth=0)

    def test_default_raises(self):
        self.assertEqual(QuadratureSpec().on_unconverged, 'raise')

    def test_polynomial(self):
        self.assertAlmostEqual(integrate_box(lambda x: x[:, 0] ** 3, [0.], [2.]), 4., places=12)
        self.assertAlmostEqual(integrate_box(lambda x: x[:, 0] * x[:, 1], [0., 0.], [1., 1.]), .25, places=12)

    def test_rules(self):
        points, weights = _unit_rule(1, 2)
        np.testing.assert_array_equal(points, [[.5, .5]])
        np.testing.assert_array_equal(weights, [1.])
        points, weights = _lobatto_rule(2, 1)
        np.testing.assert_allclose(points[:, 0], [0., 1.])
        np.testing.assert_allclose(weights, [.5, .5])
        points, weights = _lobatto_rule(4, 1)
        inner = 1. / math.sqrt(5.)
        np.testing.assert_allclose(points[:, 0], [0., (1. - inner) / 2., (1. + inner) / 2., 1.], atol=1e-15)
        np.testing.assert_allclose(weights, [1. / 12., 5. / 12., 5. / 12., 1. / 12.], rtol=1e-13)

    def test_midpoint_rule(self):
        # order 1 is the adaptive midpoint rule checked by the trapezoid rule
        spec = QuadratureSpec(order=1, rtol=1e-8, max_depth=16)
        self.assertAlmostEqual(integrate_box(lambda x: x[:, 0] ** 2 + 1., [0.], [1.], spec), 4. / 3., places=7)
        self.assertAlmostEqual(integrate_box(lambda x: np.exp(x[:, 0] + x[:, 1]), [0., 0.], [1., 1.],
                                             QuadratureSpec(order=1, rtol=1e-4, max_depth=10)),
                               (math.e - 1.) ** 2, delta=1e-3)
        # a single level of the midpoint rule on a linear function is exact
        totals, unconverged = integrate_boxes(lambda x, owners: 2 * x[:, 0], [[0.]], [[1.]], QuadratureSpec(order=1))
        self.assertEqual(totals[0], 1.)
        self.assertFalse(unconverged[0])

    def test_many_boxes(self):
        lo = np.array([[0.], [.5], [1.]])
        hi = np.array([[.5], [1.], [3.]])
        totals, unconverged = integrate_boxes(lambda x, owners: np.sin(x[:, 0]), lo, hi)
        np.testing.assert_allclose(totals, np.cos(lo[:, 0]) - np.cos(hi[:, 0]), rtol=1e-9)
        self.assertFalse(unconverged.any())

    def test_owners(self):
        lo = np.array([[0.], [0.]])
        hi = np.array([[1.], [1.]])
        weights = np.array([1., 3.])
        totals, _ = integrate_boxes(lambda x, owners: weights[owners] * np.ones(len(x)), lo, hi)
        np.testing.assert_allclose(totals, [1., 3.])

    def test_empty(self):
        totals, unconverged = integrate_boxes(step_at(.5), np.zeros((0, 1)), np.zeros((0, 1)))
        self.assertEqual(totals.size, 0)
        self.assertEqual(unconverged.size, 0)

    def test_jump_on_a_face(self):
        # the value on the face of a cell does not count for the interior
        totals, unconverged = integrate_boxes(step_at(.5), [[0.], [.5]], [[.5], [1.]])
        np.testing.assert_allclose(totals, [.5, 0.], atol=1e-15)
        self.assertFalse(unconverged.any())

    def test_discontinuity_raises(self):
        with self.assertRaises(ToleranceNotMetError) as cm:
            integrate_boxes(step_at(2 ** -.5), [[0.]], [[1.]])
        self.assertEqual(cm.exception.index, 0)

        totals, unconverged = integrate_boxes(step_at(2 ** -.5), [[0.]], [[1.]], BEST_EFFORT)
        self.assertTrue(unconverged[0])
        self.assertAlmostEqual(totals[0], 2 ** -.5, delta=2. ** -BEST_EFFORT.max_depth)

    def test_jump_near_a_face(self):
        # the jump at 1/sqrt 2 lies in the outer strip of [1/2, 3/4] where no
        # nested Legendre node falls at any depth
        with self.assertRaises(ToleranceNotMetError):
            integrate_boxes(step_at(2 ** -.5), [[.5]], [[.75]])
        totals, unconverged = integrate_boxes(step_at(2 ** -.5), [[.5]], [[.75]], BEST_EFFORT)
        self.assertTrue(unconverged[0])
        self.assertAlmostEqual(totals[0], 2 ** -.5 - .5, delta=.25 * 2. ** -BEST_EFFORT.max_depth)

    def test_every_jump_is_seen(self):
        for c in (.001, .013, .04, .3, .61, .95, .987, .9991):
            totals, unconverged = integrate_boxes(step_at(c), [[0.]], [[1.]], BEST_EFFORT)
            self.assertTrue(unconverged[0], msg=c)
            self.assertAlmostEqual(totals[0], c, delta=2. ** -BEST_EFFORT.max_depth, msg=c)

    def test_max_depth_index(self):
        lo = np.array([[0.], [0.], [0.]])
        hi = np.array([[1.], [1.], [1.]])
        smooth_then_jump = lambda x, owners: np.where(owners == 2, (x[:, 0] <= .3).astype(float), x[:, 0])
        with self.assertRaises(ToleranceNotMetError) as cm:
            integrate_boxes(smooth_then_jump, lo, hi, QuadratureSpec(max_depth=4), labels=['a', 'b', 'c'])
        self.assertEqual(cm.exception.index, 'c')
        self.assertAlmostEqual(cm.exception.estimate[0], .5, places=14)

    def test_on_unconverged(self):
        shallow = dict(rtol=1e-14, atol=0., max_depth=2)
        with self.assertRaises(ToleranceNotMetError) as cm:
            integrate_boxes(step_at(2 ** -.5), [[0.]], [[1.]], QuadratureSpec(on_unconverged='raise', **shallow),
                            labels=[(1, 2)])
        self.assertEqual(cm.exception.index, (1, 2))
        self.assertIsNotNone(cm.exception.estimate)

        with must_warn(QuadratureWarning, 1) as msg:
            totals, unconverged = integrate_boxes(step_at(2 ** -.5), [[0.]], [[1.]],
                                                  QuadratureSpec(on_unconverged='warn', **shallow))
        self.assertFalse(msg, msg=msg)
        self.assertTrue(unconverged[0])

        with capture_log() as handler:
            integrate_boxes(step_at(2 ** -.5), [[0.]], [[1.]], QuadratureSpec(on_unconverged='ignore', **shallow))
        self.assertTrue(any('did not converge' in line for line in handler.history))


if __name__ == '__main__':
    unittest.main()
