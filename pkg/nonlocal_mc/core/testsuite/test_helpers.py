# -*- coding: utf-8 -*-

import doctest
import unittest

import nonlocal_mc.core.helpers as helpers
from nonlocal_mc.core.errors import DomainError
from nonlocal_mc.core.helpers import as_tuple, format_float, loglog_slope, mix_seed


class TestHelpers(unittest.TestCase):

    def test_docs(self):
        self.assertEqual(doctest.testmod(helpers).failed, 0)

    def test_mix_seed(self):
        seeds = {mix_seed(0, a, b) for a in range(20) for b in range(20)}
        self.assertEqual(len(seeds), 400)
        self.assertTrue(all(0 <= s < 2 ** 64 for s in seeds))
        self.assertEqual(mix_seed(-1), mix_seed(2 ** 64 - 1))

    def test_slope(self):
        self.assertAlmostEqual(loglog_slope([8, 16, 32], [1., .5, .25]), -1.)
        self.assertRaises(DomainError, loglog_slope, [8], [1.])
        self.assertRaises(DomainError, loglog_slope, [8, 16], [1., 0.])
        self.assertRaises(DomainError, loglog_slope, [8, 8], [1., 2.])

    def test_format(self):
        self.assertEqual(format_float(1.), '1')
        self.assertEqual(format_float(float('-inf')), '-inf')
        self.assertEqual(float(format_float(1. / 3.)), 1. / 3.)

    def test_as_tuple(self):
        self.assertEqual(as_tuple('8, 16,', int), (8, 16))
        self.assertEqual(as_tuple([1, 2]), (1., 2.))
        self.assertRaises(ValueError, as_tuple, 'a, b')


if __name__ == '__main__':
    unittest.main()
