# -*- coding: utf-8 -*-

import math
import unittest

import numpy as np

from nonlocal_mc.core.errors import DomainError, OutputError
from nonlocal_mc.core.graphon import CellKernelMatrix, SparsitySchedule, band, cell_matrix, constant
from nonlocal_mc.core.grid import GridPartition
from nonlocal_mc.core.sampling import (MAX_PIXMAP_NODES, SparseGraph, adjacency_pixmap, degree_stats,
                                       read_pixmap, row_generator, sample_graph, write_edge_list)
from nonlocal_mc.core.testsuite import TempDirTestCase, slow


def ones(n, d=1):
    return cell_matrix(constant(1., d), GridPartition(n, d), SparsitySchedule(0., d))


class TestSparseGraph(unittest.TestCase):

    def test_from_rows(self):
        g = SparseGraph.from_rows([np.array([0, 2]), np.array([], dtype=int), np.array([1])])
        self.assertEqual(g.node_count, 3)
        self.assertEqual(g.edge_count, 3)
        self.assertEqual(g.row(0).tolist(), [0, 2])
        self.assertEqual(g.row(1).tolist(), [])
        self.assertEqual(g.sources().tolist(), [0, 0, 2])
        self.assertEqual(g.out_degrees().tolist(), [2, 0, 1])
        csr = g.to_csr()
        self.assertEqual(csr.shape, (3, 3))
        self.assertEqual(csr.toarray().tolist(), [[1, 0, 1], [0, 0, 0], [0, 1, 0]])

    def test_invalid(self):
        self.assertRaises(DomainError, SparseGraph, [0, 2], [1])
        self.assertRaises(DomainError, SparseGraph, [1, 1], [0])

    def test_read_only(self):
        g = SparseGraph.from_rows([np.array([0])])
        with self.assertRaises(ValueError):
            g.column_indices[0] = 1


class TestSampling(unittest.TestCase):

    def test_empty(self):
        cells = CellKernelMatrix(GridPartition(4), np.zeros((4, 4)))
        g = sample_graph(cells, SparsitySchedule(0.), 1)
        self.assertEqual(g.edge_count, 0)
        self.assertEqual(degree_stats(g).mean, 0.)

    def test_complete(self):
        g = sample_graph(ones(4), SparsitySchedule(0.), 7)
        self.assertEqual(g.edge_count, 16)
        for i in range(4):
            self.assertEqual(g.row(i).tolist(), [0, 1, 2, 3])

    def test_complete_two_dimensional(self):
        g = sample_graph(ones(4, 2), SparsitySchedule(0., 2), 7)
        stats = degree_stats(g)
        self.assertEqual(g.edge_count, 16 ** 2)
        self.assertEqual(stats.mean, 16.)
        self.assertEqual((stats.min, stats.max), (16, 16))
        self.assertEqual(stats.histogram[16], 16)

    def test_metadata(self):
        g = sample_graph(ones(16), SparsitySchedule(.5), 3)
        self.assertEqual(g.alpha, .25)
        self.assertEqual(g.seed, 3)
        self.assertEqual(g.gamma, .5)
        self.assertEqual(g.column_indices.dtype, np.int32)
        self.assertEqual(g.row_offsets.dtype, np.int64)

    def test_sorted_rows(self):
        g = sample_graph(ones(64), SparsitySchedule(.3), 11)
        for i in range(g.node_count):
            row = g.row(i)
            self.assertTrue(np.all(np.diff(row) > 0))

    def test_determinism(self):
        cells = cell_matrix(band(.2), GridPartition(600), SparsitySchedule(.25))
        schedule = SparsitySchedule(.25)
        one = sample_graph(cells, schedule, 42, threads=1)
        many = sample_graph(cells, schedule, 42, threads=4)
        self.assertEqual(one, many)
        self.assertEqual(one, sample_graph(cells, schedule, 42, threads=2))
        self.assertNotEqual(one, sample_graph(cells, schedule, 43, threads=1))

    def test_row_generator(self):
        a = row_generator(5, 3).random(4)
        np.testing.assert_array_equal(a, row_generator(5, 3).random(4))
        self.assertFalse(np.array_equal(a, row_generator(5, 4).random(4)))
        self.assertFalse(np.array_equal(a, row_generator(6, 3).random(4)))

    def test_edge_count(self):
        cells = ones(100)
        schedule = SparsitySchedule(.5)
        counts = [sample_graph(cells, schedule, seed, threads=1).edge_count for seed in range(50)]
        self.assertLess(abs(np.mean(counts) - 1000.), 3 * math.sqrt(1000. * .9))

    def test_pairs_are_unbiased(self):
        n, seeds = 16, 2000
        cells = cell_matrix(band(.2), GridPartition(n), SparsitySchedule(.25))
        schedule = SparsitySchedule(.25)
        expected = cells.probabilities(schedule.alpha(n))
        counts = np.zeros((n, n))
        for seed in range(seeds):
            counts += sample_graph(cells, schedule, seed, threads=1).to_csr().toarray()
        frequencies = counts / seeds
        certain = (expected == 0.) | (expected == 1.)
        np.testing.assert_array_equal(frequencies[certain], expected[certain])
        p = expected[~certain]
        z = (frequencies[~certain] - p) / np.sqrt(p * (1. - p) / seeds)
        self.assertLess(np.abs(z).max(), 4.5)

    def test_mean_degree(self):
        cells = ones(256)
        schedule = SparsitySchedule(.5)
        means = [degree_stats(sample_graph(cells, schedule, seed, threads=1)).mean for seed in range(20)]
        self.assertTrue(13. <= np.mean(means) <= 19., means)

    def test_sparsity_scaling(self):
        # the mean degree grows like n**(1 - gamma)
        for n in (64, 128, 256):
            cells = ones(n)
            for gamma in (.25, .5, .75):
                schedule = SparsitySchedule(gamma)
                mean = np.mean([degree_stats(sample_graph(cells, schedule, seed, threads=1)).mean
                                for seed in range(20)])
                ratio = mean / n ** (1. - gamma)
                self.assertTrue(.8 <= ratio <= 1.2, (n, gamma, ratio))

    @slow
    def test_edge_count_distribution(self):
        cells = ones(100)
        schedule = SparsitySchedule(.5)
        counts = np.array([sample_graph(cells, schedule, seed, threads=1).edge_count for seed in range(1000)])
        self.assertLess(abs(counts.mean() - 1000.), 4 * math.sqrt(900. / 1000.))
        self.assertLess(abs(counts.var(ddof=1) / 900. - 1.), .15)

    def test_too_many_nodes(self):
        class Huge:
            partition = GridPartition(2 ** 16, 2)

        self.assertRaises(DomainError, sample_graph, Huge(), SparsitySchedule(0., 2), 0)


class TestPixmap(TempDirTestCase):

    def test_empty(self):
        g = SparseGraph.from_rows([np.zeros(0, dtype=np.int32)] * 4)
        path = adjacency_pixmap(g, self.path('empty.pgm'))
        with open(path, 'rb') as fi:
            self.assertEqual(fi.readline(), b'P5 4 4 255\n')
        self.assertTrue(np.all(read_pixmap(path) == 255))

    def test_complete(self):
        g = sample_graph(ones(2), SparsitySchedule(0.), 0)
        path = adjacency_pixmap(g, self.path('complete.pgm'))
        image = read_pixmap(path)
        self.assertEqual(image.shape, (2, 2))
        self.assertTrue(np.all(image == 0))

    def test_pixels(self):
        g = SparseGraph.from_rows([np.array([1]), np.array([], dtype=int), np.array([0, 2])])
        image = read_pixmap(adjacency_pixmap(g, self.path('g.pgm')))
        self.assertEqual((image == 0).tolist(), [[False, True, False], [False, False, False], [True, False, True]])

    def test_band_diagonal(self):
        n = 64
        g = sample_graph(cell_matrix(band(.2), GridPartition(n), SparsitySchedule(0.)), SparsitySchedule(0.), 0)
        image = read_pixmap(adjacency_pixmap(g, self.path('band.pgm')))
        self.assertTrue(np.all(np.diag(image) == 0))
        # the wrap around corners are dark as well
        self.assertEqual(image[0, n - 1], 0)
        self.assertEqual(image[0, n // 2], 255)

    def test_limits(self):
        g = SparseGraph(np.zeros(MAX_PIXMAP_NODES + 2, dtype=np.int64), np.zeros(0, dtype=np.int32))
        self.assertRaises(DomainError, adjacency_pixmap, g, self.path('big.pgm'))
        small = SparseGraph.from_rows([np.array([0])])
        self.assertRaises(OutputError, adjacency_pixmap, small, self.path('missing', 'g.pgm'))

    def test_not_a_pixmap(self):
        with open(self.path('junk.pgm'), 'wb') as fo:
            fo.write(b'hello world\n')
        self.assertRaises(DomainError, read_pixmap, self.path('junk.pgm'))

    def test_edge_list(self):
        g = SparseGraph.from_rows([np.array([1]), np.array([0, 1])])
        path = write_edge_list(g, self.path('edges.txt'))
        with open(path) as fi:
            self.assertEqual(fi.read().split('\n')[:3], ['0 1', '1 0', '1 1'])


if __name__ == '__main__':
    unittest.main()
