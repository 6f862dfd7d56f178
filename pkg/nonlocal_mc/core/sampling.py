# -*- coding: utf-8 -*-
"""
    nonlocal_mc.core.sampling
    ~~~~~~~~~~~~~~~~~~~~~~~~~

    Sparse W-random graphs: every ordered pair of nodes (i, j), including
    i = j, is an independent Bernoulli(alpha_n W_{n,ij}) edge.

    Row i draws its n**d uniforms from a Philox counter-based generator
    keyed by (seed, i), so the graph does not depend on the order in which
    rows are generated or on the number of workers.

    :copyright: 2026 by The nonlocal-mc Authors
    :license: BSD, see LICENSE for more details.
"""

from collections import namedtuple
from concurrent import futures

import numpy as np
from scipy import sparse
from stringparser import Parser

from . import config
from .errors import DomainError, OutputError
from .helpers import MASK64
from .log import get_logger

_LOG = get_logger('nonlocal_mc.sampling')

#: Largest node count accepted by adjacency_pixmap.
MAX_PIXMAP_NODES = 4096

ROW_BLOCK = 256

PGM_HEADER = Parser('P5 {0:d} {1:d} {2:d}')


class SparseGraph:
    """Directed graph in compressed sparse row form.

    Parameters
    ----------
    row_offsets : ndarray of int64 (node_count + 1, )
    column_indices : ndarray of int32
        strictly increasing within each row.
    alpha : float
    seed : int
    gamma : float
    """

    def __init__(self, row_offsets, column_indices, alpha=1., seed=0, gamma=0.):
        row_offsets = np.asarray(row_offsets, dtype=np.int64)
        column_indices = np.asarray(column_indices, dtype=np.int32)
        if row_offsets[0] != 0 or row_offsets[-1] != column_indices.size:
            raise DomainError('row offsets do not match the number of edges')
        for array in (row_offsets, column_indices):
            array.flags.writeable = False
        self.row_offsets = row_offsets
        self.column_indices = column_indices
        self.alpha = alpha
        self.seed = seed
        self.gamma = gamma

    def __repr__(self):
        return '<SparseGraph({} nodes, {} edges, seed={})>'.format(self.node_count, self.edge_count, self.seed)

    def __eq__(self, other):
        if not isinstance(other, SparseGraph):
            return NotImplemented
        return (np.array_equal(self.row_offsets, other.row_offsets)
                and np.array_equal(self.column_indices, other.column_indices))

    @property
    def node_count(self):
        return self.row_offsets.size - 1

    @property
    def edge_count(self):
        return int(self.row_offsets[-1])

    def row(self, i):
        """Targets of the edges leaving node i."""
        return self.column_indices[self.row_offsets[i]:self.row_offsets[i + 1]]

    def sources(self):
        """Source node of every edge, aligned with column_indices."""
        return np.repeat(np.arange(self.node_count), self.out_degrees())

    def out_degrees(self):
        return np.diff(self.row_offsets)

    def to_csr(self):
        """Adjacency as a scipy.sparse.csr_matrix of ones."""
        count = self.node_count
        return sparse.csr_matrix((np.ones(self.edge_count), self.column_indices, self.row_offsets),
                                 shape=(count, count))

    @classmethod
    def from_rows(cls, rows, **kwargs):
        """Build from a list with the (sorted) targets of each node."""
        offsets = np.zeros(len(rows) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(r) for r in rows])
        columns = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int32)
        return cls(offsets, columns, **kwargs)


def row_generator(seed, row):
    """Counter-based generator of a row: Philox keyed by the 64-bit seed and the row index."""
    return np.random.Generator(np.random.Philox(key=(int(seed) & MASK64) | (int(row) << 64)))


def _sample_rows(probabilities, rows, seed):
    count = probabilities.shape[1]
    out = []
    for i in rows:
        draws = row_generator(seed, i).random(count)
        out.append(np.flatnonzero(draws < probabilities[i]).astype(np.int32))
    return out


def sample_graph(cells, schedule, seed, threads=None):
    """Sample a W-random graph.

    Parameters
    ----------
    cells : CellKernelMatrix
    schedule : SparsitySchedule
    seed : int
        64-bit seed.
    threads : int, optional
        workers for the row blocks (the result does not depend on it).

    Returns
    -------
    SparseGraph
    """
    count = cells.partition.size
    if count >= 2 ** 31:
        raise DomainError('{} nodes do not fit 32-bit column indices'.format(count))
    alpha = schedule.alpha(cells.partition.n)
    probabilities = cells.probabilities(alpha)

    blocks = [range(start, min(start + ROW_BLOCK, count)) for start in range(0, count, ROW_BLOCK)]
    workers = config.available_threads(threads)
    if workers > 1 and len(blocks) > 1:
        with futures.ThreadPoolExecutor(max_workers=workers) as executor:
            parts = list(executor.map(lambda rows: _sample_rows(probabilities, rows, seed), blocks))
    else:
        parts = [_sample_rows(probabilities, rows, seed) for rows in blocks]

    graph = SparseGraph.from_rows([row for part in parts for row in part],
                                  alpha=alpha, seed=seed, gamma=schedule.gamma)
    _LOG.debug('sampled {} (alpha={:.6g}, mean degree {:.3f})', graph, alpha, graph.edge_count / count)
    return graph


DegreeStats = namedtuple('DegreeStats', 'mean min max histogram')


def degree_stats(g):
    """Out-degree statistics.

    Returns
    -------
    DegreeStats
        mean (edges / nodes), min, max and histogram, where histogram[k]
        is the number of nodes with out-degree k.
    """
    degrees = g.out_degrees()
    if degrees.size == 0:
        return DegreeStats(0., 0, 0, np.zeros(1, dtype=np.int64))
    return DegreeStats(g.edge_count / g.node_count, int(degrees.min()), int(degrees.max()),
                       np.bincount(degrees))


def adjacency_pixmap(g, path):
    """Write the adjacency matrix as a binary PGM (P5) image.

    Pixel (i, j) is 0 (black) for an edge i -> j and 255 otherwise.

    Raises
    ------
    DomainError
        if the graph has more than MAX_PIXMAP_NODES nodes.
    OutputError
        if the file cannot be written.
    """
    count = g.node_count
    if count > MAX_PIXMAP_NODES:
        raise DomainError('A pixmap of {0}x{0} pixels exceeds the {1}x{1} limit'.format(count, MAX_PIXMAP_NODES))
    image = np.full((count, count), 255, dtype=np.uint8)
    image[g.sources(), g.column_indices] = 0
    try:
        with open(path, 'wb') as fo:
            fo.write('P5 {} {} 255\n'.format(count, count).encode('ascii'))
            fo.write(image.tobytes())
    except OSError as e:
        raise OutputError(path, e.strerror or e)
    return path


def read_pixmap(path):
    """Read a binary PGM (P5) image written by adjacency_pixmap.

    Returns
    -------
    ndarray of uint8 (height, width)
    """
    with open(path, 'rb') as fi:
        header = fi.readline().decode('ascii', 'replace').strip()
        try:
            width, height, maxval = PGM_HEADER(header)
        except (ValueError, TypeError):
            raise DomainError('{} is not a P5 pixmap (header {!r})'.format(path, header))
        data = np.frombuffer(fi.read(), dtype=np.uint8)
    if maxval != 255 or data.size != width * height:
        raise DomainError('{}: expected {}x{} pixels with maxval 255'.format(path, width, height))
    return data.reshape(height, width)


def write_edge_list(g, path):
    """Write one 'src dst' line per edge, sorted."""
    try:
        with open(path, 'w', encoding='ascii') as fo:
            np.savetxt(fo, np.column_stack([g.sources(), g.column_indices]), fmt='%d')
    except OSError as e:
        raise OutputError(path, e.strerror or e)
    return path
