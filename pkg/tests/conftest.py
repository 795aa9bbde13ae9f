"""Shared fixtures and independent brute-force oracles.

The oracles here deliberately avoid every fast path in the library
(bitmask recursion, transfer DP, numba kernels): they enumerate spin
configurations directly so that library results are checked against an
implementation that shares no code with them.
"""

import itertools

import numpy as np
import pytest
from hypothesis import settings

from gibbsgraph import LabeledGraph

settings.register_profile("suite", derandomize=True, deadline=None, max_examples=80)
settings.load_profile("suite")


def brute_partition(n, edges, lam, beta=0.0):
    """Sum over all 2^n spin vectors of lam^|sigma| * beta^{monochromatic edges}."""
    total = 0.0
    for sigma in itertools.product((0, 1), repeat=n):
        k = sum(sigma)
        m1 = sum(1 for i, j in edges if sigma[i] and sigma[j])
        if beta == 0.0:
            if m1 > 0:
                continue
            total += lam**k
        else:
            total += lam**k * beta**m1
    return total


def graph_from_edges(n, edges, coords=None):
    """LabeledGraph over dummy 1D coordinates (graph structure is what matters)."""
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    if coords is None:
        coords = np.arange(n, dtype=float).reshape(n, 1)
    return LabeledGraph(np.asarray(coords, dtype=float), adj)


def random_edge_graph(rng, n, p, dim=2):
    """G(n, p) with random coordinates in the unit box (for ordering tests)."""
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return graph_from_edges(n, edges, coords=rng.random((n, dim)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
