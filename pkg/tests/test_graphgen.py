import json
import math

import numpy as np
import pytest
from scipy import stats

from gibbsgraph import (
    GaussianOverlap,
    HardSphere,
    LabeledGraph,
    Point,
    Region,
    ZeroPotential,
    condensed_distances,
    graph_from_points,
    max_degree,
    sample_graph,
    sample_points,
    temperedness_constant,
)
from conftest import graph_from_edges


def test_sample_points_basics():
    region = Region([3.0, 3.0])
    rng = np.random.default_rng(1)
    pts = sample_points(region, 40, rng)
    assert len(pts) == 40
    assert all(isinstance(p, Point) and region.contains(p) for p in pts)
    with pytest.raises(ValueError):
        sample_points(region, 0, np.random.default_rng(1))
    a = sample_points(region, 10, np.random.default_rng(7))
    b = sample_points(region, 10, np.random.default_rng(7))
    assert all(tuple(p) == tuple(q) for p, q in zip(a, b))


def test_pairwise_distance_distribution_ks():
    """Distances of disjoint sampled pairs vs a 10^6-pair numpy oracle."""
    region = Region([3.0, 3.0])
    pts = np.array([p.as_array() for p in sample_points(region, 2 * 10**4, np.random.default_rng(3))])
    lib_dists = np.linalg.norm(pts[0::2] - pts[1::2], axis=1)
    oracle_rng = np.random.default_rng(4)
    a = oracle_rng.random((10**6, 2)) * 3.0
    b = oracle_rng.random((10**6, 2)) * 3.0
    oracle = np.linalg.norm(a - b, axis=1)
    res = stats.ks_2samp(lib_dists, oracle)
    assert res.pvalue > 0.001, f"KS p={res.pvalue}"


def test_zero_potential_always_edgeless():
    region = Region([1.0, 1.0])
    for seed in range(50):
        g = sample_graph(region, ZeroPotential(), 12, np.random.default_rng(seed))
        assert g.edge_count == 0
        assert max_degree(g) == 0


def test_hard_sphere_edges_deterministic():
    region = Region([4.0])
    pot = HardSphere(0.25)
    pts = sample_points(region, 30, np.random.default_rng(8))
    g1 = graph_from_points(pts, pot, region, np.random.default_rng(111))
    g2 = graph_from_points(pts, pot, region, np.random.default_rng(999))
    assert g1.adjacency == g2.adjacency  # edges ignore the rng entirely
    coords = np.array([p.as_array() for p in pts])
    dists = condensed_distances(coords, region)
    expect = {
        (i, j)
        for k, (i, j) in enumerate(
            (i, j) for i in range(30) for j in range(i + 1, 30)
        )
        if dists[k] < 0.5
    }
    assert set(g1.edges()) == expect


def test_bernoulli_edge_frequency_fixed_pair():
    """Empirical edge frequency over repeated graphs matches 1 - e^{-phi}."""
    region = Region([10.0])
    pot = GaussianOverlap(1.0, 1.0)
    pts = [Point([4.0]), Point([5.0])]  # distance 1
    p_true = -math.expm1(-math.exp(-1.0))
    n_rep = 10**5
    rng = np.random.default_rng(12)
    hits = sum(graph_from_points(pts, pot, region, rng).edge_count for _ in range(n_rep))
    se = math.sqrt(p_true * (1.0 - p_true) / n_rep)
    assert abs(hits / n_rep - p_true) < 4.0 * se


def test_expected_degree_bounded_by_interaction_volume():
    region = Region([5.0, 5.0])
    pot = GaussianOverlap(1.0, 1.0)
    n, reps = 30, 1000
    c_phi = temperedness_constant(pot, 2)
    bound = (n - 1) * c_phi / region.volume
    means = np.empty(reps)
    for t in range(reps):
        g = sample_graph(region, pot, n, np.random.default_rng(1000 + t))
        means[t] = 2.0 * g.edge_count / n
    se = means.std(ddof=1) / math.sqrt(reps)
    assert means.mean() <= bound + 4.0 * se


def test_max_degree_tail_below_chernoff_bound():
    """Union-bound Chernoff tail for the max degree, with x2 slack."""
    region = Region([10.0])
    pot = HardSphere(0.1)  # exclusion 0.2 -> C_phi = 0.4
    n, reps = 200, 1000
    c_phi = 0.4
    mean_bound = (n - 1) * c_phi / region.volume
    deltas = np.array(
        [
            max_degree(sample_graph(region, pot, n, np.random.default_rng(5000 + t)))
            for t in range(reps)
        ]
    )
    for alpha in (0.75, 3.0):
        tail = math.exp(-min(alpha, alpha**2) * c_phi * (n - 1) / (3.0 * region.volume))
        rate = float(np.mean(deltas >= (1.0 + alpha) * mean_bound))
        assert rate <= min(1.0, 2.0 * n * tail), f"alpha={alpha}: {rate}"


def test_adjacency_invariants_on_generated_graphs():
    region = Region([2.0, 2.0])
    pot = GaussianOverlap(2.0, 0.5)
    for seed in range(20):
        g = sample_graph(region, pot, 25, np.random.default_rng(seed))
        for v, nbrs in enumerate(g.adjacency):
            assert list(nbrs) == sorted(nbrs)
            assert v not in nbrs
            for u in nbrs:
                assert v in g.adjacency[u]


def test_max_degree_examples():
    assert max_degree(graph_from_edges(3, [])) == 0
    k4 = graph_from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    assert max_degree(k4) == 3
    star = graph_from_edges(6, [(0, leaf) for leaf in range(1, 6)])
    assert max_degree(star) == 5


def test_graph_json_roundtrip():
    region = Region([3.0, 3.0])
    pot = GaussianOverlap(1.0, 1.0)
    g = sample_graph(region, pot, 15, np.random.default_rng(77), meta={"tag": "unit"})
    payload = g.to_json_dict()
    assert set(payload) == {"n", "points", "edges", "meta"}
    assert all(i < j for i, j in payload["edges"])
    clone = LabeledGraph.from_json(g.to_json())
    assert clone.adjacency == g.adjacency
    assert np.array_equal(clone.coords, g.coords)
    assert clone.meta.get("tag") == "unit"
    # identical seed, identical serialization
    h = sample_graph(region, pot, 15, np.random.default_rng(77), meta={"tag": "unit"})
    assert h.to_json() == g.to_json()


def test_graph_json_rejects_bad_edges():
    g = graph_from_edges(3, [(0, 1)])
    payload = g.to_json_dict()
    payload["edges"] = [[1, 0]]
    with pytest.raises(ValueError):
        LabeledGraph.from_json_dict(payload)
    payload["edges"] = [[0, 3]]
    with pytest.raises(ValueError):
        LabeledGraph.from_json_dict(payload)
    payload["edges"] = [[0, 1]]
    payload["points"] = payload["points"][:2]
    with pytest.raises(ValueError):
        LabeledGraph.from_json_dict(payload)


def test_labeled_graph_validates_symmetry():
    with pytest.raises(ValueError):
        LabeledGraph(np.zeros((2, 1)), [[1], []])  # asymmetric
    with pytest.raises(ValueError):
        LabeledGraph(np.zeros((2, 1)), [[0], [0]])  # self-loop
