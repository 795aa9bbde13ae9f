"""Self-avoiding-walk and pruned-walk trees, and connective-constant tools.

The pruned ("Weitz") tree keeps a simple path v_0..v_k only if each step
respects every earlier vertex's neighbour ordering: an extension u must
rank strictly after v_{j+1} among N(v_j) whenever u ~ v_j, for all
j <= k-1. Layer counts L_k of that tree bound the graph's connective
growth; their potential-weighted continuum analogue is estimated here by
importance sampling in free space.

All enumerations run through one compiled DFS with a node budget: profiles
carry a ``truncated`` flag instead of silently partial counts, and the
budget doubles as a cheap upper-bound test (if the budget equals the bound
being checked, truncation alone is a verdict).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ._kernels import layer_counts_dfs
from .graphgen import LabeledGraph
from .hardcore import EXACT_CONDITIONAL_LIMIT, Estimate, occupation_ratio_exact
from .potential import (
    HardSphere,
    PairPotential,
    ZeroPotential,
    ball_volume,
    temperedness_constant,
)
from .potential import _sphere_surface  # shared radial geometry helper

__all__ = [
    "NeighborhoodOrdering",
    "WeitzLayerProfile",
    "ConnectiveCheck",
    "SSMDecayRow",
    "distance_ordering",
    "weitz_layer_counts",
    "saw_layer_counts",
    "connective_bound_check",
    "pwcc_k",
    "pwcc_estimate",
    "ssm_decay_table",
    "profiles_to_csv",
    "decay_table_to_csv",
]

DEFAULT_NODE_BUDGET = 10**7


@dataclass(frozen=True)
class NeighborhoodOrdering:
    """Per-vertex ranking of neighbours: orders[v] lists N(v) by rank 1, 2, ..."""

    orders: tuple[tuple[int, ...], ...]

    def __init__(self, orders: Iterable[Iterable[int]]) -> None:
        object.__setattr__(self, "orders", tuple(tuple(int(u) for u in o) for o in orders))
        for v, order in enumerate(self.orders):
            if len(set(order)) != len(order):
                raise ValueError(f"ordering for vertex {v} repeats a neighbour")

    @property
    def n(self) -> int:
        return len(self.orders)

    def rank_of(self, v: int, u: int) -> int:
        """1-based rank of u among v's neighbours (0 if absent)."""
        try:
            return self.orders[v].index(u) + 1
        except ValueError:
            return 0

    def matches(self, graph: LabeledGraph) -> bool:
        return self.n == graph.n and all(
            tuple(sorted(o)) == graph.adjacency[v] for v, o in enumerate(self.orders)
        )

    def rank_matrix(self) -> np.ndarray:
        n = self.n
        rank = np.zeros((n, n), dtype=np.int32)
        for v, order in enumerate(self.orders):
            for pos, u in enumerate(order):
                rank[v, u] = pos + 1
        return rank


@dataclass(frozen=True)
class WeitzLayerProfile:
    """Path counts per depth from one root; truncated marks a budget stop."""

    root: int
    counts: tuple[int, ...]
    truncated: bool = False

    def __post_init__(self):
        if not self.counts or self.counts[0] != 1:
            raise ValueError("a layer profile starts with L_0 = 1")
        if any(c < 0 for c in self.counts):
            raise ValueError("layer counts must be >= 0")

    def total(self) -> int:
        return sum(self.counts)


def distance_ordering(graph: LabeledGraph) -> NeighborhoodOrdering:
    """Rank each vertex's neighbours by increasing distance, ties by ID.

    Uses the graph's region metric when present (so periodic embeddings
    order by wrapped distance), plain Euclidean otherwise.
    """
    orders = []
    for v in range(graph.n):
        nbrs = graph.adjacency[v]
        if not nbrs:
            orders.append(())
            continue
        here = graph.coords[v][None, :]
        there = graph.coords[list(nbrs), :]
        if graph.region is not None:
            dists = graph.region.distances(np.broadcast_to(here, there.shape), there)
        else:
            dists = np.linalg.norm(there - here, axis=1)
        order = sorted(zip(dists, nbrs))
        orders.append(tuple(u for _, u in order))
    return NeighborhoodOrdering(orders)


def _adjacency_words(graph: LabeledGraph) -> np.ndarray:
    n = graph.n
    words = np.zeros((n, (n + 63) // 64), dtype=np.uint64)
    for v, nbrs in enumerate(graph.adjacency):
        for u in nbrs:
            words[v, u >> 6] |= np.uint64(1) << np.uint64(u & 63)
    return words


def _layer_counts(
    graph: LabeledGraph,
    root: int,
    ordering: NeighborhoodOrdering | None,
    max_depth: int,
    node_budget: int,
    prune: bool,
) -> WeitzLayerProfile:
    if not 0 <= root < graph.n:
        raise ValueError(f"root {root} out of range for n = {graph.n}")
    if max_depth < 0:
        raise ValueError(f"max_depth must be >= 0, got {max_depth}")
    if node_budget < 1:
        raise ValueError(f"node_budget must be >= 1, got {node_budget}")
    if prune:
        assert ordering is not None
        if not ordering.matches(graph):
            raise ValueError("ordering does not match the graph's adjacency")
        rank = ordering.rank_matrix()
    else:
        rank = np.zeros((1, 1), dtype=np.int32)
    indptr, indices = graph.csr()
    counts, truncated = layer_counts_dfs(
        indptr,
        indices,
        rank,
        _adjacency_words(graph),
        root,
        max_depth,
        node_budget,
        prune,
    )
    return WeitzLayerProfile(root=root, counts=tuple(int(c) for c in counts), truncated=bool(truncated))


def weitz_layer_counts(
    graph: LabeledGraph,
    root: int,
    ordering: NeighborhoodOrdering | None = None,
    max_depth: int | None = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> WeitzLayerProfile:
    """Layer counts of the ordering-pruned path tree rooted at ``root``.

    ``ordering`` defaults to the distance ordering; ``max_depth`` to n - 1
    (paths cannot be longer).
    """
    if ordering is None:
        ordering = distance_ordering(graph)
    depth = graph.n - 1 if max_depth is None else max_depth
    return _layer_counts(graph, root, ordering, depth, node_budget, prune=True)


def saw_layer_counts(
    graph: LabeledGraph,
    root: int,
    max_depth: int | None = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> WeitzLayerProfile:
    """Layer counts of the plain self-avoiding-walk tree (no pruning)."""
    depth = graph.n - 1 if max_depth is None else max_depth
    return _layer_counts(graph, root, None, depth, node_budget, prune=False)


@dataclass(frozen=True)
class ConnectiveCheck:
    """Per-root verdicts for sum_{k<=m} L_k <= c * delta^m."""

    m: int
    delta_target: float
    c: float
    bound: float
    totals: tuple[int, ...]
    passed: tuple[bool, ...]
    truncated: tuple[bool, ...]

    @property
    def n_roots(self) -> int:
        return len(self.passed)

    @property
    def all_pass(self) -> bool:
        return all(self.passed)

    @property
    def fraction_passing(self) -> float:
        return sum(self.passed) / self.n_roots if self.n_roots else 1.0

    def failing_roots(self) -> tuple[int, ...]:
        return tuple(v for v, ok in enumerate(self.passed) if not ok)


def connective_bound_check(
    graph: LabeledGraph,
    ordering: NeighborhoodOrdering | None,
    m: int,
    delta_target: float,
    c: float,
    a: float,
    *,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> ConnectiveCheck:
    """Check the pruned-tree growth bound at every root.

    Requires m >= ceil(a ln n). The per-root budget is the bound itself
    when that is cheaper than the global budget, so oversized trees fail by
    truncation without being enumerated in full; a truncation at the global
    budget (bound unreachable) is reported as a conservative failure.
    """
    n = graph.n
    if n >= 2 and m < math.ceil(a * math.log(n)):
        raise ValueError(f"m = {m} below the profile depth floor ceil(a ln n) = {math.ceil(a * math.log(n))}")
    if delta_target <= 0 or c <= 0:
        raise ValueError("delta_target and c must be positive")
    if ordering is None:
        ordering = distance_ordering(graph)
    bound = c * delta_target**m
    budget = node_budget
    if math.isfinite(bound) and math.floor(bound) < node_budget:
        budget = max(1, math.floor(bound))
    totals, passed, truncated = [], [], []
    for root in range(n):
        profile = _layer_counts(graph, root, ordering, m, budget, prune=True)
        total = profile.total()
        totals.append(total)
        truncated.append(profile.truncated)
        passed.append(not profile.truncated and total <= bound)
    return ConnectiveCheck(
        m=m,
        delta_target=delta_target,
        c=c,
        bound=bound,
        totals=tuple(totals),
        passed=tuple(passed),
        truncated=tuple(truncated),
    )


# -- potential-weighted connective constant --------------------------------


def _radial_tail_table(
    potential: PairPotential, d: int, grid_size: int = 8192
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized CDF grid of the coupling density beyond the hard core.

    The density of the step length is s_d r^{d-1} (1 - e^{-phi(r)}) / C_phi;
    below the core diameter it is exactly the ball's radial law (handled in
    closed form by the caller), so the table only covers the soft tail.
    """
    core = potential.core_diameter()
    cphi = temperedness_constant(potential, d)
    tail_mass = cphi - ball_volume(d, core)
    surface = _sphere_surface(d)
    r_hi = max(2.0 * core, 1.0)
    for _ in range(64):
        rs = np.linspace(core, r_hi, grid_size + 1)
        dens = surface * rs ** (d - 1) * (-np.expm1(-potential.phi_radial(rs)))
        cdf = cumulative_trapezoid(dens, rs, initial=0.0)
        if cdf[-1] >= (1.0 - 1e-9) * tail_mass:
            return rs, np.minimum(cdf / cdf[-1], 1.0)
        r_hi *= 2.0
    raise RuntimeError("the coupling density's tail mass did not converge")


def _sample_displacements(
    potential: PairPotential, d: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draws from the normalized density (1 - e^{-phi(|y|)}) / C_phi on R^d."""
    core = potential.core_diameter()
    if isinstance(potential, HardSphere):
        radii = core * rng.random(count) ** (1.0 / d)
    else:
        cphi = temperedness_constant(potential, d)
        p_core = ball_volume(d, core) / cphi
        rs, cdf = _radial_tail_table(potential, d)
        u = rng.random(count)
        radii = np.empty(count)
        inside = u < p_core
        if p_core > 0:
            radii[inside] = core * (u[inside] / p_core) ** (1.0 / d)
        radii[~inside] = np.interp((u[~inside] - p_core) / (1.0 - p_core), cdf, rs)
    dirs = rng.standard_normal((count, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return radii[:, None] * dirs


def pwcc_k(
    potential: PairPotential,
    d: int,
    k: int,
    samples: int,
    rng: np.random.Generator,
) -> Estimate:
    """Order-k potential-weighted path integral, free-space Monte Carlo.

    Chains x_0 = 0, x_j = x_{j-1} + step with steps importance-sampled from
    the coupling density; the residual weight discounts every earlier pair
    (i, j), i <= j - 2, whose separation beats the step d(x_i, x_{i+1}):
    exp(-phi) there, 1 otherwise. The average is scaled back by C_phi^k.
    k = 1 is exact by construction (the weight is identically 1).
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if k == 0:
        return Estimate(value=1.0, std_error=0.0, flags=("exact",))
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")
    cphi = temperedness_constant(potential, d)
    if cphi == 0.0:
        return Estimate(value=0.0, std_error=0.0, flags=("exact",), extra={"order": k})
    steps = _sample_displacements(potential, d, samples * k, rng).reshape(samples, k, d)
    xs = np.zeros((samples, k + 1, d))
    np.cumsum(steps, axis=1, out=xs[:, 1:, :])
    logw = np.zeros(samples)
    for j in range(2, k + 1):
        for i in range(j - 1):
            d_ij = np.linalg.norm(xs[:, j, :] - xs[:, i, :], axis=1)
            d_step = np.linalg.norm(xs[:, i + 1, :] - xs[:, i, :], axis=1)
            closer = d_ij < d_step
            if np.any(closer):
                logw[closer] -= potential.phi_radial(d_ij[closer])
    weights = np.exp(logw)
    scale = cphi**k
    mean = float(np.mean(weights))
    se = float(np.std(weights, ddof=1) / math.sqrt(samples))
    return Estimate(
        value=scale * mean,
        std_error=scale * se,
        replicates=samples,
        flags=("free_space",),
        extra={"order": k, "coupling_integral": cphi, "weight_mean": mean},
    )


def pwcc_estimate(
    potential: PairPotential,
    d: int,
    k_max: int = 4,
    samples: int = 10**6,
    rng: np.random.Generator | None = None,
) -> Estimate:
    """Best (smallest) k-th root of the order-k integrals up to k_max.

    Sub-multiplicativity makes every root an upper bound on the growth
    rate, so the minimum is the tightest available estimate; its Monte
    Carlo error propagates through the root as value^(1/k - 1) * se / k.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    if rng is None:
        rng = np.random.default_rng()
    roots, root_ses, raw = [], [], []
    for k in range(1, k_max + 1):
        est = pwcc_k(potential, d, k, samples, rng)
        raw.append(est.value)
        if est.value <= 0.0:
            roots.append(0.0)
            root_ses.append(0.0)
        else:
            roots.append(est.value ** (1.0 / k))
            root_ses.append(est.value ** (1.0 / k - 1.0) * (est.std_error or 0.0) / k)
    best = int(np.argmin(roots))
    return Estimate(
        value=roots[best],
        std_error=root_ses[best],
        replicates=samples,
        flags=("free_space",),
        extra={
            "best_order": best + 1,
            "roots": roots,
            "root_std_errors": root_ses,
            "order_values": raw,
        },
    )


# -- strong spatial mixing probes ------------------------------------------


@dataclass(frozen=True)
class SSMDecayRow:
    """Worst occupation-ratio gap over pinning pairs on the distance-s sphere."""

    s: int
    max_gap: float
    pairs_checked: int


def _bfs_distances(graph: LabeledGraph, root: int) -> np.ndarray:
    dist = np.full(graph.n, -1, dtype=np.int64)
    dist[root] = 0
    frontier = [root]
    while frontier:
        nxt = []
        for v in frontier:
            for u in graph.adjacency[v]:
                if dist[u] < 0:
                    dist[u] = dist[v] + 1
                    nxt.append(u)
        frontier = nxt
    return dist


def _feasible_assignments(graph: LabeledGraph, sphere: Sequence[int]) -> list[dict]:
    """All 0/1 pinnings of the sphere without two adjacent occupied vertices."""
    out = []
    k = len(sphere)
    adj = [
        [j for j in range(k) if sphere[j] in graph.adjacency[sphere[i]]]
        for i in range(k)
    ]
    for mask in range(1 << k):
        ok = all(
            not (mask >> i) & 1 or all(not (mask >> j) & 1 for j in adj[i])
            for i in range(k)
        )
        if ok:
            out.append({sphere[i]: (mask >> i) & 1 for i in range(k)})
    return out


def ssm_decay_table(
    graph: LabeledGraph,
    lam: float,
    root: int,
    distance_range: Iterable[int],
    *,
    pair_budget: int = 256,
    rng: np.random.Generator | None = None,
) -> list[SSMDecayRow]:
    """Max root-occupation-ratio gap between pinnings differing on a sphere.

    For each s, pins live exactly on the set of vertices at graph distance
    s from the root; every feasible pair of distinct pinnings (up to
    ``pair_budget``, randomly subsampled beyond it) is compared through the
    exact conditional ratio. An isolated root depends on nothing, so every
    gap is reported as 0; otherwise an s with no vertices at that distance
    raises, as does a graph too large for exact conditioning.
    """
    if graph.n > min(22, EXACT_CONDITIONAL_LIMIT):
        raise ValueError(f"exact conditioning limited to n <= 22, got n = {graph.n}")
    if not 0 <= root < graph.n:
        raise ValueError(f"root {root} out of range")
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    isolated = len(graph.adjacency[root]) == 0
    dist = _bfs_distances(graph, root)
    rows = []
    for s in distance_range:
        if s < 1:
            raise ValueError(f"pinning distance must be >= 1, got {s}")
        sphere = [int(v) for v in np.flatnonzero(dist == s)]
        if not sphere:
            if isolated:
                rows.append(SSMDecayRow(s=int(s), max_gap=0.0, pairs_checked=0))
                continue
            raise ValueError(f"no vertices at distance {s} from root {root}")
        assignments = _feasible_assignments(graph, sphere)
        pairs = [
            (assignments[i], assignments[j])
            for i in range(len(assignments))
            for j in range(i + 1, len(assignments))
        ]
        if len(pairs) > pair_budget:
            picker = rng if rng is not None else np.random.default_rng(0)
            idx = picker.choice(len(pairs), size=pair_budget, replace=False)
            pairs = [pairs[int(i)] for i in idx]
        max_gap = 0.0
        for tau, tau_prime in pairs:
            r1 = occupation_ratio_exact(graph, lam, root, tau)
            r2 = occupation_ratio_exact(graph, lam, root, tau_prime)
            max_gap = max(max_gap, abs(r1 - r2))
        rows.append(SSMDecayRow(s=int(s), max_gap=max_gap, pairs_checked=len(pairs)))
    return rows


# -- plain-text export ------------------------------------------------------


def profiles_to_csv(profiles: Iterable[WeitzLayerProfile]) -> str:
    lines = ["root,k,count,truncated"]
    for p in profiles:
        for k, count in enumerate(p.counts):
            lines.append(f"{p.root},{k},{count},{int(p.truncated)}")
    return "\n".join(lines) + "\n"


def decay_table_to_csv(rows: Iterable[SSMDecayRow], root: int) -> str:
    lines = ["root,s,max_gap,pairs_checked"]
    for row in rows:
        lines.append(f"{root},{row.s},{row.max_gap!r},{row.pairs_checked}")
    return "\n".join(lines) + "\n"
