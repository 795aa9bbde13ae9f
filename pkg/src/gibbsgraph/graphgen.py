"""Geometric random graphs from point configurations.

The reduction this package is built on: drop ``n`` i.i.d. uniform points in
a region, then connect each pair independently with probability
``1 - exp(-phi(x_i, x_j))``. Hard overlaps become deterministic edges, soft
interactions become random ones, and the zero potential produces the empty
graph.

Edge randomness is consumed in lexicographic pair order ``(0,1), (0,2), ...``
with one uniform per pair compared strictly against the coupling
probability, so a graph is a pure function of (points, potential, one block
of uniforms) — this is what makes fixed-seed runs bit-reproducible.
"""

from __future__ import annotations

import json
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .geometry import Point, Region, sample_uniform_array
from .potential import (
    PairPotential,
    edge_probability_radial,
    potential_from_config,
    potential_to_config,
)

__all__ = [
    "LabeledGraph",
    "sample_points",
    "condensed_distances",
    "graph_from_points",
    "sample_graph",
    "max_degree",
]


class LabeledGraph:
    """An undirected graph on points; vertices are ``0..n-1``.

    Adjacency is stored as one sorted integer tuple per vertex. There are no
    self-loops and no parallel edges; symmetry is validated on construction.
    The region and potential that generated the graph ride along when known
    (some downstream orderings want the region's metric), but equality and
    serialization are about (n, points, edges) plus the ``meta`` mapping.
    """

    __slots__ = ("n", "coords", "adjacency", "region", "potential", "meta", "_csr")

    def __init__(
        self,
        points: Sequence[Point] | np.ndarray,
        adjacency: Sequence[Iterable[int]],
        *,
        region: Region | None = None,
        potential: PairPotential | None = None,
        meta: Mapping | None = None,
        validate: bool = True,
    ) -> None:
        coords = np.asarray(
            [p.as_array() if isinstance(p, Point) else p for p in points], dtype=np.float64
        )
        if coords.ndim != 2:
            if len(points) == 0:
                coords = coords.reshape(0, region.dim if region is not None else 1)
            else:
                raise ValueError("points must share a common dimension")
        self.coords = coords
        self.n = coords.shape[0]
        adj = tuple(tuple(sorted(set(int(u) for u in nbrs))) for nbrs in adjacency)
        self.adjacency = adj
        self.region = region
        self.potential = potential
        self.meta = dict(meta) if meta is not None else {}
        self._csr: tuple[np.ndarray, np.ndarray] | None = None
        if validate:
            self._validate()

    def _validate(self) -> None:
        if len(self.adjacency) != self.n:
            raise ValueError(
                f"adjacency has {len(self.adjacency)} rows for {self.n} vertices"
            )
        for v, nbrs in enumerate(self.adjacency):
            for u in nbrs:
                if not 0 <= u < self.n:
                    raise ValueError(f"vertex {v} lists out-of-range neighbour {u}")
                if u == v:
                    raise ValueError(f"self-loop at vertex {v}")
                if v not in self.adjacency[u]:
                    raise ValueError(f"asymmetric adjacency: {v}->{u} but not {u}->{v}")

    # -- basic queries ----------------------------------------------------

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def points(self) -> tuple[Point, ...]:
        return tuple(Point(row) for row in self.coords)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self.adjacency], dtype=np.int64)

    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n else 0

    def edges(self) -> list[tuple[int, int]]:
        """Edge list with ``i < j``, lexicographically sorted."""
        return [(v, u) for v in range(self.n) for u in self.adjacency[v] if v < u]

    @property
    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.adjacency) // 2

    def neighbor_masks(self) -> list[int]:
        """Per-vertex neighbourhoods as python-int bitmasks (exact-count routines)."""
        return [sum(1 << u for u in nbrs) for nbrs in self.adjacency]

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr int64, indices int32) compressed adjacency for the kernels."""
        if self._csr is None:
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            for v, nbrs in enumerate(self.adjacency):
                indptr[v + 1] = indptr[v] + len(nbrs)
            indices = np.empty(indptr[-1], dtype=np.int32)
            for v, nbrs in enumerate(self.adjacency):
                indices[indptr[v] : indptr[v + 1]] = nbrs
            self._csr = (indptr, indices)
        return self._csr

    def subgraph_without(self, drop: Iterable[int]) -> "LabeledGraph":
        """Graph with the given vertices deleted and the rest relabelled in order."""
        drop = set(drop)
        keep = [v for v in range(self.n) if v not in drop]
        relabel = {v: i for i, v in enumerate(keep)}
        adj = [
            [relabel[u] for u in self.adjacency[v] if u not in drop] for v in keep
        ]
        return LabeledGraph(
            self.coords[keep] if self.n else self.coords,
            adj,
            region=self.region,
            potential=self.potential,
            meta=self.meta,
            validate=False,
        )

    # -- equality / serialization ----------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.coords, other.coords)
            and self.adjacency == other.adjacency
        )

    def __repr__(self) -> str:
        return f"LabeledGraph(n={self.n}, edges={self.edge_count}, dim={self.dim})"

    _VOLATILE_META = ("created_at",)

    def to_json_dict(self) -> dict:
        """Export schema: ``{"n", "points", "edges", "meta"}`` with i < j edges.

        Volatile meta keys (wall-clock timestamps) are dropped so that a fixed
        seed produces a byte-identical file.
        """
        meta = {k: v for k, v in self.meta.items() if k not in self._VOLATILE_META}
        return {
            "n": self.n,
            "points": [[float(c) for c in row] for row in self.coords],
            "edges": [[i, j] for i, j in self.edges()],
            "meta": meta,
        }

    def to_json(self, **dumps_kwargs) -> str:
        dumps_kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_json_dict(), **dumps_kwargs)

    @classmethod
    def from_json_dict(cls, payload: Mapping) -> "LabeledGraph":
        n = int(payload["n"])
        pts = payload["points"]
        if len(pts) != n:
            raise ValueError(f"payload lists {len(pts)} points for n={n}")
        adj: list[list[int]] = [[] for _ in range(n)]
        for e in payload["edges"]:
            i, j = int(e[0]), int(e[1])
            if not (0 <= i < j < n):
                raise ValueError(f"bad edge {e}: need 0 <= i < j < n")
            adj[i].append(j)
            adj[j].append(i)
        meta = dict(payload.get("meta", {}))
        region = potential = None
        if "region" in meta:
            region = Region.from_config(meta["region"])
        if "potential" in meta:
            potential = potential_from_config(meta["potential"])
        return cls([np.asarray(p, float) for p in pts], adj,
                   region=region, potential=potential, meta=meta)

    @classmethod
    def from_json(cls, text: str) -> "LabeledGraph":
        return cls.from_json_dict(json.loads(text))


def sample_points(region: Region, n: int, rng: np.random.Generator) -> list[Point]:
    """``n`` i.i.d. uniform points in the region."""
    if n < 1:
        raise ValueError(f"need at least one point, got n={n}")
    return [Point(row) for row in sample_uniform_array(region, n, rng)]


def condensed_distances(coords: np.ndarray, region: Region) -> np.ndarray:
    """Pairwise distances in lexicographic (i<j) order under the region metric."""
    coords = np.asarray(coords, dtype=np.float64)
    if not region.periodic:
        return pdist(coords) if coords.shape[0] > 1 else np.empty(0)
    sq = np.zeros(coords.shape[0] * (coords.shape[0] - 1) // 2, dtype=np.float64)
    for k, side in enumerate(region.sides):
        d = pdist(coords[:, k : k + 1])
        d = np.minimum(d, side - d)
        sq += d * d
    return np.sqrt(sq)


def _coords_of(points: Sequence[Point] | np.ndarray) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return np.asarray(points, dtype=np.float64)
    return np.asarray([p.as_array() for p in points], dtype=np.float64)


def graph_from_points(
    points: Sequence[Point] | np.ndarray,
    potential: PairPotential,
    region: Region,
    rng: np.random.Generator,
    *,
    meta: Mapping | None = None,
) -> LabeledGraph:
    """Couple every pair independently: edge iff ``U < 1 - exp(-phi)``.

    One uniform is drawn per pair in lexicographic order; the strict ``<``
    makes probability-0 and probability-1 couplings deterministic.
    """
    coords = _coords_of(points)
    n = coords.shape[0]
    dists = condensed_distances(coords, region)
    probs = edge_probability_radial(potential, dists)
    hits = rng.random(probs.shape[0]) < probs
    adj: list[list[int]] = [[] for _ in range(n)]
    if hits.any():
        ii, jj = np.triu_indices(n, k=1)
        for i, j in zip(ii[hits], jj[hits]):
            adj[i].append(int(j))
            adj[j].append(int(i))
    return LabeledGraph(coords, adj, region=region, potential=potential, meta=meta)


def sample_graph(
    region: Region,
    potential: PairPotential,
    n: int,
    rng: np.random.Generator,
    *,
    meta: Mapping | None = None,
) -> LabeledGraph:
    """Sample points, then couple them into a graph (the full reduction step)."""
    coords = sample_uniform_array(region, n, rng)
    if n < 1:
        raise ValueError(f"need at least one point, got n={n}")
    full_meta = {
        "n": n,
        "region": region.to_config(),
        "potential": potential_to_config(potential),
    }
    if meta:
        full_meta.update(meta)
    return graph_from_points(coords, potential, region, rng, meta=full_meta)


def max_degree(graph: LabeledGraph) -> int:
    """Largest vertex degree (0 for the empty graph)."""
    return graph.max_degree()
