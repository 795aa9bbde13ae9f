"""Axis-aligned box regions with open or periodic boundaries.

A region is a box ``[0, L_1] x ... x [0, L_d]``. With open boundaries the
metric is plain Euclidean; with periodic boundaries each axis wraps, i.e.
the per-axis separation is ``min(|dx|, L - |dx|)``. The periodic torus
makes translation-invariant quantities exact, which is what several of the
closed-form oracles in the test suite rely on.

Volumes are always the product of side lengths — the boundary condition
changes the metric, not the measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

__all__ = ["Point", "Region", "sample_uniform", "sample_uniform_array"]

_BOUNDARIES = ("open", "periodic")


@dataclass(frozen=True)
class Point:
    """An immutable point; coordinates are stored as a float tuple."""

    coords: tuple[float, ...]

    def __init__(self, coords: Iterable[float]) -> None:
        object.__setattr__(self, "coords", tuple(float(c) for c in coords))
        if len(self.coords) == 0:
            raise ValueError("a point needs at least one coordinate")
        if not all(np.isfinite(self.coords)):
            raise ValueError(f"non-finite coordinate in {self.coords}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=np.float64)

    def __iter__(self):
        return iter(self.coords)


@dataclass(frozen=True)
class Region:
    """Box ``[0, L_1] x ... x [0, L_d]`` with a boundary condition.

    Parameters
    ----------
    sides : tuple of float
        Positive, finite side lengths ``L_1 .. L_d``.
    boundary : {"open", "periodic"}
        Metric flavour; see the module docstring.
    """

    sides: tuple[float, ...]
    boundary: str = "open"
    _sides_arr: np.ndarray = field(init=False, repr=False, compare=False)

    def __init__(self, sides: Iterable[float], boundary: str = "open") -> None:
        sides = tuple(float(s) for s in sides)
        if len(sides) == 0:
            raise ValueError("a region needs at least one side")
        if not all(np.isfinite(s) and s > 0 for s in sides):
            raise ValueError(f"side lengths must be positive and finite, got {sides}")
        if boundary not in _BOUNDARIES:
            raise ValueError(f"boundary must be one of {_BOUNDARIES}, got {boundary!r}")
        object.__setattr__(self, "sides", sides)
        object.__setattr__(self, "boundary", boundary)
        arr = np.asarray(sides, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "_sides_arr", arr)

    @property
    def dim(self) -> int:
        return len(self.sides)

    @property
    def volume(self) -> float:
        """Lebesgue volume, i.e. the product of the side lengths."""
        return float(np.prod(self._sides_arr))

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    def contains(self, p: Point) -> bool:
        if p.dim != self.dim:
            raise ValueError(f"dimension mismatch: point {p.dim}d, region {self.dim}d")
        return all(0.0 <= c <= s for c, s in zip(p.coords, self.sides))

    def axis_separations(self, deltas: np.ndarray) -> np.ndarray:
        """Per-axis separations for raw coordinate differences ``deltas``.

        ``deltas`` has shape (..., dim); the result is ``|deltas|``, wrapped
        per axis when the region is periodic.
        """
        d = np.abs(np.asarray(deltas, dtype=np.float64))
        if self.periodic:
            d = np.minimum(d, self._sides_arr - d)
        return d

    def distance(self, p: Point, q: Point) -> float:
        """Metric distance between two points under this region's boundary."""
        if p.dim != self.dim or q.dim != self.dim:
            raise ValueError("point/region dimension mismatch")
        sep = self.axis_separations(p.as_array() - q.as_array())
        return float(np.sqrt(np.sum(sep * sep)))

    def distances(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`distance` on coordinate arrays of shape (..., dim)."""
        sep = self.axis_separations(np.asarray(a, float) - np.asarray(b, float))
        return np.sqrt(np.sum(sep * sep, axis=-1))

    def to_config(self) -> dict:
        return {"sides": list(self.sides), "boundary": self.boundary}

    @classmethod
    def from_config(cls, cfg: dict) -> "Region":
        return cls(cfg["sides"], cfg.get("boundary", "open"))


def sample_uniform(region: Region, rng: np.random.Generator) -> Point:
    """One point drawn uniformly from the region."""
    return Point(rng.random(region.dim) * region._sides_arr)


def sample_uniform_array(region: Region, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. uniform points as an (n, dim) coordinate array."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    return rng.random((n, region.dim)) * region._sides_arr
