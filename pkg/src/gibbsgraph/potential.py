"""Repulsive pair potentials.

A potential is radial and nonnegative (possibly +inf, the hard-core case),
evaluated on the region's metric distance. Three derived quantities drive
everything downstream:

* ``phi``              — the interaction energy of a pair,
* ``edge_probability`` — ``1 - exp(-phi)``, the coupling probability used
                         to turn point pairs into graph edges,
* ``temperedness_constant`` — the integral of ``1 - exp(-phi(|x|))`` over
                         all of R^d, which controls expected degrees and
                         the activity regime of the reduction.

The temperedness integral is taken over free space rather than the finite
box; it upper-bounds the in-box value, and callers that report it label it
as the free-space constant.

Potentials are value objects with a small registry keyed by ``family`` so
they can round-trip through JSON configs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np
from scipy import integrate

from .geometry import Point, Region

__all__ = [
    "PairPotential",
    "ZeroPotential",
    "HardSphere",
    "GaussianOverlap",
    "GeneralizedExponential",
    "HardCoreYukawa",
    "phi",
    "edge_probability",
    "edge_probability_radial",
    "temperedness_constant",
    "ball_volume",
    "potential_from_config",
    "potential_to_config",
]

ArrayLike = Union[float, np.ndarray]


def ball_volume(dim: int, radius: float) -> float:
    """Volume of the Euclidean ball of the given radius in ``dim`` dimensions."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * radius**dim


def _sphere_surface(dim: int) -> float:
    # surface measure of the unit sphere in R^dim (2 for dim=1: the two signs)
    return 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)


class PairPotential:
    """Base class: radial, nonnegative, possibly infinite pair interaction."""

    family: str = "abstract"

    def phi_radial(self, dist: ArrayLike) -> ArrayLike:
        """Interaction energy at separation ``dist`` (vectorized)."""
        raise NotImplementedError

    def core_diameter(self) -> float:
        """Separation below which the energy is infinite (0 for soft potentials)."""
        return 0.0

    def params(self) -> dict:
        raise NotImplementedError

    def to_config(self) -> dict:
        return {"family": self.family, **self.params()}


@dataclass(frozen=True)
class ZeroPotential(PairPotential):
    """No interaction: the ideal gas / empty graph limit."""

    family = "zero"

    def phi_radial(self, dist: ArrayLike) -> ArrayLike:
        return np.zeros_like(np.asarray(dist, dtype=np.float64))

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class HardSphere(PairPotential):
    """Hard spheres of radius ``r``: infinite below separation ``2r``, else zero."""

    r: float
    family = "hard_sphere"

    def __post_init__(self):
        if not (np.isfinite(self.r) and self.r > 0):
            raise ValueError(f"hard-sphere radius must be positive, got {self.r}")

    def phi_radial(self, dist: ArrayLike) -> ArrayLike:
        d = np.asarray(dist, dtype=np.float64)
        return np.where(d < 2.0 * self.r, np.inf, 0.0)

    def core_diameter(self) -> float:
        return 2.0 * self.r

    def params(self) -> dict:
        return {"r": self.r}


@dataclass(frozen=True)
class GaussianOverlap(PairPotential):
    """Gaussian repulsion ``eps * exp(-(d/sigma)^2)`` (penetrable spheres)."""

    eps: float
    sigma: float
    family = "gaussian_overlap"

    def __post_init__(self):
        if not (np.isfinite(self.eps) and self.eps >= 0):
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be > 0, got {self.sigma}")

    def phi_radial(self, dist: ArrayLike) -> ArrayLike:
        d = np.asarray(dist, dtype=np.float64)
        return self.eps * np.exp(-((d / self.sigma) ** 2))

    def params(self) -> dict:
        return {"eps": self.eps, "sigma": self.sigma}


@dataclass(frozen=True)
class GeneralizedExponential(PairPotential):
    """``eps * exp(-(d/sigma)^p)``; p=2 recovers the Gaussian overlap model."""

    eps: float
    sigma: float
    p: float
    family = "generalized_exponential"

    def __post_init__(self):
        if not (np.isfinite(self.eps) and self.eps >= 0):
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not (np.isfinite(self.p) and self.p > 0):
            raise ValueError(f"p must be > 0, got {self.p}")

    def phi_radial(self, dist: ArrayLike) -> ArrayLike:
        d = np.asarray(dist, dtype=np.float64)
        return self.eps * np.exp(-((d / self.sigma) ** self.p))

    def params(self) -> dict:
        return {"eps": self.eps, "sigma": self.sigma, "p": self.p}


@dataclass(frozen=True)
class HardCoreYukawa(PairPotential):
    """Hard core of diameter ``hard_radius`` plus a screened-Coulomb tail.

    Outside the core the energy is ``eps * exp(-kappa d) / d``.
    """

    hard_radius: float
    eps: float
    kappa: float
    family = "hard_core_yukawa"

    def __post_init__(self):
        if not (np.isfinite(self.hard_radius) and self.hard_radius >= 0):
            raise ValueError(f"hard_radius must be >= 0, got {self.hard_radius}")
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError(f"kappa must be > 0, got {self.kappa}")

    def phi_radial(self, dist: ArrayLike) -> ArrayLike:
        d = np.asarray(dist, dtype=np.float64)
        safe = np.maximum(d, self.hard_radius)  # tail formula only evaluated there
        with np.errstate(divide="ignore"):  # hard_radius = 0 at separation 0
            tail = self.eps * np.exp(-self.kappa * safe) / safe
        return np.where(d < self.hard_radius, np.inf, tail)

    def core_diameter(self) -> float:
        return self.hard_radius

    def params(self) -> dict:
        return {"hard_radius": self.hard_radius, "eps": self.eps, "kappa": self.kappa}


def phi(potential: PairPotential, region: Region, p: Point, q: Point) -> float:
    """Pair energy of two points under the region's metric."""
    return float(potential.phi_radial(region.distance(p, q)))


def edge_probability(potential: PairPotential, region: Region, p: Point, q: Point) -> float:
    """Coupling probability ``1 - exp(-phi(p, q))``.

    Exactly 1.0 for hard overlaps and exactly 0.0 for non-interacting pairs.
    """
    return float(-np.expm1(-potential.phi_radial(region.distance(p, q))))


def edge_probability_radial(potential: PairPotential, dists: np.ndarray) -> np.ndarray:
    """Vectorized coupling probability as a function of separation."""
    return -np.expm1(-potential.phi_radial(dists))


def temperedness_constant(potential: PairPotential, dim: int) -> float:
    """Integral of ``1 - exp(-phi(|x|))`` over R^dim (free space).

    Closed form for the purely hard families; adaptive quadrature on the
    radial profile otherwise. Raises ``RuntimeError`` if the quadrature
    does not converge to relative accuracy ~1e-6.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if isinstance(potential, ZeroPotential):
        return 0.0
    if isinstance(potential, HardSphere):
        return ball_volume(dim, 2.0 * potential.r)

    core = potential.core_diameter()
    surface = _sphere_surface(dim)

    def integrand(t: float) -> float:
        return -math.expm1(-float(potential.phi_radial(t))) * t ** (dim - 1)

    val, abserr = integrate.quad(integrand, core, np.inf, epsrel=1e-8, epsabs=1e-12, limit=300)
    tail = surface * val
    if abserr > 1e-6 * max(abs(val), 1e-12):
        raise RuntimeError(
            f"temperedness integral for {potential.family} (dim={dim}) did not converge: "
            f"value {val:.6g}, abserr {abserr:.2g}"
        )
    return ball_volume(dim, core) + tail


_FAMILIES = {
    "zero": (ZeroPotential, ()),
    "hard_sphere": (HardSphere, ("r",)),
    "gaussian_overlap": (GaussianOverlap, ("eps", "sigma")),
    "generalized_exponential": (GeneralizedExponential, ("eps", "sigma", "p")),
    "hard_core_yukawa": (HardCoreYukawa, ("hard_radius", "eps", "kappa")),
}


def potential_from_config(cfg: Mapping) -> PairPotential:
    """Build a potential from a ``{"family": ..., <params>}`` mapping."""
    try:
        family = cfg["family"]
    except KeyError:
        raise ValueError("potential config needs a 'family' key") from None
    try:
        cls, keys = _FAMILIES[family]
    except KeyError:
        raise ValueError(
            f"unknown potential family {family!r}; known: {sorted(_FAMILIES)}"
        ) from None
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ValueError(f"potential family {family!r} missing parameters {missing}")
    extra = set(cfg) - set(keys) - {"family"}
    if extra:
        raise ValueError(f"potential family {family!r} got unknown parameters {sorted(extra)}")
    return cls(*(float(cfg[k]) for k in keys))


def potential_to_config(potential: PairPotential) -> dict:
    return potential.to_config()
