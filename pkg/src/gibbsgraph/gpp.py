"""Repulsive point processes on box regions, and their graph reduction.

An instance is (region, potential, fugacity). The normalizing constant is
the series over configuration orders

    Xi = 1 + sum_{k>=1} (lam^k / k!) * integral over V^k of e^{-H},

with H the pairwise energy (including a same-point multiplicity term that
only matters on null sets). Everything here works at desk scale:

* ``oracle_partition``     — per-order Monte Carlo of the series, with a
                             deterministic factorial tail bound; the ground
                             truth the reduction is judged against.
* ``choose_n``             — the concentration bound's vertex count.
* ``approximate_partition``— the full pipeline: n points -> random graph ->
                             degree check -> annealed hard-core estimate at
                             activity lam*nu/n.
* ``sample_configuration`` — the sampling pipeline: same reduction, then a
                             (Glauber or exact) hard-core draw; occupied
                             vertices become the returned points.
* ``void_probability_oracle`` — ratio of restricted to full partition
                             functions, via the same per-order oracle.

"paper" mode evaluates the analytic worst-case n formulas (astronomical on
purpose, guarantee-first); practical mode takes the caller's n and logs the
worst-case value alongside when it is defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.special import gammaln

from .geometry import Point, Region, sample_uniform_array
from .graphgen import LabeledGraph, condensed_distances, max_degree, sample_graph
from .hardcore import (
    EXACT_CONDITIONAL_LIMIT,
    Estimate,
    estimate_partition,
    glauber_steps_default,
    glauber_sample,
    sample_spin_exact,
)
from .potential import (
    PairPotential,
    ZeroPotential,
    potential_from_config,
    temperedness_constant,
)

__all__ = [
    "GPPInstance",
    "PointConfiguration",
    "hamiltonian",
    "oracle_partition",
    "choose_n",
    "approximate_partition",
    "sample_configuration",
    "void_probability_oracle",
]

_E = math.e


@dataclass(frozen=True)
class GPPInstance:
    """A repulsive point process: box region, pair potential, fugacity."""

    region: Region
    potential: PairPotential
    fugacity: float

    def __post_init__(self):
        if not (np.isfinite(self.fugacity) and self.fugacity >= 0):
            raise ValueError(f"fugacity must be >= 0, got {self.fugacity}")

    @property
    def effective_activity(self) -> float:
        """lam * volume — the expected point count of the ideal-gas reference."""
        return self.fugacity * self.region.volume

    @property
    def interaction_strength(self) -> float:
        """Free-space integral of the coupling probability (C_phi)."""
        return temperedness_constant(self.potential, self.region.dim)

    @property
    def in_regime(self) -> bool:
        """Whether lam * C_phi < e, the regime all the guarantees assume."""
        return self.fugacity * self.interaction_strength < _E

    def to_config(self) -> dict:
        return {
            "region": self.region.to_config(),
            "potential": self.potential.to_config(),
            "fugacity": self.fugacity,
        }

    @staticmethod
    def from_config(config: dict) -> "GPPInstance":
        missing = {"region", "potential", "fugacity"} - set(config)
        if missing:
            raise ValueError(f"instance config missing {sorted(missing)}")
        return GPPInstance(
            region=Region.from_config(config["region"]),
            potential=potential_from_config(config["potential"]),
            fugacity=float(config["fugacity"]),
        )


@dataclass(frozen=True)
class PointConfiguration:
    """A finite multiset of points, kept as a list (repetition = multiplicity)."""

    points: tuple[Point, ...]

    def __init__(self, points: Iterable[Point]) -> None:
        object.__setattr__(self, "points", tuple(points))
        if any(not isinstance(p, Point) for p in self.points):
            raise TypeError("PointConfiguration takes Points")

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def as_array(self) -> np.ndarray:
        if not self.points:
            return np.empty((0, 1))
        return np.asarray([p.as_array() for p in self.points])

    def to_json_list(self) -> list:
        return [[float(c) for c in p.coords] for p in self.points]


def hamiltonian(instance: GPPInstance, config: PointConfiguration) -> float:
    """Total pair energy of the configuration; +inf propagates.

    The sum runs over all unordered index pairs, which covers both distinct
    points and the multiplicity term m(m-1)/2 * phi(x, x) for repeated ones
    (their separation is zero).
    """
    for p in config.points:
        if p.dim != instance.region.dim:
            raise ValueError("configuration/region dimension mismatch")
        if not instance.region.contains(p):
            raise ValueError(f"point {p.coords} outside the region")
    if len(config) <= 1:
        return 0.0
    dists = condensed_distances(config.as_array(), instance.region)
    return float(np.sum(instance.potential.phi_radial(dists)))


# -- series oracle --------------------------------------------------------


def _boltzmann_means(
    potential: PairPotential,
    region: Region,
    orders: int,
    samples: int,
    rng: np.random.Generator,
    sampler=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo means (and sds) of e^{-H} over k-tuples, k = 1..orders.

    ``sampler(shape, rng)`` overrides the per-point law (used for restricted
    regions); it must return uniform draws on the target set with the
    region's metric still applying.
    """
    means = np.ones(orders + 1)
    sds = np.zeros(orders + 1)
    if isinstance(potential, ZeroPotential):
        return means, sds  # every integrand is exactly 1
    for k in range(2, orders + 1):
        if sampler is None:
            pts = sample_uniform_array(region, samples * k, rng).reshape(samples, k, -1)
        else:
            pts = sampler((samples, k), rng)
        log_boltz = np.zeros(samples)
        for i in range(k - 1):
            for j in range(i + 1, k):
                d = region.distances(pts[:, i, :], pts[:, j, :])
                log_boltz -= potential.phi_radial(d)
        boltz = np.exp(log_boltz)  # e^{-inf} = 0 exactly
        means[k] = float(np.mean(boltz))
        sds[k] = float(np.std(boltz, ddof=1))
    return means, sds


def _default_truncation(activity: float, tail_rel: float = 1e-6) -> int:
    return max(math.ceil(_E**3 * activity), math.ceil(math.log(2.0 / tail_rel)), 1)


def _series_estimate(
    potential: PairPotential,
    region: Region,
    lam: float,
    volume: float,
    truncation: int | None,
    samples_per_order: int,
    rng: np.random.Generator,
    sampler=None,
) -> Estimate:
    activity = lam * volume
    if activity == 0:
        return Estimate(value=1.0, std_error=0.0, flags=("exact",))
    m = _default_truncation(activity) if truncation is None else int(truncation)
    if m < 0:
        raise ValueError(f"truncation must be >= 0, got {m}")
    means, sds = _boltzmann_means(potential, region, m, samples_per_order, rng, sampler)
    ks = np.arange(m + 1)
    log_coef = ks * math.log(activity) - gammaln(ks + 1)  # activity^k / k!
    coef = np.exp(log_coef)
    terms = coef * means
    value = float(np.sum(terms))  # k = 0 term is the leading 1
    term_ses = coef * sds / math.sqrt(samples_per_order)
    std_error = float(np.sqrt(np.sum(term_ses**2)))
    log_tail = activity + (m + 1) * math.log(activity) - gammaln(m + 2)
    tail = float(np.exp(log_tail))
    return Estimate(
        value=value,
        std_error=std_error,
        replicates=samples_per_order,
        extra={
            "orders": m,
            "order_means": means.tolist(),
            "order_terms": terms.tolist(),
            "order_term_ses": term_ses.tolist(),
            "tail_bound": tail,
        },
    )


def oracle_partition(
    instance: GPPInstance,
    rng: np.random.Generator,
    *,
    truncation: int | None = None,
    samples_per_order: int = 4000,
) -> Estimate:
    """Truncated-series Monte Carlo reference value for Xi.

    Order k is estimated by ``samples_per_order`` uniform k-tuples; the
    reported std_error is the statistical part, and extra["tail_bound"]
    carries the deterministic remainder bound e^{a} a^{m+1} / (m+1)! for
    activity a — callers should treat value +- (3 se + tail) as the trust
    interval. The default truncation makes the tail negligible.
    """
    return _series_estimate(
        instance.potential,
        instance.region,
        instance.fugacity,
        instance.region.volume,
        truncation,
        samples_per_order,
        rng,
    )


# -- the reduction pipeline ------------------------------------------------


def choose_n(instance: GPPInstance, eps: float, delta: float, mode: Union[str, int] = "paper") -> int:
    """Vertex count for the concentration guarantee.

    Paper mode: ceil(4 eps^-2 delta^-1 max{e^6 (lam nu)^2, ln(4/eps)^2}).
    Practical mode (an integer) is passed through; callers record the gap.
    """
    if not 0 < eps <= 1 or not 0 < delta <= 1:
        raise ValueError(f"eps and delta must be in (0, 1], got {eps}, {delta}")
    if mode != "paper":
        n = int(mode)
        if n < 1:
            raise ValueError(f"practical n must be >= 1, got {mode}")
        return n
    a = instance.effective_activity
    bound = 4.0 / (eps**2 * delta) * max(_E**6 * a**2, math.log(4.0 / eps) ** 2)
    return math.ceil(bound)


def _pipeline_constant(instance: GPPInstance) -> float:
    """K = max{1/(e - lam C), lam C / (e - lam C)^2}; needs the regime."""
    lc = instance.fugacity * instance.interaction_strength
    if lc >= _E:
        raise ValueError(
            f"lam * C_phi = {lc:.4g} >= e: outside the guaranteed regime, "
            "paper-mode sizes are undefined (use practical mode)"
        )
    return max(1.0 / (_E - lc), lc / (_E - lc) ** 2)


def _paper_pipeline_n(instance: GPPInstance, eps: float) -> int:
    """n for the end-to-end approximation: concentration branch or mixing branch."""
    a = instance.effective_activity
    first = 324.0 / eps**2 * max(_E**6 * a**2, math.log(4.0 / eps) ** 2)
    second = 0.0
    if a > 0:
        ka = 24.0 * _pipeline_constant(instance) * a
        second = ka * math.log(ka) ** 2
    return math.ceil(max(first, second))


def _paper_sampling_n(instance: GPPInstance, eps: float) -> int:
    """n printed in the sampling routine: eps^-3 branch vs mixing branch."""
    a = instance.effective_activity
    first = 8.0 * (18.0**2 * 12.0) / eps**3 * max(_E**6 * a**2, math.log(72.0 / eps))
    second = 0.0
    if a > 0:
        le = math.log(4.0 * _E / eps)
        ka = _pipeline_constant(instance) * a
        second = 6.0 * le * ka * math.log(3.0 * le * ka) ** 2
    return math.ceil(max(first, second))


def _degree_cap(n: int, activity: float) -> float:
    return _E * n / activity if activity > 0 else math.inf


def approximate_partition(
    instance: GPPInstance,
    eps: float,
    rng: np.random.Generator,
    mode: Union[str, int] = "paper",
) -> Estimate:
    """Estimate Xi through the random-graph reduction.

    Draws n points and the coupled graph, rejects when the maximum degree
    reaches e*n/(lam*nu) (invalid estimate with reason "degree"), and
    otherwise runs the annealed hard-core estimator at activity lam*nu/n
    with target eps/3 and failure probability 1/9. ``mode`` is "paper" or a
    practical integer n; the paper-mode n is logged in extra whenever the
    instance is inside the guaranteed regime.
    """
    if not 0 < eps <= 1:
        raise ValueError(f"eps must be in (0, 1], got {eps}")
    if instance.fugacity == 0:
        return Estimate(value=1.0, std_error=0.0, rel_error_target=eps, flags=("exact",))
    activity = instance.effective_activity
    try:
        paper_n = _paper_pipeline_n(instance, eps)
    except ValueError:
        paper_n = None
    if mode == "paper":
        if paper_n is None:
            raise ValueError("paper mode needs lam * C_phi < e")
        n = paper_n
        flags: tuple[str, ...] = ()
    else:
        n = int(mode)
        if n < 1:
            raise ValueError(f"practical n must be >= 1, got {mode}")
        flags = ("practical_n",)
    graph = sample_graph(instance.region, instance.potential, n, rng)
    lam_n = activity / n
    extra = {
        "n": n,
        "paper_n": paper_n,
        "lambda_n": lam_n,
        "max_degree": max_degree(graph),
        "degree_cap": _degree_cap(n, activity),
    }
    if max_degree(graph) >= _degree_cap(n, activity):
        return Estimate(
            value=1.0,  # arbitrary by contract; never use it
            rel_error_target=eps,
            valid=False,
            reason="degree",
            flags=flags,
            extra=extra,
        )
    inner = estimate_partition(graph, lam_n, eps / 3.0, rng, fail_prob=1.0 / 9.0)
    extra["estimator"] = inner.extra
    return Estimate(
        value=inner.value,
        std_error=inner.std_error,
        rel_error_target=eps,
        confidence=2.0 / 3.0,
        replicates=inner.replicates,
        flags=flags + inner.flags,
        extra=extra,
    )


def sample_configuration(
    instance: GPPInstance,
    eps: float,
    rng: np.random.Generator,
    mode: Union[str, int] = "paper",
    sampler: str = "glauber",
    steps: int | None = None,
) -> PointConfiguration:
    """Draw an approximate sample of the point process.

    The reduction pipeline again: n points, coupled graph, degree check
    (failure returns the empty configuration, per the procedure's own
    rule), then a hard-core spin draw at activity lam*nu/n — eps/4-close in
    total variation via Glauber, or exact by sequential conditionals when
    n <= 26 (validation only). Occupied vertices' points are returned.

    ``steps`` overrides the Glauber chain length (default: the worst-case
    budget for eps/4 total variation); instances far below the uniqueness
    threshold mix much faster than that budget, so callers who verify
    output statistics may shorten the chain. The exact sampler ignores it.
    """
    config, _ = _sample_configuration_details(instance, eps, rng, mode, sampler, steps)
    return config


def _sample_configuration_details(
    instance: GPPInstance,
    eps: float,
    rng: np.random.Generator,
    mode: Union[str, int] = "paper",
    sampler: str = "glauber",
    steps: int | None = None,
) -> tuple[PointConfiguration, dict]:
    if not 0 < eps <= 1:
        raise ValueError(f"eps must be in (0, 1], got {eps}")
    if sampler not in ("glauber", "exact"):
        raise ValueError(f"sampler must be 'glauber' or 'exact', got {sampler!r}")
    if instance.fugacity == 0:
        return PointConfiguration([]), {"n": 0, "degree_failed": False, "count": 0}
    if mode == "paper":
        n = _paper_sampling_n(instance, eps)
    else:
        n = int(mode)
        if n < 1:
            raise ValueError(f"practical n must be >= 1, got {mode}")
    if sampler == "exact" and n > EXACT_CONDITIONAL_LIMIT:
        raise ValueError(
            f"exact sampler limited to n <= {EXACT_CONDITIONAL_LIMIT}, got n = {n}"
        )
    activity = instance.effective_activity
    graph = sample_graph(instance.region, instance.potential, n, rng)
    details = {"n": n, "max_degree": max_degree(graph), "degree_cap": _degree_cap(n, activity)}
    if max_degree(graph) >= _degree_cap(n, activity):
        details.update(degree_failed=True, count=0)
        return PointConfiguration([]), details
    lam_n = activity / n
    if sampler == "glauber":
        spins = glauber_sample(graph, lam_n, rng, steps=steps, eps_tv=eps / 4.0)
    else:
        spins = sample_spin_exact(graph, lam_n, rng)
    pts = [Point(graph.coords[v]) for v in spins.occupied()]
    details.update(degree_failed=False, count=len(pts))
    return PointConfiguration(pts), details


# -- void probabilities ----------------------------------------------------


def _normalize_box(
    region: Region, sub_box: Union[Region, tuple, list]
) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(sub_box, Region):
        lo = np.zeros(sub_box.dim)
        hi = np.asarray(sub_box.sides, dtype=float)
    else:
        lo_raw, hi_raw = sub_box
        lo = np.atleast_1d(np.asarray(lo_raw, dtype=float))
        hi = np.atleast_1d(np.asarray(hi_raw, dtype=float))
    if lo.shape != (region.dim,) or hi.shape != (region.dim,):
        raise ValueError("sub-box dimension does not match the region")
    if np.any(lo > hi):
        raise ValueError("sub-box has lower > upper")
    if np.any(lo < 0) or np.any(hi > np.asarray(region.sides)):
        raise ValueError("sub-box is not contained in the region")
    return lo, hi


def void_probability_oracle(
    instance: GPPInstance,
    sub_box: Union[Region, tuple, list],
    rng: np.random.Generator,
    *,
    truncation: int | None = None,
    samples_per_order: int = 4000,
) -> Estimate:
    """Probability of seeing no point in the box B: Xi over V minus B / Xi.

    ``sub_box`` is either a Region (anchored at the origin) or a pair
    (lower_corner, upper_corner) inside the region. Both partition
    functions come from the series oracle; the restricted one samples
    points by rejection outside B while the metric stays the region's. The
    combined relative errors propagate into the ratio's std_error.
    """
    region = instance.region
    lo, hi = _normalize_box(region, sub_box)
    vol_box = float(np.prod(hi - lo))
    if vol_box == 0.0:
        return Estimate(value=1.0, std_error=0.0, flags=("exact",))
    vol_rest = region.volume - vol_box
    lam = instance.fugacity
    if lam == 0:
        return Estimate(value=1.0, std_error=0.0, flags=("exact",))
    m = _default_truncation(lam * region.volume) if truncation is None else int(truncation)

    if vol_rest == 0.0:
        restricted = Estimate(value=1.0, std_error=0.0)
    else:

        def outside_sampler(shape: tuple[int, int], srng: np.random.Generator) -> np.ndarray:
            count = shape[0] * shape[1]
            pts = sample_uniform_array(region, count, srng)
            while True:
                inside = np.all((pts >= lo) & (pts < hi), axis=1)
                bad = np.flatnonzero(inside)
                if bad.size == 0:
                    break
                pts[bad] = sample_uniform_array(region, bad.size, srng)
            return pts.reshape(shape[0], shape[1], -1)

        restricted = _series_estimate(
            instance.potential, region, lam, vol_rest, m, samples_per_order, rng,
            sampler=outside_sampler,
        )
    full = _series_estimate(
        instance.potential, region, lam, region.volume, m, samples_per_order, rng
    )
    value = restricted.value / full.value
    rel = math.sqrt(
        (restricted.std_error / restricted.value) ** 2 + (full.std_error / full.value) ** 2
    )
    return Estimate(
        value=value,
        std_error=value * rel,
        replicates=samples_per_order,
        extra={
            "restricted": restricted.value,
            "full": full.value,
            "tail_bound_full": full.extra.get("tail_bound", 0.0),
            "tail_bound_restricted": restricted.extra.get("tail_bound", 0.0),
            "box_volume": vol_box,
        },
    )
