"""Seeded batch experiments: concentration, estimation, sampling, lemmas.

Every runner takes one ExperimentSpec and returns (rows, summary). All
randomness derives from the spec's master seed through index-keyed
substreams (one per replicate), so reruns reproduce each TrialRow exactly
and partial reruns of single replicates are possible. Wall-clock fields are
informational and excluded from row equality.

Row files are JSON Lines with a header line carrying the resolved spec, so
a summary can always be recomputed from the file alone (``summarize``).

The lemma suite deliberately avoids floating point: partition functions of
the small corpus graphs are evaluated as exact rationals from integer
occupancy/conflict counts, so an inequality violation means mathematics,
not rounding.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import poisson

from ._kernels import hs1d_alg1_batch
from .geometry import Region
from .gpp import (
    GPPInstance,
    approximate_partition,
    oracle_partition,
    void_probability_oracle,
    _sample_configuration_details,
)
from .graphgen import LabeledGraph, max_degree, sample_graph
from .hardcore import (
    EXACT_COUNT_LIMIT,
    estimate_partition,
    glauber_steps_default,
    partition_exact,
    partition_exact_interval,
)
from .potential import HardSphere
from .seeding import kernel_seed, substream
from .weitz import (
    connective_bound_check,
    distance_ordering,
    pwcc_estimate,
    ssm_decay_table,
    weitz_layer_counts,
)

__all__ = [
    "KINDS",
    "ExperimentSpec",
    "TrialRow",
    "run_experiment",
    "run_concentration",
    "run_approximate_z",
    "run_sample_validate",
    "run_lemma_suite",
    "run_connective",
    "run_ssm",
    "summarize",
    "write_rows_jsonl",
    "read_rows_jsonl",
    "write_summary_json",
]

KINDS = (
    "concentration",
    "approximate_z",
    "sample_validate",
    "lemma_suite",
    "connective",
    "ssm",
)

_NEEDS_N = {"concentration", "sample_validate", "connective", "ssm"}


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: kind, instance, sizes, tolerances, master seed."""

    kind: str
    instance: GPPInstance
    n: int | None = None
    n_grid: tuple[int, ...] | None = None
    trials: int = 1
    eps: float = 0.1
    delta: float = 0.1
    seed: int = 0
    out: str | None = None
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0 < self.eps <= 1 or not 0 < self.delta <= 1:
            raise ValueError(f"eps and delta must be in (0, 1], got {self.eps}, {self.delta}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.kind in _NEEDS_N and self.n is None:
            raise ValueError(f"experiment kind {self.kind!r} needs an explicit n")
        if self.n is not None and self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.n_grid is not None:
            object.__setattr__(self, "n_grid", tuple(int(x) for x in self.n_grid))
            if any(x < 1 for x in self.n_grid):
                raise ValueError("n_grid entries must be >= 1")
        object.__setattr__(self, "params", dict(self.params))

    def to_config(self) -> dict:
        cfg = {
            "kind": self.kind,
            "instance": self.instance.to_config(),
            "trials": self.trials,
            "eps": self.eps,
            "delta": self.delta,
            "seed": self.seed,
            "params": dict(self.params),
        }
        if self.n is not None:
            cfg["n"] = self.n
        if self.n_grid is not None:
            cfg["n_grid"] = list(self.n_grid)
        if self.out is not None:
            cfg["out"] = self.out
        return cfg

    @staticmethod
    def from_config(config: Mapping) -> "ExperimentSpec":
        if "kind" not in config or "instance" not in config:
            raise ValueError("experiment config needs 'kind' and 'instance'")
        known = {"kind", "instance", "n", "n_grid", "trials", "eps", "delta", "seed", "out", "params"}
        extra = set(config) - known
        if extra:
            raise ValueError(f"unknown experiment config keys {sorted(extra)}")
        return ExperimentSpec(
            kind=config["kind"],
            instance=GPPInstance.from_config(config["instance"]),
            n=config.get("n"),
            n_grid=tuple(config["n_grid"]) if config.get("n_grid") else None,
            trials=int(config.get("trials", 1)),
            eps=float(config.get("eps", 0.1)),
            delta=float(config.get("delta", 0.1)),
            seed=int(config.get("seed", 0)),
            out=config.get("out"),
            params=config.get("params", {}),
        )


@dataclass(frozen=True)
class TrialRow:
    """One replicate's measurements. Wall time is informational only."""

    replicate: int
    data: Mapping
    wall_ms: float = field(default=0.0, compare=False)

    def to_json_dict(self) -> dict:
        return {"replicate": self.replicate, "data": dict(self.data), "wall_ms": self.wall_ms}

    @staticmethod
    def from_json_dict(d: Mapping) -> "TrialRow":
        return TrialRow(replicate=int(d["replicate"]), data=d["data"], wall_ms=float(d.get("wall_ms", 0.0)))


def _check_unique(rows: Sequence[TrialRow]) -> None:
    ids = [r.replicate for r in rows]
    if len(set(ids)) != len(ids):
        raise ValueError("replicate ids repeat within a run")


# -- concentration ----------------------------------------------------------


def _is_open_1d_hard_sphere(instance: GPPInstance) -> bool:
    return (
        instance.region.dim == 1
        and not instance.region.periodic
        and isinstance(instance.potential, HardSphere)
    )


def efron_stein_constant(n: int, lam_n: float) -> float:
    """C = n lam_n^2 + (n choose 2) lam_n^4 controlling the relative variance."""
    return n * lam_n**2 + n * (n - 1) / 2.0 * lam_n**4


def chebyshev_failure_bound(n: int, lam_n: float, eps: float) -> float:
    """(2 / (2 - C) - 1) / eps^2, or +inf when the bound is void (C >= 2)."""
    c = efron_stein_constant(n, lam_n)
    if c >= 2.0:
        return math.inf
    return (2.0 / (2.0 - c) - 1.0) / eps**2


def run_concentration(spec: ExperimentSpec) -> tuple[list[TrialRow], dict]:
    """Resample the graph partition value and compare spread to the bound.

    Z_G(lam nu / n) is computed exactly when possible — closed-form 1D DP
    for open hard spheres at any n, brute-force recursion for n <= 30 —
    and by the annealed estimator otherwise (method recorded per row).
    """
    if spec.kind != "concentration":
        raise ValueError(f"wrong kind {spec.kind!r} for run_concentration")
    inst, n = spec.instance, int(spec.n)
    lam_n = inst.effective_activity / n
    estimator_eps = float(spec.params.get("estimator_eps", spec.eps / 2.0))
    rows = []
    for t in range(spec.trials):
        t0 = time.perf_counter()
        rng = substream(spec.seed, t)
        graph = sample_graph(inst.region, inst.potential, n, rng)
        if _is_open_1d_hard_sphere(inst):
            method = "interval"
            z = partition_exact_interval(
                np.sort(graph.coords[:, 0]), inst.potential.core_diameter(), lam_n
            )
            valid = True
        elif n <= EXACT_COUNT_LIMIT:
            method = "exact"
            z = partition_exact(graph, lam_n)
            valid = True
        else:
            method = "estimate"
            est = estimate_partition(graph, lam_n, estimator_eps, rng)
            z, valid = est.value, est.valid
        rows.append(
            TrialRow(
                replicate=t,
                data={
                    "z": float(z),
                    "max_degree": max_degree(graph),
                    "method": method,
                    "valid": valid,
                },
                wall_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
    _check_unique(rows)
    return rows, _summarize_concentration(spec.to_config(), rows)


def _summarize_concentration(spec_cfg: dict, rows: Sequence[TrialRow]) -> dict:
    inst = GPPInstance.from_config(spec_cfg["instance"])
    n = int(spec_cfg["n"])
    eps = float(spec_cfg["eps"])
    lam_n = inst.effective_activity / n
    zs = np.asarray([r.data["z"] for r in rows if r.data["valid"]])
    mean = float(np.mean(zs))
    variance = float(np.var(zs, ddof=1)) if zs.size > 1 else 0.0
    failures = float(np.mean(np.abs(zs - mean) >= eps * mean)) if mean > 0 else 0.0
    c = efron_stein_constant(n, lam_n)
    bound = chebyshev_failure_bound(n, lam_n, eps)
    flags = ["bound_void"] if c >= 2.0 else []
    return {
        "kind": "concentration",
        "trials_used": int(zs.size),
        "mean": mean,
        "variance": variance,
        "empirical_failure_rate": failures,
        "eps": eps,
        "n": n,
        "lambda_n": lam_n,
        "efron_stein_c": c,
        "chebyshev_bound": bound,
        "flags": flags,
    }


# -- end-to-end partition estimation ---------------------------------------


def run_approximate_z(spec: ExperimentSpec) -> tuple[list[TrialRow], dict]:
    """Repeated reduction-pipeline estimates against one series-oracle value."""
    if spec.kind != "approximate_z":
        raise ValueError(f"wrong kind {spec.kind!r} for run_approximate_z")
    inst = spec.instance
    mode: object = "paper" if spec.n is None else int(spec.n)
    oracle_samples = int(spec.params.get("oracle_samples", 4000))
    oracle = oracle_partition(
        inst, substream(spec.seed, "oracle"), samples_per_order=oracle_samples
    )
    rows = []
    for t in range(spec.trials):
        t0 = time.perf_counter()
        est = approximate_partition(inst, spec.eps, substream(spec.seed, t), mode=mode)
        rows.append(
            TrialRow(
                replicate=t,
                data={
                    "value": est.value,
                    "valid": est.valid,
                    "reason": est.reason,
                    "flags": list(est.flags),
                    "n": est.extra.get("n"),
                    "max_degree": est.extra.get("max_degree"),
                    "oracle_value": oracle.value,
                    "oracle_std_error": oracle.std_error,
                },
                wall_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
    _check_unique(rows)
    return rows, _summarize_approximate_z(spec.to_config(), rows)


def _summarize_approximate_z(spec_cfg: dict, rows: Sequence[TrialRow]) -> dict:
    eps = float(spec_cfg["eps"])
    oracle_value = float(rows[0].data["oracle_value"])
    valid_values = [float(r.data["value"]) for r in rows if r.data["valid"]]
    hits = [abs(v - oracle_value) <= eps * oracle_value for v in valid_values]
    return {
        "kind": "approximate_z",
        "oracle_value": oracle_value,
        "oracle_std_error": float(rows[0].data["oracle_std_error"]),
        "trials": len(rows),
        "degree_failures": sum(1 for r in rows if not r.data["valid"]),
        "success_rate": (sum(hits) + 0.0) / len(rows),
        "mean_valid_value": float(np.mean(valid_values)) if valid_values else None,
        "eps": eps,
    }


# -- sampler validation ------------------------------------------------------


def run_sample_validate(spec: ExperimentSpec) -> tuple[list[TrialRow], dict]:
    """Draw many configurations and test count law, void law, domination.

    Open 1D hard-sphere instances run through a compiled batch sampler
    (sorted points give interval adjacency, so the whole pipeline stays in
    one kernel); everything else goes through the generic per-draw path.
    Both paths are statistically identical and are cross-checked in tests.

    ``params["steps"]`` overrides the per-draw chain length on either path
    (default: the worst-case budget for eps/4 total variation). The run's
    own gates — count-law TV, void probability, Poisson domination — are
    exactly the checks that would expose an under-mixed chain.
    """
    if spec.kind != "sample_validate":
        raise ValueError(f"wrong kind {spec.kind!r} for run_sample_validate")
    inst, n, draws = spec.instance, int(spec.n), spec.trials
    activity = inst.effective_activity
    lam_n = activity / n
    void_box = spec.params.get("void_box")
    use_fast = bool(spec.params.get("fast_path", True)) and _is_open_1d_hard_sphere(inst)
    box_lo = float(void_box[0][0] if np.ndim(void_box[0]) else void_box[0]) if void_box else 0.0
    box_hi = float(void_box[1][0] if np.ndim(void_box[1]) else void_box[1]) if void_box else 0.0
    steps_override = spec.params.get("steps")
    steps_override = int(steps_override) if steps_override is not None else None

    rows = []
    if use_fast and activity > 0:
        steps = steps_override or glauber_steps_default(n, spec.eps / 4.0)
        t0 = time.perf_counter()
        counts, in_box, deg_failed, violations = hs1d_alg1_batch(
            float(inst.region.sides[0]),
            float(inst.potential.core_diameter()),
            lam_n,
            n,
            steps,
            draws,
            kernel_seed(substream(spec.seed, "draws")),
            box_lo,
            box_hi,
            math.e * n / activity,
        )
        if violations:
            raise RuntimeError(f"sampler produced {violations} hard-core violations")
        per_row_ms = (time.perf_counter() - t0) * 1e3 / draws
        for t in range(draws):
            data = {"count": int(counts[t]), "degree_failed": bool(deg_failed[t])}
            if void_box:
                data["box_empty"] = not bool(in_box[t])
            rows.append(TrialRow(replicate=t, data=data, wall_ms=per_row_ms))
    else:
        for t in range(draws):
            t0 = time.perf_counter()
            config, details = _sample_configuration_details(
                inst, spec.eps, substream(spec.seed, "draws", t), mode=n, steps=steps_override
            )
            data = {"count": details["count"], "degree_failed": details["degree_failed"]}
            if void_box:
                pts = config.as_array()
                lo = np.atleast_1d(np.asarray(void_box[0], dtype=float))
                hi = np.atleast_1d(np.asarray(void_box[1], dtype=float))
                inside = np.all((pts >= lo) & (pts < hi), axis=1) if len(config) else np.zeros(0, bool)
                data["box_empty"] = not bool(np.any(inside))
            rows.append(TrialRow(replicate=t, data=data, wall_ms=(time.perf_counter() - t0) * 1e3))
    _check_unique(rows)

    oracle_samples = int(spec.params.get("oracle_samples", 4000))
    oracle = oracle_partition(
        inst, substream(spec.seed, "oracle"), samples_per_order=oracle_samples
    )
    void_oracle = None
    if void_box:
        void_oracle = void_probability_oracle(
            inst,
            (box_lo if inst.region.dim == 1 else void_box[0], box_hi if inst.region.dim == 1 else void_box[1]),
            substream(spec.seed, "void-oracle"),
            samples_per_order=oracle_samples,
        )
    summary = _summarize_sample_validate(
        spec.to_config(),
        rows,
        oracle_terms=oracle.extra["order_terms"],
        oracle_term_ses=oracle.extra["order_term_ses"],
        oracle_value=oracle.value,
        void_oracle=void_oracle,
    )
    return rows, summary


def _summarize_sample_validate(
    spec_cfg: dict,
    rows: Sequence[TrialRow],
    *,
    oracle_terms: Sequence[float],
    oracle_term_ses: Sequence[float],
    oracle_value: float,
    void_oracle=None,
) -> dict:
    inst = GPPInstance.from_config(spec_cfg["instance"])
    params = spec_cfg.get("params", {})
    draws = len(rows)
    counts = np.asarray([r.data["count"] for r in rows])
    target_tv = float(params.get("target_tv", 0.05))
    dkw_alpha = float(params.get("dkw_alpha", 1e-3))

    # count law: P[N = k] = term_k / Xi from the series oracle, tail lumped
    p_oracle = np.asarray(oracle_terms) / oracle_value
    m = p_oracle.size - 1
    k_hi = max(int(counts.max(initial=0)), m)
    hist = np.bincount(counts, minlength=k_hi + 1) / draws
    p_full = np.zeros(k_hi + 1)
    p_full[: m + 1] = p_oracle
    tail_oracle = max(0.0, 1.0 - float(p_oracle.sum()))
    tv = 0.5 * (float(np.abs(hist - p_full).sum()) + tail_oracle)
    oracle_tv_se = 0.5 * float(np.sum(np.asarray(oracle_term_ses)) / oracle_value)
    inconclusive = oracle_tv_se >= target_tv / 2.0

    # Poisson domination: our count CDF must sit above the Poisson CDF
    activity = inst.effective_activity
    ks = np.arange(k_hi + 1)
    ecdf = np.cumsum(hist)
    pois_cdf = poisson.cdf(ks, activity)
    dkw_band = math.sqrt(math.log(2.0 / dkw_alpha) / (2.0 * draws))
    domination_ok = bool(np.all(ecdf >= pois_cdf - dkw_band))

    summary = {
        "kind": "sample_validate",
        "draws": draws,
        "tv_counts": tv,
        "oracle_count_tv_se": oracle_tv_se,
        "inconclusive": bool(inconclusive),
        "mean_count": float(counts.mean()) if draws else 0.0,
        "degree_failure_rate": float(np.mean([r.data["degree_failed"] for r in rows])),
        "poisson_domination_ok": domination_ok,
        "dkw_band": dkw_band,
        "empirical_counts": hist.tolist(),
        "oracle_count_law": p_full.tolist(),
    }
    if void_oracle is not None:
        empties = np.asarray([bool(r.data.get("box_empty", False)) for r in rows])
        p_hat = float(empties.mean())
        se_hat = math.sqrt(max(p_hat * (1 - p_hat), 1e-12) / draws)
        gap = abs(p_hat - void_oracle.value)
        se_comb = math.sqrt(se_hat**2 + (void_oracle.std_error or 0.0) ** 2)
        summary.update(
            void_empirical=p_hat,
            void_oracle=void_oracle.value,
            void_oracle_std_error=void_oracle.std_error,
            void_gap_sigmas=gap / se_comb if se_comb > 0 else 0.0,
        )
    return summary


# -- lemma suite (exact rational arithmetic) ---------------------------------


def _conflict_profile(n: int, edges: Sequence[tuple[int, int]]) -> np.ndarray:
    """Integer matrix C[k, m] = #{subsets of size k inducing m edges}."""
    masks = np.arange(1 << n, dtype=np.uint64)
    sizes = np.bitwise_count(masks).astype(np.int64)
    bad = np.zeros(1 << n, dtype=np.int64)
    for u, v in edges:
        bad += ((masks >> np.uint64(u)) & (masks >> np.uint64(v)) & np.uint64(1)).astype(np.int64)
    profile = np.zeros((n + 1, len(edges) + 1), dtype=np.int64)
    np.add.at(profile, (sizes, bad), 1)
    return profile


def _eval_profile(profile: np.ndarray, lam: Fraction, beta: Fraction) -> Fraction:
    """Z(lam, beta) = sum_{k,m} C[k,m] lam^k beta^m, exactly (0^0 = 1)."""
    kmax, mmax = profile.shape
    lam_pows = [Fraction(1)]
    for _ in range(kmax - 1):
        lam_pows.append(lam_pows[-1] * lam)
    beta_pows = [Fraction(1)]
    for _ in range(mmax - 1):
        beta_pows.append(beta_pows[-1] * beta)
    total = Fraction(0)
    for k, m in zip(*np.nonzero(profile)):
        total += int(profile[k, m]) * lam_pows[k] * beta_pows[m]
    return total


def _exp_lower_bound(x: Fraction, terms: int = 80) -> Fraction:
    """Truncated series: a rational lower bound on e^x for x >= 0."""
    total = Fraction(1)
    term = Fraction(1)
    for j in range(1, terms):
        term = term * x / j
        total += term
    return total


def run_lemma_suite(spec: ExperimentSpec) -> tuple[list[TrialRow], dict]:
    """Exact perturbation/monotonicity inequalities over a random corpus.

    Per graph and (lam, beta) grid point (values coerced to exact
    rationals): edge removal satisfies 0 <= Z_{G-e} - Z_G <= lam^2 Z_G for
    every edge; attaching one extra vertex by two different random edge
    sets moves Z by at most lam * min of the two; and activity growth obeys
    Z(l1) <= Z(l1+l2) <= e^{l2 n} Z(l1) (with a truncated-series rational
    stand-in for the exponential, valid as a lower bound).
    """
    if spec.kind != "lemma_suite":
        raise ValueError(f"wrong kind {spec.kind!r} for run_lemma_suite")
    params = spec.params
    n_max = int(params.get("n_max", 10))
    lam_grid = [Fraction(str(x)) for x in params.get("lambda_grid", (0.1, 0.5, 1.0))]
    beta_grid = [Fraction(str(x)) for x in params.get("beta_grid", (0.0, 0.5, 1.0))]
    rows = []
    for t in range(spec.trials):
        t0 = time.perf_counter()
        rng = substream(spec.seed, t)
        n = int(rng.integers(1, n_max + 1))
        p_edge = rng.uniform(0.15, 0.85)
        edges = [
            (u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p_edge
        ]
        # two distinct attachment sets for the extra-vertex lemma
        attach_a = [v for v in range(n) if rng.random() < 0.5]
        attach_b = [v for v in range(n) if rng.random() < 0.5]
        while attach_b == attach_a:
            attach_b = [v for v in range(n) if rng.random() < 0.5]

        base = _conflict_profile(n, edges)
        removed = [_conflict_profile(n, [f for f in edges if f != e]) for e in edges]
        grown_a = _conflict_profile(n + 1, edges + [(v, n) for v in attach_a])
        grown_b = _conflict_profile(n + 1, edges + [(v, n) for v in attach_b])

        violations = {"remove_edge": 0, "add_vertex": 0, "monotonicity": 0}
        checks = {"remove_edge": 0, "add_vertex": 0, "monotonicity": 0}
        for beta in beta_grid:
            for lam in lam_grid:
                z = _eval_profile(base, lam, beta)
                for prof in removed:
                    z_minus = _eval_profile(prof, lam, beta)
                    checks["remove_edge"] += 1
                    if not (0 <= z_minus - z <= lam * lam * z):
                        violations["remove_edge"] += 1
                za = _eval_profile(grown_a, lam, beta)
                zb = _eval_profile(grown_b, lam, beta)
                checks["add_vertex"] += 1
                if not abs(za - zb) <= lam * min(za, zb):
                    violations["add_vertex"] += 1
                for lam2 in lam_grid:
                    z_up = _eval_profile(base, lam + lam2, beta)
                    checks["monotonicity"] += 1
                    if not (z <= z_up and z_up <= _exp_lower_bound(lam2 * n) * z):
                        violations["monotonicity"] += 1
        rows.append(
            TrialRow(
                replicate=t,
                data={
                    "n": n,
                    "edges": len(edges),
                    "checks": checks,
                    "violations": violations,
                },
                wall_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
    _check_unique(rows)
    return rows, _summarize_lemma_suite(rows)


def _summarize_lemma_suite(rows: Sequence[TrialRow]) -> dict:
    lemmas = ("remove_edge", "add_vertex", "monotonicity")
    totals = {name: {"checks": 0, "violations": 0} for name in lemmas}
    for r in rows:
        for name in lemmas:
            totals[name]["checks"] += int(r.data["checks"][name])
            totals[name]["violations"] += int(r.data["violations"][name])
    return {
        "kind": "lemma_suite",
        "graphs": len(rows),
        "per_lemma": totals,
        "all_pass": all(v["violations"] == 0 for v in totals.values()),
    }


# -- connective-constant growth ----------------------------------------------


def run_connective(spec: ExperimentSpec) -> tuple[list[TrialRow], dict]:
    """Fit the growth prefactor on calibration graphs, verify on test graphs.

    The growth target e^{growth_eps} n pwcc / nu comes from the estimated
    potential-weighted connective constant; the prefactor c is fitted as a
    2x slack over the worst calibration root, then every test graph must
    satisfy sum_{k<=m} L_k <= c * target^m at all roots. Targets below 1
    are floored at 1 (flagged) so edgeless instances pass trivially.
    """
    if spec.kind != "connective":
        raise ValueError(f"wrong kind {spec.kind!r} for run_connective")
    inst, n = spec.instance, int(spec.n)
    params = spec.params
    growth_eps = float(params.get("growth_eps", 0.2))
    a = float(params.get("a", 4.0))
    m = int(params.get("m", math.ceil(a * math.log(n)))) if n > 1 else int(params.get("m", 1))
    calibration_trials = int(params.get("calibration_trials", 10))
    slack = float(params.get("slack", 2.0))
    pwcc_samples = int(params.get("pwcc_samples", 10**5))
    k_max = int(params.get("pwcc_k_max", 4))
    node_budget = int(params.get("node_budget", 10**7))

    pwcc = pwcc_estimate(
        inst.potential, inst.region.dim, k_max, pwcc_samples, substream(spec.seed, "pwcc")
    )
    delta_target = math.exp(growth_eps) * n * pwcc.value / inst.region.volume
    flags = []
    if delta_target < 1.0:
        delta_target = 1.0
        flags.append("delta_floored")

    rows = []
    ratios = []
    for t in range(calibration_trials):
        t0 = time.perf_counter()
        graph = sample_graph(inst.region, inst.potential, n, substream(spec.seed, "calibration", t))
        ordering = distance_ordering(graph)
        worst, truncated_any = 0.0, False
        for root in range(graph.n):
            profile = weitz_layer_counts(graph, root, ordering, m, node_budget)
            truncated_any |= profile.truncated
            worst = max(worst, profile.total() / delta_target**m)
        ratios.append(worst)
        rows.append(
            TrialRow(
                replicate=t,
                data={
                    "role": "calibration",
                    "max_ratio": worst,
                    "truncated_any": truncated_any,
                    "delta_target": delta_target,
                    "m": m,
                    "pwcc": pwcc.value,
                    "pwcc_std_error": pwcc.std_error,
                },
                wall_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
    c_fit = slack * max(ratios) if ratios else slack

    passing = 0
    for t in range(spec.trials):
        t0 = time.perf_counter()
        graph = sample_graph(inst.region, inst.potential, n, substream(spec.seed, "test", t))
        check = connective_bound_check(
            graph, None, m, delta_target, c_fit, a, node_budget=node_budget
        )
        passing += check.all_pass
        rows.append(
            TrialRow(
                replicate=calibration_trials + t,
                data={
                    "role": "test",
                    "passed": check.all_pass,
                    "fraction_roots": check.fraction_passing,
                    "max_total": max(check.totals),
                    "truncated_any": any(check.truncated),
                },
                wall_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
    _check_unique(rows)
    summary = {
        "kind": "connective",
        "pwcc": pwcc.value,
        "pwcc_std_error": pwcc.std_error,
        "delta_target": delta_target,
        "m": m,
        "c": c_fit,
        "slack": slack,
        "fraction_passing": passing / spec.trials,
        "test_graphs": spec.trials,
        "calibration_graphs": calibration_trials,
        "flags": flags,
    }
    return rows, summary


# -- strong spatial mixing sweep ----------------------------------------------


def _path_graph(n: int) -> LabeledGraph:
    coords = np.arange(n, dtype=np.float64)[:, None]
    adjacency = [
        [v for v in (i - 1, i + 1) if 0 <= v < n] for i in range(n)
    ]
    return LabeledGraph(coords, adjacency)


def run_ssm(spec: ExperimentSpec) -> tuple[list[TrialRow], dict]:
    """Occupation-ratio decay versus pinning distance on a small graph."""
    if spec.kind != "ssm":
        raise ValueError(f"wrong kind {spec.kind!r} for run_ssm")
    params = spec.params
    n = int(spec.n)
    graph_kind = params.get("graph", "path")
    if graph_kind == "path":
        graph = _path_graph(n)
        lam = float(params.get("lam", spec.instance.fugacity))
    elif graph_kind == "sample":
        graph = sample_graph(
            spec.instance.region, spec.instance.potential, n, substream(spec.seed, "graph")
        )
        lam = float(params.get("lam", spec.instance.effective_activity / n))
    else:
        raise ValueError(f"unknown ssm graph kind {graph_kind!r}")
    root = int(params.get("root", 0))
    distance_range = [int(s) for s in params.get("distances", range(1, 7))]
    table = ssm_decay_table(
        graph,
        lam,
        root,
        distance_range,
        pair_budget=int(params.get("pair_budget", 256)),
        rng=substream(spec.seed, "pairs"),
    )
    rows = [
        TrialRow(replicate=i, data={"s": row.s, "max_gap": row.max_gap, "pairs": row.pairs_checked})
        for i, row in enumerate(table)
    ]
    _check_unique(rows)
    gaps = [row.max_gap for row in table]
    summary = {
        "kind": "ssm",
        "lam": lam,
        "root": root,
        "distances": [row.s for row in table],
        "gaps": gaps,
        "strictly_decreasing": all(a > b for a, b in zip(gaps, gaps[1:])),
    }
    return rows, summary


# -- dispatch and artifacts ----------------------------------------------------


_RUNNERS = {
    "concentration": run_concentration,
    "approximate_z": run_approximate_z,
    "sample_validate": run_sample_validate,
    "lemma_suite": run_lemma_suite,
    "connective": run_connective,
    "ssm": run_ssm,
}


def run_experiment(spec: ExperimentSpec) -> tuple[list[TrialRow], dict]:
    return _RUNNERS[spec.kind](spec)


def summarize(spec_cfg: Mapping, rows: Sequence[TrialRow]) -> dict:
    """Recompute a run's summary from its header and rows alone.

    Statistical summaries (concentration, approximate_z, lemma_suite, ssm)
    are exact functions of the rows; sample_validate re-derives its oracle
    from the seeded substreams recorded in the header, so it reproduces the
    written summary bit for bit as well.
    """
    kind = spec_cfg["kind"]
    if kind == "concentration":
        return _summarize_concentration(dict(spec_cfg), rows)
    if kind == "approximate_z":
        return _summarize_approximate_z(dict(spec_cfg), rows)
    if kind == "lemma_suite":
        return _summarize_lemma_suite(rows)
    if kind == "connective":
        spec = ExperimentSpec.from_config(spec_cfg)
        calib = [r for r in rows if r.data["role"] == "calibration"]
        tests = [r for r in rows if r.data["role"] == "test"]
        slack = float(spec.params.get("slack", 2.0))
        first = calib[0].data
        delta_target = float(first["delta_target"])
        flags = ["delta_floored"] if delta_target == 1.0 else []
        return {
            "kind": "connective",
            "pwcc": float(first["pwcc"]),
            "pwcc_std_error": float(first["pwcc_std_error"]),
            "delta_target": delta_target,
            "m": int(first["m"]),
            "c": slack * max(float(r.data["max_ratio"]) for r in calib),
            "slack": slack,
            "fraction_passing": sum(bool(r.data["passed"]) for r in tests) / len(tests),
            "test_graphs": len(tests),
            "calibration_graphs": len(calib),
            "flags": flags,
        }
    if kind == "ssm":
        gaps = [float(r.data["max_gap"]) for r in rows]
        spec = ExperimentSpec.from_config(spec_cfg)
        lam = float(spec.params.get("lam", spec.instance.fugacity))
        return {
            "kind": "ssm",
            "lam": lam,
            "root": int(spec.params.get("root", 0)),
            "distances": [int(r.data["s"]) for r in rows],
            "gaps": gaps,
            "strictly_decreasing": all(a > b for a, b in zip(gaps, gaps[1:])),
        }
    if kind == "sample_validate":
        spec = ExperimentSpec.from_config(spec_cfg)
        inst = spec.instance
        oracle = oracle_partition(
            inst,
            substream(spec.seed, "oracle"),
            samples_per_order=int(spec.params.get("oracle_samples", 4000)),
        )
        void_oracle = None
        if spec.params.get("void_box"):
            void_box = spec.params["void_box"]
            void_oracle = void_probability_oracle(
                inst,
                (void_box[0], void_box[1]),
                substream(spec.seed, "void-oracle"),
                samples_per_order=int(spec.params.get("oracle_samples", 4000)),
            )
        return _summarize_sample_validate(
            dict(spec_cfg),
            rows,
            oracle_terms=oracle.extra["order_terms"],
            oracle_term_ses=oracle.extra["order_term_ses"],
            oracle_value=oracle.value,
            void_oracle=void_oracle,
        )
    raise ValueError(f"summaries for kind {kind!r} require the original run")


def write_rows_jsonl(path, spec: ExperimentSpec, rows: Sequence[TrialRow]) -> None:
    """Header line (resolved spec) followed by one JSON object per row."""
    _check_unique(rows)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"spec": spec.to_config()}, sort_keys=True) + "\n")
        for row in sorted(rows, key=lambda r: r.replicate):
            fh.write(json.dumps(row.to_json_dict(), sort_keys=True) + "\n")


def read_rows_jsonl(path) -> tuple[dict, list[TrialRow]]:
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        rows = [TrialRow.from_json_dict(json.loads(line)) for line in fh if line.strip()]
    return header["spec"], rows


def write_summary_json(path, spec: ExperimentSpec, summary: Mapping) -> None:
    payload = {"spec": spec.to_config(), "master_seed": spec.seed, "summary": dict(summary)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
