"""Reduction of repulsive point processes to hard-core models on random graphs.

The pipeline: scatter n uniform points in a box, connect pairs with the
coupling probability 1 - e^{-phi}, and study the hard-core model at
activity lam * volume / n on the resulting graph. Partition functions,
samplers, oracles, and the validation experiments all live here; the
``gibbsgraph`` console script exposes them. See README.md for usage.
"""

from .geometry import Point, Region, sample_uniform, sample_uniform_array
from .potential import (
    GaussianOverlap,
    GeneralizedExponential,
    HardCoreYukawa,
    HardSphere,
    PairPotential,
    ZeroPotential,
    ball_volume,
    edge_probability,
    edge_probability_radial,
    phi,
    potential_from_config,
    potential_to_config,
    temperedness_constant,
)
from .graphgen import (
    LabeledGraph,
    condensed_distances,
    graph_from_points,
    max_degree,
    sample_graph,
    sample_points,
)
from .hardcore import (
    EXACT_CONDITIONAL_LIMIT,
    EXACT_COUNT_LIMIT,
    EXACT_SWEEP_LIMIT,
    Estimate,
    SpinConfiguration,
    anneal_schedule,
    critical_fugacity,
    estimate_partition,
    glauber_sample,
    glauber_steps_default,
    occupation_ratio_exact,
    partition_exact,
    partition_exact_interval,
    sample_spin_exact,
)
from .gpp import (
    GPPInstance,
    PointConfiguration,
    approximate_partition,
    choose_n,
    hamiltonian,
    oracle_partition,
    sample_configuration,
    void_probability_oracle,
)
from .weitz import (
    ConnectiveCheck,
    NeighborhoodOrdering,
    SSMDecayRow,
    WeitzLayerProfile,
    connective_bound_check,
    decay_table_to_csv,
    distance_ordering,
    profiles_to_csv,
    pwcc_estimate,
    pwcc_k,
    saw_layer_counts,
    ssm_decay_table,
    weitz_layer_counts,
)
from .experiments import (
    KINDS,
    ExperimentSpec,
    TrialRow,
    read_rows_jsonl,
    run_experiment,
    summarize,
    write_rows_jsonl,
    write_summary_json,
)
from .seeding import rng_from_seed, substream

__version__ = "0.1.0"

__all__ = [
    "Point",
    "Region",
    "sample_uniform",
    "sample_uniform_array",
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
    "LabeledGraph",
    "sample_points",
    "condensed_distances",
    "graph_from_points",
    "sample_graph",
    "max_degree",
    "Estimate",
    "SpinConfiguration",
    "EXACT_COUNT_LIMIT",
    "EXACT_SWEEP_LIMIT",
    "EXACT_CONDITIONAL_LIMIT",
    "partition_exact",
    "partition_exact_interval",
    "critical_fugacity",
    "glauber_steps_default",
    "glauber_sample",
    "sample_spin_exact",
    "estimate_partition",
    "anneal_schedule",
    "occupation_ratio_exact",
    "GPPInstance",
    "PointConfiguration",
    "hamiltonian",
    "oracle_partition",
    "choose_n",
    "approximate_partition",
    "sample_configuration",
    "void_probability_oracle",
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
    "KINDS",
    "ExperimentSpec",
    "TrialRow",
    "run_experiment",
    "summarize",
    "write_rows_jsonl",
    "read_rows_jsonl",
    "write_summary_json",
    "rng_from_seed",
    "substream",
    "__version__",
]
