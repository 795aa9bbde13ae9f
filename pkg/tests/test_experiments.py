import json
import math

import numpy as np
import pytest

from gibbsgraph import (
    ExperimentSpec,
    GPPInstance,
    HardSphere,
    Region,
    TrialRow,
    ZeroPotential,
    partition_exact,
    read_rows_jsonl,
    run_experiment,
    sample_graph,
    substream,
    summarize,
    write_rows_jsonl,
    write_summary_json,
)
from gibbsgraph.experiments import (
    chebyshev_failure_bound,
    efron_stein_constant,
    run_concentration,
)

ZERO_INSTANCE = GPPInstance(Region([2.0]), ZeroPotential(), 0.75)
ROD_INSTANCE = GPPInstance(Region([3.0]), HardSphere(0.05), 2.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(kind="nope", instance=ZERO_INSTANCE)
    with pytest.raises(ValueError):
        ExperimentSpec(kind="concentration", instance=ZERO_INSTANCE)  # needs n
    with pytest.raises(ValueError):
        ExperimentSpec(kind="lemma_suite", instance=ZERO_INSTANCE, trials=0)
    with pytest.raises(ValueError):
        ExperimentSpec(kind="lemma_suite", instance=ZERO_INSTANCE, eps=0.0)
    with pytest.raises(ValueError):
        ExperimentSpec(kind="ssm", instance=ZERO_INSTANCE, n=8, seed=-1)


def test_spec_config_round_trip():
    spec = ExperimentSpec(
        kind="concentration",
        instance=ROD_INSTANCE,
        n=24,
        trials=3,
        eps=0.2,
        seed=7,
        params={"estimator_eps": 0.05},
    )
    cfg = spec.to_config()
    assert ExperimentSpec.from_config(cfg) == spec
    assert json.loads(json.dumps(cfg)) == cfg  # JSON-safe
    with pytest.raises(ValueError):
        ExperimentSpec.from_config({"kind": "ssm"})
    with pytest.raises(ValueError):
        ExperimentSpec.from_config({**cfg, "bogus": 1})


def test_trial_row_equality_ignores_wall_time():
    a = TrialRow(replicate=0, data={"z": 1.0}, wall_ms=3.5)
    b = TrialRow(replicate=0, data={"z": 1.0}, wall_ms=99.0)
    assert a == b
    assert TrialRow.from_json_dict(a.to_json_dict()) == a


def test_rerun_reproducibility():
    spec = ExperimentSpec(kind="concentration", instance=ROD_INSTANCE, n=24, trials=6, eps=0.2, seed=42)
    rows1, summary1 = run_experiment(spec)
    rows2, summary2 = run_experiment(spec)
    assert rows1 == rows2  # wall times excluded from comparison
    assert summary1 == summary2
    other = ExperimentSpec(kind="concentration", instance=ROD_INSTANCE, n=24, trials=6, eps=0.2, seed=43)
    rows3, _ = run_experiment(other)
    assert rows1 != rows3


def test_runner_rejects_wrong_kind():
    spec = ExperimentSpec(kind="ssm", instance=ZERO_INSTANCE, n=8)
    with pytest.raises(ValueError):
        run_concentration(spec)


def test_concentration_zero_potential_is_deterministic():
    spec = ExperimentSpec(kind="concentration", instance=ZERO_INSTANCE, n=10, trials=8, eps=0.1, seed=1)
    rows, summary = run_experiment(spec)
    lam_n = ZERO_INSTANCE.effective_activity / 10
    expected = (1.0 + lam_n) ** 10
    for row in rows:
        assert row.data["method"] == "exact"
        assert row.data["max_degree"] == 0
        assert row.data["z"] == pytest.approx(expected, rel=1e-12)
    assert summary["variance"] == 0.0
    assert summary["empirical_failure_rate"] == 0.0
    assert summary["flags"] == []


def test_concentration_interval_route_matches_brute_force():
    n, seed = 24, 42
    spec = ExperimentSpec(kind="concentration", instance=ROD_INSTANCE, n=n, trials=4, eps=0.2, seed=seed)
    rows, summary = run_experiment(spec)
    lam_n = ROD_INSTANCE.effective_activity / n
    for t, row in enumerate(rows):
        assert row.data["method"] == "interval"
        graph = sample_graph(ROD_INSTANCE.region, ROD_INSTANCE.potential, n, substream(seed, t))
        assert row.data["z"] == pytest.approx(partition_exact(graph, lam_n), rel=1e-9)
    assert summary["trials_used"] == 4
    assert summary["lambda_n"] == pytest.approx(lam_n)


def test_concentration_bound_void_flag():
    inst = GPPInstance(Region([2.0]), ZeroPotential(), 4.0)  # lam nu = 8
    spec = ExperimentSpec(kind="concentration", instance=inst, n=4, trials=3, eps=0.5, seed=0)
    _, summary = run_experiment(spec)
    assert summary["flags"] == ["bound_void"]
    assert summary["chebyshev_bound"] == math.inf


def test_variance_bound_formulas():
    assert efron_stein_constant(400, 0.01) == pytest.approx(0.040798, abs=1e-9)
    assert chebyshev_failure_bound(400, 0.01, 0.2) == pytest.approx(0.5206785, abs=1e-4)
    assert chebyshev_failure_bound(4, 2.0, 0.5) == math.inf
    # small activity: bound shrinks with eps^-2 scaling
    assert chebyshev_failure_bound(100, 0.01, 0.2) == pytest.approx(
        4.0 * chebyshev_failure_bound(100, 0.01, 0.4), rel=1e-12
    )


def test_lemma_suite_all_pass():
    spec = ExperimentSpec(
        kind="lemma_suite",
        instance=ZERO_INSTANCE,
        trials=25,
        seed=5,
        params={"n_max": 8, "lambda_grid": (0.1, 0.5, 1.0), "beta_grid": (0.0, 0.5, 1.0)},
    )
    rows, summary = run_experiment(spec)
    assert summary["graphs"] == 25
    assert summary["all_pass"]
    for name, tallies in summary["per_lemma"].items():
        assert tallies["violations"] == 0
        assert tallies["checks"] > 0
    assert all(set(r.data["checks"]) == {"remove_edge", "add_vertex", "monotonicity"} for r in rows)


def test_sample_validate_zero_potential_count_and_void_law():
    inst = ZERO_INSTANCE  # activity 1.5 over volume 2
    spec = ExperimentSpec(
        kind="sample_validate",
        instance=inst,
        n=100,
        trials=3000,
        eps=0.1,
        seed=11,
        params={"void_box": (0.5, 1.0)},
    )
    rows, summary = run_experiment(spec)
    assert len(rows) == 3000
    assert summary["tv_counts"] <= 0.05
    assert not summary["inconclusive"]
    assert summary["poisson_domination_ok"]
    assert summary["degree_failure_rate"] == 0.0
    assert summary["mean_count"] == pytest.approx(1.5, abs=0.12)
    # void law: empty-box frequency against the series oracle, a few sigma
    assert summary["void_oracle"] == pytest.approx(math.exp(-0.75 * 0.5), rel=0.02)
    assert summary["void_gap_sigmas"] <= 4.0


def test_sample_validate_fast_and_generic_paths_agree():
    inst = GPPInstance(Region([4.0]), HardSphere(0.1), 1.0)  # activity 4
    draws = 2000
    base = dict(kind="sample_validate", instance=inst, n=150, trials=draws, eps=0.1, seed=3)
    _, fast = run_experiment(ExperimentSpec(**base, params={"fast_path": True}))
    _, slow = run_experiment(ExperimentSpec(**base, params={"fast_path": False}))
    for summary in (fast, slow):
        assert summary["tv_counts"] <= 0.05
        assert summary["poisson_domination_ok"]
        assert summary["degree_failure_rate"] == 0.0
    se = math.sqrt(4.0 / draws)  # count spread is at most Poisson-like
    assert abs(fast["mean_count"] - slow["mean_count"]) <= 4.0 * math.sqrt(2.0) * se


def test_run_approximate_z_tracks_oracle():
    inst = GPPInstance(Region([2.0]), ZeroPotential(), 1.0)  # activity 2, Xi = e^2
    spec = ExperimentSpec(kind="approximate_z", instance=inst, n=500, trials=6, eps=0.1, seed=2)
    rows, summary = run_experiment(spec)
    assert summary["degree_failures"] == 0
    assert summary["success_rate"] == 1.0
    assert summary["oracle_value"] == pytest.approx(math.exp(2.0), rel=0.01)
    expected = (1.0 + 2.0 / 500) ** 500
    for row in rows:
        assert row.data["valid"]
        assert row.data["value"] == pytest.approx(expected, rel=1e-12)


def test_run_connective_edgeless_floors_target():
    inst = GPPInstance(Region([1.0]), ZeroPotential(), 1.0)
    spec = ExperimentSpec(
        kind="connective",
        instance=inst,
        n=30,
        trials=5,
        seed=4,
        params={"calibration_trials": 3, "m": 14, "a": 4.0},
    )
    rows, summary = run_experiment(spec)
    assert summary["flags"] == ["delta_floored"]
    assert summary["delta_target"] == 1.0
    assert summary["pwcc"] == 0.0
    assert summary["fraction_passing"] == 1.0
    tests = [r for r in rows if r.data["role"] == "test"]
    assert len(tests) == 5 and all(r.data["max_total"] == 1 for r in tests)


def test_run_ssm_path_graph():
    spec = ExperimentSpec(
        kind="ssm",
        instance=ZERO_INSTANCE,
        n=8,
        seed=0,
        params={"graph": "path", "lam": 0.5, "root": 0, "distances": [1, 2, 3]},
    )
    rows, summary = run_experiment(spec)
    assert summary["gaps"][0] == pytest.approx(0.5, rel=1e-12)
    assert summary["gaps"][1] == pytest.approx(1.0 / 6.0, rel=1e-12)
    assert summary["gaps"][2] == pytest.approx(1.0 / 24.0, rel=1e-12)
    assert summary["strictly_decreasing"]
    assert summarize(spec.to_config(), rows) == summary


def test_rows_jsonl_round_trip_and_summary_recovery(tmp_path):
    spec = ExperimentSpec(kind="concentration", instance=ROD_INSTANCE, n=24, trials=5, eps=0.2, seed=9)
    rows, summary = run_experiment(spec)
    path = tmp_path / "rows.jsonl"
    write_rows_jsonl(path, spec, rows)
    header, back = read_rows_jsonl(path)
    assert header == spec.to_config()
    assert back == rows
    assert summarize(header, back) == summary

    out = tmp_path / "summary.json"
    write_summary_json(out, spec, summary)
    payload = json.loads(out.read_text())
    assert payload["spec"] == spec.to_config()
    assert payload["master_seed"] == 9
    assert payload["summary"] == summary


def test_summary_recovery_sample_validate(tmp_path):
    spec = ExperimentSpec(
        kind="sample_validate",
        instance=ZERO_INSTANCE,
        n=40,
        trials=400,
        eps=0.1,
        seed=6,
        params={"void_box": (0.0, 0.4)},
    )
    rows, summary = run_experiment(spec)
    path = tmp_path / "rows.jsonl"
    write_rows_jsonl(path, spec, rows)
    header, back = read_rows_jsonl(path)
    assert summarize(header, back) == summary  # oracle re-derived from seeds


def test_duplicate_replicates_rejected(tmp_path):
    spec = ExperimentSpec(kind="ssm", instance=ZERO_INSTANCE, n=6, params={"distances": [1]})
    rows = [TrialRow(0, {"s": 1, "max_gap": 0.1, "pairs": 1})] * 2
    with pytest.raises(ValueError):
        write_rows_jsonl(tmp_path / "dup.jsonl", spec, rows)


def test_fast_path_rows_match_rerun_exactly():
    inst = GPPInstance(Region([4.0]), HardSphere(0.1), 1.0)
    spec = ExperimentSpec(kind="sample_validate", instance=inst, n=60, trials=300, eps=0.1, seed=8)
    rows1, s1 = run_experiment(spec)
    rows2, s2 = run_experiment(spec)
    assert rows1 == rows2
    assert s1 == s2
    counts = np.asarray([r.data["count"] for r in rows1])
    assert counts.min() >= 0 and counts.max() <= 60
