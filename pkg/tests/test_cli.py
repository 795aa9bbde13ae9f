import io
import json
import math
import shutil
import subprocess
import sys
from contextlib import redirect_stderr, redirect_stdout

import pytest

from gibbsgraph import GPPInstance, HardSphere, Region, approximate_partition, rng_from_seed
from gibbsgraph.cli import main

ZERO_CFG = {
    "region": {"sides": [2.0], "boundary": "open"},
    "potential": {"family": "zero"},
    "fugacity": 1.0,
}


def write_spec(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


def test_graph_zero_potential_is_edgeless_and_repeatable(tmp_path):
    spec = write_spec(tmp_path, "g.json", {"instance": ZERO_CFG, "n": 6, "seed": 3})
    code, stdout, _ = run_cli(["graph", "--spec", spec])
    assert code == 0
    payload = json.loads(stdout)
    assert payload["graph"]["edges"] == []
    assert len(payload["graph"]["points"]) == 6
    assert payload["seed"] == 3 and payload["seed_overridden"] is False
    assert payload["spec"]["seed"] == 3

    for out_dir in ("a", "b"):
        code, _, _ = run_cli(["graph", "--spec", spec, "--out", str(tmp_path / out_dir)])
        assert code == 0
    assert (tmp_path / "a" / "graph.json").read_bytes() == (tmp_path / "b" / "graph.json").read_bytes()
    assert json.loads((tmp_path / "a" / "graph.json").read_text()) == payload


def test_graph_seed_override(tmp_path):
    spec = write_spec(tmp_path, "g.json", {"instance": ZERO_CFG, "n": 5, "seed": 3})
    code, base_out, _ = run_cli(["graph", "--spec", spec])
    code2, over_out, _ = run_cli(["graph", "--spec", spec, "--seed", "99"])
    assert code == code2 == 0
    base, over = json.loads(base_out), json.loads(over_out)
    assert over["seed"] == 99 and over["seed_overridden"] is True
    assert over["spec"]["seed"] == 99
    assert over["graph"]["points"] != base["graph"]["points"]


def test_graph_config_errors(tmp_path):
    missing_n = write_spec(tmp_path, "g1.json", {"instance": ZERO_CFG})
    bad_n = write_spec(tmp_path, "g2.json", {"instance": ZERO_CFG, "n": 0})
    bad_family = write_spec(
        tmp_path, "g3.json", {"instance": {**ZERO_CFG, "potential": {"family": "wat"}}, "n": 3}
    )
    not_json = tmp_path / "g4.json"
    not_json.write_text("{nope", encoding="utf-8")
    for spec in (missing_n, bad_n, bad_family, str(not_json), str(tmp_path / "absent.json")):
        code, _, err = run_cli(["graph", "--spec", spec])
        assert code == 2
        assert "error" in err


def test_estimate_practical_mode_zero_potential(tmp_path):
    spec = write_spec(tmp_path, "e.json", {"instance": ZERO_CFG, "eps": 0.1, "n": 500, "seed": 1})
    code, stdout, _ = run_cli(["estimate", "--spec", spec])
    assert code == 0
    payload = json.loads(stdout)
    est = payload["estimate"]
    assert est["valid"] is True
    assert est["value"] == pytest.approx((1.0 + 2.0 / 500) ** 500, rel=1e-12)
    assert "practical_n" in est["flags"]
    assert est["extra"]["n"] == 500


def test_estimate_degree_failure_reported(tmp_path):
    inst = GPPInstance(Region([2.0]), HardSphere(0.225), 2.8)
    failing_seed = None
    for seed in range(20):
        est = approximate_partition(inst, 0.2, rng_from_seed(seed), mode=12)
        if not est.valid:
            failing_seed = seed
            break
    assert failing_seed is not None, "no max-degree failure in 20 seeds (rate should be ~70%)"
    spec = write_spec(
        tmp_path,
        "e.json",
        {"instance": inst.to_config(), "eps": 0.2, "n": 12, "seed": failing_seed},
    )
    code, stdout, _ = run_cli(["estimate", "--spec", spec])
    assert code == 0  # a reported degree failure is a valid outcome, not a crash
    est = json.loads(stdout)["estimate"]
    assert est["valid"] is False
    assert est["reason"] == "degree"


def test_estimate_oracle_path(tmp_path):
    spec = write_spec(
        tmp_path,
        "e.json",
        {"instance": ZERO_CFG, "estimator": "oracle", "seed": 5, "samples_per_order": 2000},
    )
    code, stdout, _ = run_cli(["estimate", "--spec", spec])
    assert code == 0
    payload = json.loads(stdout)
    assert "oracle" in payload["note"]
    assert payload["estimate"]["value"] == pytest.approx(math.exp(2.0), rel=0.01)
    assert "tail_bound" in payload["estimate"]["extra"]

    bad = write_spec(tmp_path, "bad.json", {"instance": ZERO_CFG, "estimator": "psychic"})
    assert run_cli(["estimate", "--spec", bad])[0] == 2


def test_estimate_zero_fugacity(tmp_path):
    cfg = {**ZERO_CFG, "fugacity": 0.0}
    spec = write_spec(tmp_path, "e.json", {"instance": cfg, "n": 40})
    code, stdout, _ = run_cli(["estimate", "--spec", spec])
    assert code == 0
    est = json.loads(stdout)["estimate"]
    assert est["value"] == 1.0 and "exact" in est["flags"]


def test_sample_writes_jsonl(tmp_path):
    spec = write_spec(tmp_path, "s.json", {"instance": ZERO_CFG, "n": 30, "draws": 5, "seed": 2})
    code, _, _ = run_cli(["sample", "--spec", spec, "--out", str(tmp_path / "out")])
    assert code == 0
    lines = (tmp_path / "out" / "samples.jsonl").read_text().strip().split("\n")
    assert len(lines) == 6
    header = json.loads(lines[0])
    assert header["seed"] == 2 and header["spec"]["draws"] == 5
    for t, line in enumerate(lines[1:]):
        row = json.loads(line)
        assert row["replicate"] == t
        assert row["count"] == len(row["points"])
        assert all(0.0 <= p[0] < 2.0 for p in row["points"])

    bad = write_spec(tmp_path, "s0.json", {"instance": ZERO_CFG, "n": 30, "draws": 0})
    assert run_cli(["sample", "--spec", bad])[0] == 2


def test_experiment_ssm_run_and_rerun(tmp_path):
    cfg = {
        "kind": "ssm",
        "instance": ZERO_CFG,
        "n": 8,
        "seed": 0,
        "params": {"graph": "path", "lam": 0.5, "root": 0, "distances": [1, 2, 3]},
    }
    spec = write_spec(tmp_path, "x.json", cfg)
    code, stdout, _ = run_cli(["experiment", "--spec", spec, "--out", str(tmp_path / "r1")])
    assert code == 0
    printed = json.loads(stdout)
    assert printed["summary"]["strictly_decreasing"] is True
    assert printed["summary"]["gaps"][0] == pytest.approx(0.5, rel=1e-12)

    code, _, _ = run_cli(["experiment", "--spec", spec, "--out", str(tmp_path / "r2")])
    assert code == 0
    # summaries are wall-clock free, so the files match byte for byte
    assert (tmp_path / "r1" / "summary.json").read_bytes() == (tmp_path / "r2" / "summary.json").read_bytes()
    from gibbsgraph import read_rows_jsonl

    spec1, rows1 = read_rows_jsonl(tmp_path / "r1" / "rows.jsonl")
    spec2, rows2 = read_rows_jsonl(tmp_path / "r2" / "rows.jsonl")
    assert spec1 == spec2
    assert rows1 == rows2  # wall_ms ignored by row equality


def test_experiment_config_errors(tmp_path):
    unknown = write_spec(tmp_path, "x1.json", {"kind": "astrology", "instance": ZERO_CFG, "n": 4})
    missing = write_spec(tmp_path, "x2.json", {"kind": "ssm", "n": 4})
    for spec in (unknown, missing):
        code, _, err = run_cli(["experiment", "--spec", spec])
        assert code == 2 and "error" in err


def test_experiment_lemma_suite_exit_codes(tmp_path, monkeypatch):
    cfg = {"kind": "lemma_suite", "instance": ZERO_CFG, "trials": 3, "params": {"n_max": 5}}
    spec = write_spec(tmp_path, "x.json", cfg)
    code, stdout, _ = run_cli(["experiment", "--spec", spec])
    assert code == 0
    assert json.loads(stdout)["summary"]["all_pass"] is True

    import gibbsgraph.cli as cli_mod

    monkeypatch.setattr(
        cli_mod, "run_experiment", lambda s: ([], {"kind": "lemma_suite", "all_pass": False})
    )
    code, stdout, _ = run_cli(["experiment", "--spec", spec])
    assert code == 1  # violations surface in the exit status


def test_toml_spec_equivalent_to_json(tmp_path):
    json_spec = write_spec(tmp_path, "g.json", {"instance": ZERO_CFG, "n": 6, "seed": 4})
    toml_path = tmp_path / "g.toml"
    toml_path.write_text(
        "\n".join(
            [
                "n = 6",
                "seed = 4",
                "[instance]",
                "fugacity = 1.0",
                "[instance.region]",
                "sides = [2.0]",
                'boundary = "open"',
                "[instance.potential]",
                'family = "zero"',
            ]
        ),
        encoding="utf-8",
    )
    code_j, out_j, _ = run_cli(["graph", "--spec", json_spec])
    code_t, out_t, _ = run_cli(["graph", "--spec", str(toml_path)])
    assert code_j == code_t == 0
    assert json.loads(out_j)["graph"] == json.loads(out_t)["graph"]


def test_thread_flag_validation(tmp_path):
    spec = write_spec(tmp_path, "g.json", {"instance": ZERO_CFG, "n": 3})
    assert run_cli(["graph", "--spec", spec, "--threads", "abc"])[0] == 2
    assert run_cli(["graph", "--spec", spec, "--threads", "0"])[0] == 2
    assert run_cli(["graph", "--spec", spec, "--threads", "1"])[0] == 0


def test_usage_errors():
    assert run_cli([])[0] == 2
    assert run_cli(["frobnicate"])[0] == 2


def test_console_entry_point(tmp_path):
    spec = write_spec(tmp_path, "g.json", {"instance": ZERO_CFG, "n": 4, "seed": 1})
    exe = shutil.which("gibbsgraph")
    cmd = [exe] if exe else [sys.executable, "-m", "gibbsgraph.cli"]
    proc = subprocess.run(cmd + ["graph", "--spec", spec], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert len(json.loads(proc.stdout)["graph"]["points"]) == 4
