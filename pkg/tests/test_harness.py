import json
from pathlib import Path

import numpy as np
import pytest

from perfopt import cli
from perfopt.environment import make_env
from perfopt.harness import (
    ConfigError,
    ExperimentConfig,
    analyze_dir,
    dump_oracle,
    run_experiment,
    run_single,
)
from perfopt.metrics import CSV_HEADER


def tiny_cfg(tmp_path, **over):
    base = dict(
        environment="ackley_exp_rastrigin",
        algorithms=["doop"],
        T=16,
        mode="full",
        seeds=[0],
        output_dir=str(tmp_path / "runs"),
    )
    base.update(over)
    return ExperimentConfig.from_dict(base)


class TestConfig:
    def test_json_round_trip(self, tmp_path):
        cfg = tiny_cfg(tmp_path, eps=3.5, seeds=[2, 7])
        again = ExperimentConfig.from_json(cfg.to_json())
        assert again == cfg

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(tiny_cfg(tmp_path).to_json())
        assert ExperimentConfig.load(path) == tiny_cfg(tmp_path)

    def test_defaults(self, tmp_path):
        cfg = tiny_cfg(tmp_path)
        assert (cfg.mode, cfg.m0, cfg.pad_to_budget) == ("full", 10, True)
        assert (cfg.candidates, cfg.salt, cfg.grid_per_axis) == (9, 0, 55)
        assert (cfg.L_z, cfg.eps, cfg.alpha) == (1.0, None, 1.0)

    @pytest.mark.parametrize(
        "over",
        [
            {"environment": "nope"},
            {"mode": "live"},
            {"algorithms": ["soop"]},  # sampled-only name in full mode
            {"mode": "sampled", "algorithms": ["doop"]},
            {"algorithms": []},
            {"T": 1},
            {"seeds": []},
            {"m0": 0},
            {"eps": -1.0},
            {"alpha": 0.0},
        ],
    )
    def test_rejects_inconsistent_fields(self, tmp_path, over):
        with pytest.raises(ConfigError):
            tiny_cfg(tmp_path, **over)

    def test_rejects_unknown_keys(self, tmp_path):
        data = tiny_cfg(tmp_path).to_dict()
        data["budget"] = 100
        with pytest.raises(ConfigError, match="budget"):
            ExperimentConfig.from_dict(data)

    def test_rejects_malformed_json(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json("{not json")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json("[1, 2]")


class TestRunExperiment:
    def test_outputs_and_padding(self, tmp_path):
        cfg = tiny_cfg(tmp_path, seeds=[0, 1])
        agg = run_experiment(cfg)
        out = Path(cfg.output_dir)
        assert (out / "config.json").exists()
        assert (out / "aggregate.json").exists()
        entry = agg["algorithms"]["doop"]
        # padding tops every run up to exactly T deployments
        assert entry["deployments"] == [16, 16]
        assert len(entry["mean_cumulative_regret"]) == 16

        lines = (out / "doop_seed0.csv").read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + 16
        last = lines[-1].split(",")
        assert (last[6], last[7], last[8]) == ("-1", "-1", "0")

        summary = json.loads((out / "doop_seed0.json").read_text())
        assert summary["meta"]["pad_deployments"] > 0
        assert summary["meta"]["deployments_algorithm"] == 9
        assert summary["meta"]["seed"] == 0
        assert summary["deployments"] == 16

    def test_padding_repeats_the_returned_decision(self, tmp_path):
        cfg = tiny_cfg(tmp_path)
        theta, trace = run_single(cfg, "doop", 0)
        n_algo = trace.meta["deployments_algorithm"]
        for t in range(n_algo, trace.deployments):
            assert np.array_equal(trace.thetas[t], np.asarray(theta))
            assert trace.depth[t] == -1 and trace.cell_index[t] == -1

    def test_padding_can_be_disabled(self, tmp_path):
        cfg = tiny_cfg(tmp_path, pad_to_budget=False)
        agg = run_experiment(cfg)
        assert agg["algorithms"]["doop"]["deployments"] == [9]
        summary = json.loads(
            (Path(cfg.output_dir) / "doop_seed0.json").read_text()
        )
        assert "pad_deployments" not in summary["meta"]

    def test_sampled_padding_draws_m0(self, tmp_path):
        cfg = tiny_cfg(
            tmp_path, mode="sampled", algorithms=["stroquool"], T=1000, m0=3
        )
        _, trace = run_single(cfg, "stroquool", 0)
        assert trace.deployments == 1000
        assert trace.samples[-1] == 3

    def test_parallel_workers_match_serial(self, tmp_path):
        cfg = tiny_cfg(tmp_path, seeds=[0, 1])
        serial = run_experiment(cfg, workers=1)
        cfg2 = tiny_cfg(tmp_path, seeds=[0, 1], output_dir=str(tmp_path / "par"))
        parallel = run_experiment(cfg2, workers=2)
        for agg in (serial, parallel):
            for entry in agg["algorithms"].values():
                entry.pop("mean_wall_clock_seconds")  # timing is not reproducible
        assert serial["algorithms"] == parallel["algorithms"]


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    cfg = ExperimentConfig(
        environment="ackley_exp_rastrigin",
        algorithms=["doop"],
        T=1000,
        mode="full",
        seeds=[0],
        output_dir=str(out),
    )
    run_experiment(cfg)
    return out


class TestAnalyze:
    def test_report_structure(self, run_dir):
        report = analyze_dir(run_dir)
        assert report["runs"] == 1
        entry = report["environments"]["ackley_exp_rastrigin"]
        assert entry["eps_grid_lipschitz_of_rate"] > 0
        assert entry["d_estimate"] >= 0.0
        (row,) = entry["budgets"]
        assert row["T"] == 1000 and row["mode"] == "full"
        assert row["h_max"] == 33
        assert row["bound"] > 0 and "bound_case" in row

    def test_missing_dir_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            analyze_dir(tmp_path / "empty")

    def test_cli_analyze_writes_report(self, run_dir, tmp_path):
        out = tmp_path / "report.json"
        assert cli.main(["analyze", str(run_dir), "--out", str(out)]) == 0
        assert json.loads(out.read_text())["runs"] == 1


class TestCli:
    def test_run_succeeds_on_a_valid_config(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(tiny_cfg(tmp_path).to_json())
        assert cli.main(["run", str(path)]) == 0
        assert (tmp_path / "runs" / "aggregate.json").exists()

    def test_run_honors_the_output_dir_override(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(tiny_cfg(tmp_path).to_json())
        override = tmp_path / "elsewhere"
        assert cli.main(["run", str(path), "--output-dir", str(override)]) == 0
        assert (override / "aggregate.json").exists()

    def test_run_exit_2_on_missing_or_invalid_config(self, tmp_path):
        assert cli.main(["run", str(tmp_path / "absent.json")]) == 2
        bad = tmp_path / "bad.json"
        bad.write_text('{"environment": "ackley_exp_rastrigin"}')
        assert cli.main(["run", str(bad)]) == 2

    def test_run_exit_3_when_the_budget_is_too_small(self, tmp_path):
        cfg = tiny_cfg(tmp_path, mode="sampled", algorithms=["soop"], T=128)
        path = tmp_path / "cfg.json"
        path.write_text(cfg.to_json())
        assert cli.main(["run", str(path)]) == 3

    def test_analyze_exit_2_on_an_empty_dir(self, tmp_path):
        assert cli.main(["analyze", str(tmp_path)]) == 2

    def test_oracle_dump_parses_back(self, tmp_path):
        out = tmp_path / "surface.csv"
        assert cli.main(
            ["oracle", "rastrigin_exp_ackley", "--out", str(out), "--grid", "5"]
        ) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "theta_0,theta_1,pr"
        assert len(lines) == 1 + 25
        env = make_env("rastrigin_exp_ackley")
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        want = env.true_pr_batch(rows[:, :2])
        assert np.array_equal(rows[:, 2], want)

    def test_bench_smoke(self, capsys):
        assert cli.main(
            ["bench", "--points", "2000", "--deployed", "8", "--grid", "64",
             "--repeats", "1"]
        ) == 0
        head = capsys.readouterr().out.splitlines()[0]
        assert "numpy" in head and "numba" in head
