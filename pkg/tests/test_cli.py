"""Command-line behavior: exit codes, file outputs, shipped configs."""

from pathlib import Path

import numpy as np
import pytest

from npace.cli import main
from npace.harness import load_config, save_config
from npace.scenarios import SCENARIO_NAMES, build_scenario, default_config


class TestShippedConfigs:
    @pytest.mark.parametrize("name", SCENARIO_NAMES)
    def test_checked_in_config_parses_and_builds(self, name):
        config = load_config(Path("configs") / f"{name}.ini")
        assert config.name == name
        build_scenario(config)

    @pytest.mark.parametrize("name", SCENARIO_NAMES)
    def test_checked_in_config_matches_defaults(self, name):
        shipped = load_config(Path("configs") / f"{name}.ini")
        nominal = default_config(name)
        np.testing.assert_array_equal(shipped.initial_state, nominal.initial_state)
        assert shipped.true_intents == nominal.true_intents
        assert shipped.initial_estimates == nominal.initial_estimates
        assert shipped.prior_variance == nominal.prior_variance
        assert shipped.assumed_action_noise == nominal.assumed_action_noise
        assert shipped.constants == nominal.constants
        assert (shipped.dt, shipped.horizon_seconds) == (nominal.dt, nominal.horizon_seconds)


class TestSimulate:
    def test_smoke_run_writes_csv(self, tmp_path, capsys):
        code = main(
            [
                "simulate", "intersection", "--method", "complete",
                "--seed", "0", "--out", str(tmp_path),
            ]
        )
        assert code == 0
        assert (tmp_path / "complete.csv").exists()
        out = capsys.readouterr().out
        assert "min separation" in out and "collision" in out

    def test_unknown_method_exits_2(self, capsys):
        assert main(["simulate", "intersection", "--method", "teleport"]) == 2
        assert "unknown method" in capsys.readouterr().err

    def test_signaling_requires_weight(self, capsys):
        assert main(["simulate", "intersection", "--method", "npace-comm"]) == 2
        assert "--eta" in capsys.readouterr().err

    def test_weight_rejected_elsewhere(self, capsys):
        code = main(
            ["simulate", "intersection", "--method", "complete", "--eta", "1.0"]
        )
        assert code == 2

    def test_config_scenario_mismatch_exits_2(self, tmp_path, capsys):
        path = tmp_path / "other.ini"
        save_config(default_config("intersection"), path)
        code = main(
            [
                "simulate", "lunar_lander", "--method", "complete",
                "--config", str(path),
            ]
        )
        assert code == 2
        assert "intersection" in capsys.readouterr().err


class TestMonteCarlo:
    def test_sweep_writes_logs_and_summary(self, tmp_path, capsys):
        code = main(
            [
                "montecarlo", "intersection", "--runs", "2",
                "--methods", "complete", "--seed", "7", "--out", str(tmp_path),
            ]
        )
        assert code == 0
        assert (tmp_path / "summary.ini").exists()
        csvs = sorted(p.name for p in tmp_path.glob("*.csv"))
        assert csvs == ["complete_run0000.csv", "complete_run0001.csv"]
        assert "complete" in capsys.readouterr().out


class TestBenchmark:
    def test_run_floor_enforced(self, capsys):
        code = main(
            ["benchmark", "intersection", "--method", "complete", "--runs", "5"]
        )
        assert code == 2
        assert "30" in capsys.readouterr().err


class TestCheckBattery:
    def test_all_checks_pass(self, capsys):
        assert main(["check"]) == 0
        out = capsys.readouterr().out
        lines = [line for line in out.splitlines() if line]
        assert len(lines) == 5
        assert all(line.startswith("PASS") for line in lines)
