"""Tests for the pydantic configuration models."""
import sys
import os

import pytest

# Add src to path so we can import the module
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from pydantic import ValidationError

from ugv_uav_planner.config import (
    DEFAULT_STRATEGIES,
    BatchConfig,
    RunConfig,
    SpeedConfig,
    StrategyConfig,
    parse_seeds,
)


class TestParseSeeds:
    @pytest.mark.parametrize(
        "text, expected",
        [
            ("0..4", [0, 1, 2, 3, 4]),
            ("3-5", [3, 4, 5]),
            ("0,1,5", [0, 1, 5]),
            ("7", [7]),
            ("0..1, 9", [0, 1, 9]),
            ("", []),
            ("  ", []),
        ],
    )
    def test_forms(self, text, expected):
        assert parse_seeds(text) == expected

    def test_range_of_fifty(self):
        assert len(parse_seeds("0..49")) == 50

    def test_garbage(self):
        with pytest.raises(ValueError):
            parse_seeds("a..b")


class TestSpeedConfig:
    def test_defaults(self):
        speeds = SpeedConfig()
        assert (speeds.v_g, speeds.v_a) == (20.0, 40.0)
        assert speeds.ratio == "20:40"

    def test_parse(self):
        assert SpeedConfig.parse("20:30") == SpeedConfig(v_g=20, v_a=30)

    @pytest.mark.parametrize("text", ["20", "20:30:40", "20:0", "-1:20"])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            SpeedConfig.parse(text)


class TestStrategyConfig:
    """Names, parameters and display labels."""

    def test_plain_name(self):
        config = StrategyConfig.parse("kemeny")
        assert config.name == "kemeny"
        assert config.uav_count == 1
        assert config.label == "Kemeny"

    def test_multi_uav_parameter(self):
        config = StrategyConfig.parse("multi-bidirectional:7")
        assert config.uavs == 7
        assert config.uav_count == 7
        assert config.label == "7-UAVs"

    def test_k_and_m_parameters(self):
        assert StrategyConfig.parse("k-shortest:4").k == 4
        assert StrategyConfig.parse("mpsp:50").m == 50

    def test_defaults_pass_through(self):
        config = StrategyConfig.parse("mpsp", m=10, mc_runs=200)
        assert (config.m, config.mc_runs) == (10, 200)

    def test_ugv_only_has_no_uavs(self):
        assert StrategyConfig.parse("ugv-only").uav_count == 0
        assert StrategyConfig.parse("perfect").uav_count == 0

    def test_k_shortest_needs_two_paths(self):
        with pytest.raises(ValidationError):
            StrategyConfig(name="k-shortest", k=1)

    def test_unknown_name(self):
        with pytest.raises(ValidationError):
            StrategyConfig.parse("teleport")

    def test_parameter_on_plain_strategy(self):
        with pytest.raises(ValueError):
            StrategyConfig.parse("kemeny:3")

    def test_zero_uavs(self):
        with pytest.raises(ValidationError):
            StrategyConfig.parse("multi-bidirectional:0")

    def test_default_lineup_parses(self):
        labels = [StrategyConfig.parse(text).label for text in DEFAULT_STRATEGIES]
        assert labels == [
            "UGV-only",
            "Kemeny",
            "k-shortest paths",
            "MPSP",
            "Bidirectional",
            "3-UAVs",
            "5-UAVs",
            "7-UAVs",
        ]


class TestRunConfig:
    def test_defaults_to_seed_zero(self, tmp_path):
        config = RunConfig(graph=tmp_path / "g.json", strategy=StrategyConfig(name="bidirectional"))
        assert config.seed == 0
        assert config.speeds == SpeedConfig()

    def test_instance_and_seed_conflict(self, tmp_path):
        with pytest.raises(ValidationError):
            RunConfig(
                graph=tmp_path / "g.json",
                instance=tmp_path / "i.json",
                seed=3,
                strategy=StrategyConfig(name="bidirectional"),
            )

    def test_negative_seed(self, tmp_path):
        with pytest.raises(ValidationError):
            RunConfig(graph=tmp_path / "g.json", seed=-1, strategy=StrategyConfig(name="bidirectional"))


class TestBatchConfig:
    def _config(self, tmp_path, **overrides):
        values = {
            "graphs": [tmp_path / "g.json"],
            "seeds": [0, 1],
            "strategies": [StrategyConfig(name="ugv-only")],
            "ratios": [SpeedConfig()],
        }
        values.update(overrides)
        return BatchConfig(**values)

    def test_valid(self, tmp_path):
        config = self._config(tmp_path)
        assert config.jobs == 1
        assert config.format == "csv"

    def test_needs_a_graph(self, tmp_path):
        with pytest.raises(ValidationError):
            self._config(tmp_path, graphs=[])

    def test_instance_dir_and_seeds_conflict(self, tmp_path):
        with pytest.raises(ValidationError):
            self._config(tmp_path, instance_dir=tmp_path)

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValidationError):
            self._config(tmp_path, format="xlsx")

    def test_zero_jobs(self, tmp_path):
        with pytest.raises(ValidationError):
            self._config(tmp_path, jobs=0)
