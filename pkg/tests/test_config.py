"""Tests for experiment configuration loading and validation."""

import json
from pathlib import Path

import pytest

from iaas_signature_selection_tool.config import (
    ExperimentConfig,
    ScenarioConfig,
    load_experiment_config,
)
from iaas_signature_selection_tool.errors import ConfigError
from iaas_signature_selection_tool.trial import Scheme


def test_defaults() -> None:
    """Test the default experiment setup."""
    config = load_experiment_config(None)
    assert config.horizon_days == 360
    assert config.provider_count == 7
    assert (config.trial_start_day, config.trial_end_day) == (151, 180)
    assert config.schemes == (Scheme.FG, Scheme.RG, Scheme.MG, Scheme.EQ)
    assert config.confidence_threshold == 0.7
    assert config.effective_ranking_scheme is Scheme.FG


def test_from_mapping_nested() -> None:
    """Test nested settings and type coercion."""
    config = ExperimentConfig.from_mapping(
        {
            "seed": 4,
            "schemes": ["MG", "EQ"],
            "confidence_threshold": 0,
            "levels": {"low": 0.25, "high": 0.75},
            "scenario": {"attributes": ["cpu"], "public_count": 0},
        }
    )
    assert config.seed == 4
    assert config.schemes == (Scheme.MG, Scheme.EQ)
    assert config.confidence_threshold == 0.0
    assert config.levels.low == 0.25
    assert config.scenario.attributes == ("cpu",)
    assert config.effective_ranking_scheme is Scheme.MG


@pytest.mark.parametrize(
    ("data", "message"),
    [
        ({"horizon": 10}, "unknown setting"),
        ({"scenario": {"noise": 1}}, "config.scenario"),
        ({"seed": "1"}, "expected an integer"),
        ({"seed": -1}, "seed"),
        ({"wrap_signature": 1}, "true/false"),
        ({"schemes": ["XX"]}, "unknown scheme"),
        ({"schemes": []}, "scheme"),
        ({"trial_start_day": 340}, "outside"),
        ({"confidence_threshold": 2}, "confidence_threshold"),
        ({"levels": {"low": 0.8, "high": 0.2}}, "thresholds"),
        ({"provider_count": 1}, "public_count"),
        ({"scenario": {"private_seasonal_amplitude": 0.99}}, "positive"),
    ],
)
def test_from_mapping_errors(data: dict[str, object], message: str) -> None:
    """Test invalid settings are rejected with a pointed message."""
    with pytest.raises(ConfigError, match=message):
        ExperimentConfig.from_mapping(data)


def test_with_overrides_skips_none() -> None:
    """Test flag overrides win while unset flags keep the config value."""
    config = ExperimentConfig(seed=3, provider_count=5)
    updated = config.with_overrides(seed=9, provider_count=None)
    assert updated.seed == 9
    assert updated.provider_count == 5
    with pytest.raises(ConfigError):
        config.with_overrides(workers=0)


def test_to_dict_is_json_ready() -> None:
    """Test the config serializes to plain JSON types."""
    data = ExperimentConfig(scenario=ScenarioConfig(attributes=("a", "b"))).to_dict()
    assert data["schemes"] == ["FG", "RG", "MG", "EQ"]
    assert data["scenario"]["attributes"] == ["a", "b"]
    assert ExperimentConfig.from_mapping(json.loads(json.dumps(data))) == ExperimentConfig(
        scenario=ScenarioConfig(attributes=("a", "b"))
    )


def test_load_experiment_config_file(tmp_path: Path) -> None:
    """Test loading a file and rejecting invalid JSON."""
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"provider_count": 3, "scenario": {"public_count": 1}}))
    assert load_experiment_config(path).provider_count == 3

    path.write_text("{broken")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_experiment_config(path)

    path.write_bytes(b"{\"seed\": \xff}")
    with pytest.raises(ConfigError, match="UTF-8"):
        load_experiment_config(path)
