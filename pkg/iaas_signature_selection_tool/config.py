"""Experiment configuration with JSON overlay and validation.

Defaults describe the standard experiment: a 360-day horizon, 7 providers, a
30-day trial starting on day 151 (June), four trial schemes and a 0.7
confidence threshold. Values are overridden by a JSON config file, which is in
turn overridden by CLI flags.
"""

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, get_args, get_origin, get_type_hints

from iaas_signature_selection_tool.errors import ConfigError
from iaas_signature_selection_tool.trial import LevelThresholds, Scheme


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of the synthetic world used when no files are supplied."""

    attributes: tuple[str, ...] = ("throughput", "response_time")
    capacity: float = 100.0
    distinct_demands: int = 60
    zipf_exponent: float = 1.2
    public_count: int = 2
    private_noise_std: float = 0.02
    public_noise_std: float = 0.05
    private_seasonal_amplitude: float = 0.2
    public_seasonal_amplitude: float = 0.35
    weekly_amplitude: float = 0.05
    step_change: float = 0.0
    request_amplitude: float = 0.25

    def __post_init__(self) -> None:
        if not self.attributes:
            raise ConfigError("At least one QoS attribute is required")
        if len(set(self.attributes)) != len(self.attributes):
            raise ConfigError(f"Attribute names must be unique: {self.attributes}")
        if self.capacity <= 0 or self.distinct_demands < 1 or self.public_count < 0:
            raise ConfigError("capacity, distinct_demands and public_count must be positive")
        if min(self.private_noise_std, self.public_noise_std) < 0:
            raise ConfigError("Noise levels must be non-negative")
        if self.zipf_exponent <= 0:
            raise ConfigError("zipf_exponent must be positive")
        amplitude = max(self.private_seasonal_amplitude, self.public_seasonal_amplitude)
        if amplitude + self.weekly_amplitude + abs(self.step_change) >= 1:
            raise ConfigError("Seasonal amplitudes must keep every factor positive")


@dataclass(frozen=True)
class ExperimentConfig:
    """All parameters of one experiment run."""

    horizon_days: int = 360
    provider_count: int = 7
    trial_length_days: int = 30
    trial_start_day: int = 151
    schemes: tuple[Scheme, ...] = (Scheme.FG, Scheme.RG, Scheme.MG, Scheme.EQ)
    confidence_threshold: float = 0.7
    seed: int = 0
    eq_vm_count: int = 3
    ranking_scheme: Scheme = Scheme.FG
    past_users_per_window: int = 3
    signature_window_days: int = 30
    reference_demand_fraction: float = 0.5
    samples_per_day: int = 1
    wrap_signature: bool = True
    level_adjusted_confidence: bool = True
    workers: int = 1
    levels: LevelThresholds = field(default_factory=LevelThresholds)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)

    def __post_init__(self) -> None:
        positive = {
            "horizon_days": self.horizon_days,
            "provider_count": self.provider_count,
            "trial_length_days": self.trial_length_days,
            "eq_vm_count": self.eq_vm_count,
            "past_users_per_window": self.past_users_per_window,
            "signature_window_days": self.signature_window_days,
            "samples_per_day": self.samples_per_day,
            "workers": self.workers,
        }
        for name, value in positive.items():
            if value < 1:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.trial_start_day < 1 or self.trial_end_day > self.horizon_days:
            raise ConfigError(
                f"Trial window [{self.trial_start_day}, {self.trial_end_day}] "
                f"is outside the {self.horizon_days}-day horizon"
            )
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.trial_length_days < 2:
            raise ConfigError("Trial confidence needs a trial of at least 2 days")
        if not self.schemes:
            raise ConfigError("At least one trial scheme is required")
        if not -1.0 <= self.confidence_threshold <= 1.0:
            raise ConfigError("confidence_threshold must lie in [-1, 1]")
        if self.reference_demand_fraction < 0:
            raise ConfigError("reference_demand_fraction must be non-negative")
        if self.scenario.public_count > self.provider_count:
            raise ConfigError("public_count cannot exceed provider_count")

    @property
    def trial_end_day(self) -> int:
        return self.trial_start_day + self.trial_length_days - 1

    @property
    def effective_ranking_scheme(self) -> Scheme:
        """The scheme rankings are computed on (first scheme if not configured)."""
        return self.ranking_scheme if self.ranking_scheme in self.schemes else self.schemes[0]

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "ExperimentConfig":
        """Build a validated config from a JSON-like mapping.

        Raises:
            ConfigError: On unknown keys, wrong types or violated invariants
        """
        return _build(cls, data, "config")

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Return a copy with the non-None overrides applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["schemes"] = [s.value for s in self.schemes]
        data["ranking_scheme"] = self.ranking_scheme.value
        data["scenario"]["attributes"] = list(self.scenario.attributes)
        return data


def _coerce(value: Any, hint: Any, where: str) -> Any:
    origin = get_origin(hint)
    if isinstance(hint, type) and issubclass(hint, Scheme):
        try:
            return Scheme(value)
        except ValueError as e:
            raise ConfigError(f"{where}: unknown scheme {value!r}") from e
    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        (item_hint, _) = get_args(hint)
        return tuple(_coerce(v, item_hint, where) for v in value)
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, int | float):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(hint, type) and hint in (LevelThresholds, ScenarioConfig):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected an object")
        return _build(hint, value, where)
    raise ConfigError(f"{where}: unsupported setting")


def _build[T](cls: type[T], data: dict[str, Any], where: str) -> T:
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    hints = get_type_hints(cls)
    known = {f.name for f in fields(cls)}  # type: ignore[arg-type]
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown setting(s) {', '.join(unknown)}")
    kwargs = {key: _coerce(value, hints[key], f"{where}.{key}") for key, value in data.items()}
    return cls(**kwargs)


def load_experiment_config(path: Path | None) -> ExperimentConfig:
    """Load an experiment config file, or the defaults when path is None.

    Raises:
        ConfigError: If the file is not valid JSON or fails validation
        OSError: If the file cannot be read
    """
    if path is None:
        return ExperimentConfig()
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    except UnicodeDecodeError as e:
        raise ConfigError(f"{path}: not valid UTF-8 ({e.reason} at byte {e.start})") from e
    return ExperimentConfig.from_mapping(data)
