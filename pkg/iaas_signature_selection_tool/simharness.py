"""Synthetic providers, trial simulation and the end-to-end experiment pipeline.

A provider's ground truth is multiplicative: the base performance of the
workload level at each timestamp, times a seasonal factor, times (1 + noise).
Every random draw comes from a generator keyed by integers (seed, provider,
scheme, stream), so serial and parallel runs produce identical reports.
"""

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import numpy.typing as npt

from iaas_signature_selection_tool.confidence import (
    ConfidenceReport,
    TrialExperience,
    assess_trial,
)
from iaas_signature_selection_tool.config import ExperimentConfig, ScenarioConfig
from iaas_signature_selection_tool.core import (
    FloatArray,
    QoSMatrix,
    TimeSeries,
    WorkloadSeries,
    nrmse,
)
from iaas_signature_selection_tool.discovery import (
    PerformancePrediction,
    lpd_discover,
    spd_discover,
)
from iaas_signature_selection_tool.errors import (
    ConfigError,
    EmptyPlan,
    HorizonMismatch,
    SelectionError,
    WindowMismatch,
)
from iaas_signature_selection_tool.logging_config import get_logger
from iaas_signature_selection_tool.ranking import (
    ConsumerRequest,
    RankingMethod,
    RankingReport,
    expected_ranking,
    kendall_tau,
    rank_providers,
    short_term_ranking,
)
from iaas_signature_selection_tool.signature import (
    IaaSSignature,
    TrialObservation,
    generate_signature,
)
from iaas_signature_selection_tool.trial import (
    DEFAULT_THRESHOLDS,
    Level,
    LevelThresholds,
    Scheme,
    TrialPlan,
    plan_trial,
)

logger = get_logger(__name__)

DAYS_PER_YEAR = 360
DAYS_PER_WEEK = 7

# generator stream tags
_TRUTH = 0
_TRIAL = 1
_HISTORY = 2


@dataclass(frozen=True, eq=False)
class ProviderProfile:
    """Ground-truth model of one provider."""

    provider_id: str
    base_perf: dict[Level, dict[str, float]]
    seasonal: QoSMatrix
    noise_std: float = 0.0
    rng_seed: int = 0
    public: bool = False

    def __post_init__(self) -> None:
        if self.noise_std < 0:
            raise ConfigError(f"{self.provider_id}: noise_std must be non-negative")
        if self.rng_seed < 0:
            raise ConfigError(f"{self.provider_id}: rng_seed must be non-negative")
        for name in self.seasonal:
            if np.any(self.seasonal[name].values <= 0):
                raise ConfigError(f"{self.provider_id}: seasonal factors must be positive")
        for level in Level:
            perf = self.base_perf.get(level)
            if perf is None or set(perf) != set(self.seasonal.names):
                raise ConfigError(
                    f"{self.provider_id}: base performance for {level} must cover "
                    f"attributes {list(self.seasonal.names)}"
                )
            if any(v <= 0 for v in perf.values()):
                raise ConfigError(f"{self.provider_id}: base performance must be positive")

    @property
    def attributes(self) -> tuple[str, ...]:
        return self.seasonal.names


def _level_index(
    demands: FloatArray, capacity: float, thresholds: LevelThresholds
) -> npt.NDArray[np.int64]:
    ratio = demands / capacity
    index: npt.NDArray[np.int64] = np.where(
        ratio < thresholds.low, 0, np.where(ratio < thresholds.high, 1, 2)
    ).astype(np.int64)
    return index


def _performance(
    profile: ProviderProfile,
    demands: FloatArray,
    timestamps: npt.NDArray[np.int64],
    capacity: float,
    thresholds: LevelThresholds,
    rng: np.random.Generator,
) -> dict[str, FloatArray]:
    offsets = timestamps - profile.seasonal.start_index
    if offsets.size and (offsets.min() < 0 or offsets.max() >= profile.seasonal.length):
        raise HorizonMismatch(
            f"{profile.provider_id}: seasonal profile covers {profile.seasonal.length} "
            f"timestamps, timestamps {int(timestamps.min())}-{int(timestamps.max())} requested"
        )
    level_idx = _level_index(demands, capacity, thresholds)
    levels = list(Level)
    values: dict[str, FloatArray] = {}
    for name in profile.attributes:
        base = np.array([profile.base_perf[level][name] for level in levels])[level_idx]
        value = base * profile.seasonal[name].values[offsets]
        if profile.noise_std > 0:
            value = value * (1.0 + rng.normal(0.0, profile.noise_std, size=value.shape))
        values[name] = np.maximum(value, 1e-9)
    return values


def ground_truth_performance(
    profile: ProviderProfile,
    workload: WorkloadSeries,
    thresholds: LevelThresholds = DEFAULT_THRESHOLDS,
    rng: np.random.Generator | None = None,
) -> QoSMatrix:
    """Actual long-term performance of a provider for the consumer's workload.

    Raises:
        HorizonMismatch: If the seasonal profile does not cover the workload horizon
    """
    rng = rng if rng is not None else np.random.default_rng([profile.rng_seed, _TRUTH])
    values = _performance(
        profile,
        workload.demands.values,
        workload.demands.timestamps(),
        workload.capacity,
        thresholds,
        rng,
    )
    start = workload.demands.start_index
    return QoSMatrix({name: TimeSeries(v, start) for name, v in values.items()})


def simulate_trial(
    profile: ProviderProfile,
    plan: TrialPlan,
    trial_window: tuple[int, int],
    capacity: float,
    thresholds: LevelThresholds = DEFAULT_THRESHOLDS,
    rng: np.random.Generator | None = None,
) -> TrialExperience:
    """Run every plan entry at its trial-window timestamp against the ground truth.

    Raises:
        EmptyPlan: If the plan has no entries
        WindowMismatch: If the window does not fit the plan or the profile horizon
    """
    if not plan.entries:
        raise EmptyPlan("Cannot simulate an empty trial plan")
    start, end = trial_window
    if end - start + 1 != plan.trial_length:
        raise WindowMismatch(
            f"Trial window [{start}, {end}] does not span {plan.trial_length} timestamps"
        )
    if start < profile.seasonal.start_index or end > profile.seasonal.end_index:
        raise WindowMismatch(
            f"Trial window [{start}, {end}] is outside the horizon of {profile.provider_id}"
        )
    rng = rng if rng is not None else np.random.default_rng([profile.rng_seed, _TRIAL])
    streams = []
    for entries in plan.streams():
        timestamps = np.array([start + e.trial_slot - 1 for e in entries], dtype=np.int64)
        demands = np.array([e.demand for e in entries], dtype=np.float64)
        values = _performance(profile, demands, timestamps, capacity, thresholds, rng)
        streams.append(QoSMatrix({name: TimeSeries(v, start) for name, v in values.items()}))
    return TrialExperience(
        provider_id=profile.provider_id,
        plan=plan,
        streams=tuple(streams),
        trial_window=(start, end),
    )


def tiled_windows(period: int, window_days: int) -> list[tuple[int, int]]:
    """Consecutive windows of window_days tiling [1, period]; the last may be shorter."""
    return [(s, min(s + window_days - 1, period)) for s in range(1, period + 1, window_days)]


def build_signature_from_history(
    profile: ProviderProfile,
    user_count: int,
    windows: Sequence[tuple[int, int]],
    seed: int,
    reference_demand: float,
    capacity: float,
    thresholds: LevelThresholds = DEFAULT_THRESHOLDS,
) -> IaaSSignature:
    """Synthesize past trial users and aggregate them into a signature.

    User i runs the constant reference workload over windows[i % len(windows)]
    with its own noise draws.

    Raises:
        CoverageGap: If the windows leave timestamps of the period uncovered
    """
    if user_count < 1 or not windows:
        raise ConfigError("At least one past user and one window are required")
    rng = np.random.default_rng([profile.rng_seed, seed, _HISTORY])
    observations = []
    for i in range(user_count):
        start, end = windows[i % len(windows)]
        timestamps = np.arange(start, end + 1, dtype=np.int64)
        demands = np.full(timestamps.size, reference_demand)
        values = _performance(profile, demands, timestamps, capacity, thresholds, rng)
        observations.append(
            TrialObservation(
                user_id=f"user-{i + 1}",
                observed=QoSMatrix({n: TimeSeries(v, start) for n, v in values.items()}),
                window=(start, end),
            )
        )
    return generate_signature(profile.provider_id, observations, profile.seasonal.length)


def seasonal_factors(
    horizon: int,
    attributes: Sequence[str],
    annual_amplitude: float,
    weekly_amplitude: float,
    rng: np.random.Generator,
    step_change: float = 0.0,
) -> QoSMatrix:
    """Multiplicative seasonal factors: annual and weekly sinusoids plus an optional step."""
    t = np.arange(1, horizon + 1, dtype=np.float64)
    rows = {}
    for name in attributes:
        annual_phase, weekly_phase = rng.uniform(0.0, 2 * np.pi, size=2)
        factor = (
            1.0
            + annual_amplitude * np.sin(2 * np.pi * t / DAYS_PER_YEAR + annual_phase)
            + weekly_amplitude * np.sin(2 * np.pi * t / DAYS_PER_WEEK + weekly_phase)
        )
        if step_change:
            step_day = int(rng.integers(1, horizon + 1))
            factor = factor + np.where(t >= step_day, step_change, 0.0)
        rows[name] = TimeSeries(factor, 1)
    return QoSMatrix(rows)


def synthetic_providers(config: ExperimentConfig, seed: int | None = None) -> list[ProviderProfile]:
    """Private providers p1.. followed by noisier, more seasonal public providers."""
    scenario = config.scenario
    rng = np.random.default_rng([config.seed if seed is None else seed, 7919])
    private_count = config.provider_count - scenario.public_count
    ranges = {Level.LOW: (110.0, 150.0), Level.MEDIUM: (80.0, 110.0), Level.HIGH: (50.0, 80.0)}
    profiles = []
    for i in range(config.provider_count):
        public = i >= private_count
        base_perf = {
            level: {name: float(rng.uniform(lo, hi)) for name in scenario.attributes}
            for level, (lo, hi) in ranges.items()
        }
        amplitude = (
            scenario.public_seasonal_amplitude if public else scenario.private_seasonal_amplitude
        )
        seasonal = seasonal_factors(
            config.horizon_days,
            scenario.attributes,
            amplitude,
            scenario.weekly_amplitude,
            rng,
            scenario.step_change,
        )
        profiles.append(
            ProviderProfile(
                provider_id=f"p{i + 1}",
                base_perf=base_perf,
                seasonal=seasonal,
                noise_std=scenario.public_noise_std if public else scenario.private_noise_std,
                rng_seed=int(rng.integers(0, 2**31 - 1)),
                public=public,
            )
        )
    return profiles


def zipf_workload(
    horizon: int,
    distinct: int,
    exponent: float,
    capacity: float,
    rng: np.random.Generator,
) -> WorkloadSeries:
    """Workload whose i-th smallest demand occurs with probability proportional to 1/i^s."""
    values = np.round(capacity * np.arange(1, distinct + 1) / distinct, 2)
    weights = 1.0 / np.arange(1, distinct + 1, dtype=np.float64) ** exponent
    demands = rng.choice(values, size=horizon, p=weights / weights.sum())
    return WorkloadSeries(TimeSeries(demands, 1), capacity)


def aggregate_daily(values: FloatArray, samples_per_day: int) -> FloatArray:
    """Mean of each day's samples; a trailing partial day is averaged as is."""
    if samples_per_day <= 1:
        return np.asarray(values, dtype=np.float64)
    starts = np.arange(0, values.size, samples_per_day)
    daily: FloatArray = np.add.reduceat(values, starts) / np.diff(np.append(starts, values.size))
    return daily


def expand_cyclic(values: FloatArray, horizon: int) -> FloatArray:
    """Tile a daily series cyclically until it spans horizon days."""
    tiled: FloatArray = np.resize(np.asarray(values, dtype=np.float64), horizon)
    return tiled


def consumer_request(
    workload: WorkloadSeries,
    scenario: ScenarioConfig,
    rng: np.random.Generator,
    level: float = 100.0,
) -> ConsumerRequest:
    """Requested QoS following a smooth yearly requirement curve per attribute."""
    t = workload.demands.timestamps().astype(np.float64)
    rows = {}
    for name in scenario.attributes:
        phase = float(rng.uniform(0.0, 2 * np.pi))
        curve = level * (
            1.0 + scenario.request_amplitude * np.sin(2 * np.pi * t / DAYS_PER_YEAR + phase)
        )
        rows[name] = TimeSeries(curve, workload.demands.start_index)
    return ConsumerRequest(workload=workload, required_qos=QoSMatrix(rows))


def synthetic_world(config: ExperimentConfig) -> tuple[ConsumerRequest, list[ProviderProfile]]:
    """Zipf consumer workload, its request and the configured provider set."""
    rng = np.random.default_rng([config.seed, 104729])
    scenario = config.scenario
    workload = zipf_workload(
        config.horizon_days,
        scenario.distinct_demands,
        scenario.zipf_exponent,
        scenario.capacity,
        rng,
    )
    return consumer_request(workload, scenario, rng), synthetic_providers(config)


@dataclass(eq=False)
class CellResult:
    """Outcome of one provider x scheme cell."""

    provider_id: str
    scheme: Scheme
    confidence: ConfidenceReport | None = None
    discarded: bool = False
    spd_nrmse: float | None = None
    lpd_nrmse: float | None = None
    spd_nrmse_per_attribute: dict[str, float] = field(default_factory=dict)
    lpd_nrmse_per_attribute: dict[str, float] = field(default_factory=dict)
    error: str | None = None
    experience: TrialExperience | None = None
    spd: PerformancePrediction | None = None
    lpd: PerformancePrediction | None = None


@dataclass(eq=False)
class ExperimentReport:
    """Provider x scheme grid, the four rankings and their agreement with EXPECTED."""

    config: dict[str, Any]
    seed: int
    provider_ids: list[str]
    schemes: list[Scheme]
    cells: list[CellResult]
    rankings: dict[RankingMethod, RankingReport]
    kendall_tau: dict[RankingMethod, float | None]
    actual: dict[str, QoSMatrix] = field(default_factory=dict)
    ranking_errors: dict[RankingMethod, str] = field(default_factory=dict)

    def cell(self, provider_id: str, scheme: Scheme) -> CellResult:
        for cell in self.cells:
            if cell.provider_id == provider_id and cell.scheme is scheme:
                return cell
        raise KeyError((provider_id, scheme))


def _mean_nrmse(actual: QoSMatrix, predicted: QoSMatrix) -> tuple[float, dict[str, float]]:
    per_attribute = {name: nrmse(actual[name], predicted[name]) for name in actual}
    return float(np.mean(list(per_attribute.values()))), per_attribute


@dataclass(frozen=True, eq=False)
class _Prepared:
    """Ground truth and signature of one provider, or why they are missing."""

    actual: QoSMatrix | None = None
    signature: IaaSSignature | None = None
    error: str | None = None


@dataclass(frozen=True, eq=False)
class _CellTask:
    provider_index: int
    scheme_index: int
    scheme: Scheme
    profile: ProviderProfile
    plan: TrialPlan | None
    prepared: _Prepared
    plan_error: str | None = None


def _failure(error: SelectionError) -> str:
    return f"{type(error).__name__}: {error}"


def _run_cell(task: _CellTask, config: ExperimentConfig, request: ConsumerRequest) -> CellResult:
    profile = task.profile
    cell = CellResult(provider_id=profile.provider_id, scheme=task.scheme)
    plan, actual, signature = task.plan, task.prepared.actual, task.prepared.signature
    if plan is None or actual is None or signature is None:
        cell.error = task.prepared.error or task.plan_error
        return cell
    workload = request.workload
    rng = np.random.default_rng([config.seed, task.provider_index, task.scheme_index, _TRIAL])
    try:
        experience = simulate_trial(
            profile,
            plan,
            (config.trial_start_day, config.trial_end_day),
            workload.capacity,
            config.levels,
            rng,
        )
        cell.experience = experience
        cell.confidence = assess_trial(
            experience,
            signature,
            capacity=workload.capacity if config.level_adjusted_confidence else None,
            threshold=config.confidence_threshold,
            thresholds=config.levels,
        )
        if not cell.confidence.passed:
            cell.discarded = True
            logger.info("%s/%s discarded by confidence", profile.provider_id, cell.scheme)
            return cell
        cell.spd = spd_discover(workload, experience, signature, config.wrap_signature)
        cell.lpd = lpd_discover(workload, experience)
        cell.spd_nrmse, cell.spd_nrmse_per_attribute = _mean_nrmse(actual, cell.spd.predicted)
        cell.lpd_nrmse, cell.lpd_nrmse_per_attribute = _mean_nrmse(actual, cell.lpd.predicted)
        logger.debug(
            "%s/%s: SPD NRMSE %.4f, LPD NRMSE %.4f",
            profile.provider_id,
            cell.scheme,
            cell.spd_nrmse,
            cell.lpd_nrmse,
        )
    except SelectionError as e:
        cell.error = _failure(e)
        logger.warning("%s/%s failed: %s", profile.provider_id, cell.scheme, cell.error)
    return cell


def _tau_against(expected: RankingReport, other: RankingReport) -> float | None:
    common = [pid for pid in expected.order if pid in other.scores]
    if len(common) < 2:
        return None
    return kendall_tau(common, [pid for pid in other.order if pid in common])


def _rankings(
    request: ConsumerRequest,
    cells: Sequence[CellResult],
    actual: dict[str, QoSMatrix],
    scheme: Scheme,
) -> tuple[dict[RankingMethod, RankingReport], dict[RankingMethod, str]]:
    rankings: dict[RankingMethod, RankingReport] = {}
    errors: dict[RankingMethod, str] = {}
    scored = [c for c in cells if c.scheme is scheme and c.spd is not None and c.lpd is not None]
    builders = {
        RankingMethod.EXPECTED: lambda: expected_ranking(request, list(actual.items())),
        RankingMethod.SHORT_TERM: lambda: short_term_ranking(
            request, [c.experience for c in scored if c.experience is not None]
        ),
        RankingMethod.LPD: lambda: rank_providers(
            request, [c.lpd for c in scored if c.lpd is not None]
        ),
        RankingMethod.SPD: lambda: rank_providers(
            request, [c.spd for c in scored if c.spd is not None]
        ),
    }
    for method, build in builders.items():
        try:
            rankings[method] = build()
        except SelectionError as e:
            errors[method] = _failure(e)
            logger.warning("%s ranking unavailable: %s", method.value, errors[method])
    return rankings, errors


def run_experiment(
    config: ExperimentConfig,
    request: ConsumerRequest,
    profiles: Sequence[ProviderProfile],
) -> ExperimentReport:
    """Run the full provider x scheme pipeline and the four rankings.

    Per provider: ground truth and a signature from synthetic trial history.
    Per scheme: one plan. Per cell: simulate trial, assess confidence and, when
    it passes, run SPD and LPD and score them by NRMSE against the truth.
    Failures are recorded in the cells they affect without aborting the grid:
    a provider whose ground truth or signature cannot be built fails all of
    its cells and is left out of the rankings, and a scheme whose plan cannot
    be built fails its column.
    """
    workload = request.workload
    horizon = len(workload)
    reference_demand = config.reference_demand_fraction * workload.capacity
    logger.info(
        "Running experiment: %d providers x %d schemes over %d timestamps (seed %d)",
        len(profiles),
        len(config.schemes),
        horizon,
        config.seed,
    )

    def prepare(item: tuple[int, ProviderProfile]) -> _Prepared:
        index, profile = item
        truth_rng = np.random.default_rng([profile.rng_seed, config.seed, index, _TRUTH])
        try:
            actual = ground_truth_performance(profile, workload, config.levels, truth_rng)
            windows = tiled_windows(profile.seasonal.length, config.signature_window_days)
            signature = build_signature_from_history(
                profile,
                config.past_users_per_window * len(windows),
                windows,
                config.seed,
                reference_demand,
                workload.capacity,
                config.levels,
            )
        except SelectionError as e:
            logger.warning("Provider %s unavailable: %s", profile.provider_id, _failure(e))
            return _Prepared(error=_failure(e))
        return _Prepared(actual=actual, signature=signature)

    plans: list[TrialPlan | None] = []
    plan_errors: list[str | None] = []
    for scheme in config.schemes:
        try:
            plans.append(
                plan_trial(
                    workload, config.trial_length_days, scheme, config.eq_vm_count, config.levels
                )
            )
            plan_errors.append(None)
        except SelectionError as e:
            logger.warning("%s plan unavailable: %s", scheme.value, _failure(e))
            plans.append(None)
            plan_errors.append(_failure(e))
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        prepared = list(executor.map(prepare, enumerate(profiles)))
        tasks = [
            _CellTask(
                p_idx, s_idx, scheme, profile, plans[s_idx], prepared[p_idx], plan_errors[s_idx]
            )
            for p_idx, profile in enumerate(profiles)
            for s_idx, scheme in enumerate(config.schemes)
        ]
        cells = list(executor.map(lambda t: _run_cell(t, config, request), tasks))

    actual = {
        profile.provider_id: result.actual
        for profile, result in zip(profiles, prepared, strict=True)
        if result.actual is not None
    }
    rankings, ranking_errors = _rankings(
        request, cells, actual, config.effective_ranking_scheme
    )
    expected = rankings.get(RankingMethod.EXPECTED)
    taus: dict[RankingMethod, float | None] = {}
    for method in (RankingMethod.SHORT_TERM, RankingMethod.LPD, RankingMethod.SPD):
        other = rankings.get(method)
        taus[method] = (
            _tau_against(expected, other) if expected is not None and other is not None else None
        )
    return ExperimentReport(
        # worker count does not change results and stays out of the report
        config={k: v for k, v in config.to_dict().items() if k != "workers"},
        seed=config.seed,
        provider_ids=[p.provider_id for p in profiles],
        schemes=list(config.schemes),
        cells=cells,
        rankings=rankings,
        kendall_tau=taus,
        actual=actual,
        ranking_errors=ranking_errors,
    )


def trace_rows(report: ExperimentReport) -> tuple[list[str], list[list[str]]]:
    """Plot-ready actual/SPD/LPD series of every scored cell, one row per timestamp."""
    attributes: tuple[str, ...] = ()
    for matrix in report.actual.values():
        attributes = matrix.names
        break
    header = ["provider", "scheme", "t"]
    for name in attributes:
        header += [f"actual_{name}", f"spd_{name}", f"lpd_{name}"]
    rows: list[list[str]] = []
    for cell in report.cells:
        if cell.spd is None or cell.lpd is None:
            continue
        actual = report.actual[cell.provider_id]
        for offset, t in enumerate(actual[attributes[0]].timestamps()):
            row = [cell.provider_id, cell.scheme.value, str(int(t))]
            for name in attributes:
                row += [
                    repr(float(actual[name].values[offset])),
                    repr(float(cell.spd.predicted[name].values[offset])),
                    repr(float(cell.lpd.predicted[name].values[offset])),
                ]
            rows.append(row)
    return header, rows
