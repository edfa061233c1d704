"""End-to-end experiment checks on synthetic worlds.

These runs use the full 360-day horizon and take a few seconds each.
"""

from collections import defaultdict

import numpy as np
import pytest

from iaas_signature_selection_tool.confidence import assess_trial, filter_providers
from iaas_signature_selection_tool.config import ExperimentConfig, ScenarioConfig
from iaas_signature_selection_tool.core import QoSMatrix, TimeSeries, WorkloadSeries
from iaas_signature_selection_tool.ranking import ConsumerRequest, RankingMethod, kendall_tau
from iaas_signature_selection_tool.simharness import (
    ExperimentReport,
    ProviderProfile,
    build_signature_from_history,
    run_experiment,
    simulate_trial,
    synthetic_world,
    tiled_windows,
)
from iaas_signature_selection_tool.trial import Level, Scheme, plan_trial

SEEDS = range(20)
DAYS = np.arange(1, 361, dtype=np.float64)


@pytest.fixture(scope="module")
def seeded_reports() -> list[ExperimentReport]:
    """The default setup over 20 seeds with every cell kept."""
    reports = []
    for seed in SEEDS:
        config = ExperimentConfig(seed=seed, confidence_threshold=-1.0)
        request, profiles = synthetic_world(config)
        reports.append(run_experiment(config, request, profiles))
    return reports


def test_spd_exact_in_noise_free_world() -> None:
    """Test SPD reproduces the truth when the plan covers every demand and LPD does not."""
    config = ExperimentConfig(
        confidence_threshold=-1.0,
        schemes=(Scheme.FG, Scheme.RG),
        scenario=ScenarioConfig(private_noise_std=0.0, public_noise_std=0.0, distinct_demands=8),
    )
    request, profiles = synthetic_world(config)
    report = run_experiment(config, request, profiles)
    assert len(report.cells) == 14
    for cell in report.cells:
        assert cell.error is None
        assert cell.spd_nrmse is not None and cell.spd_nrmse <= 1e-9
        assert cell.lpd_nrmse is not None and cell.lpd_nrmse > 0


def test_spd_beats_lpd_per_provider(seeded_reports: list[ExperimentReport]) -> None:
    """Test mean SPD NRMSE is below mean LPD NRMSE for every provider under FG, MG and EQ."""
    spd: dict[tuple[str, Scheme], list[float]] = defaultdict(list)
    lpd: dict[tuple[str, Scheme], list[float]] = defaultdict(list)
    for report in seeded_reports:
        assert len(report.cells) == 28
        for cell in report.cells:
            assert cell.spd_nrmse is not None and cell.lpd_nrmse is not None
            spd[cell.provider_id, cell.scheme].append(cell.spd_nrmse)
            lpd[cell.provider_id, cell.scheme].append(cell.lpd_nrmse)
    for scheme in (Scheme.FG, Scheme.MG, Scheme.EQ):
        for pid in seeded_reports[0].provider_ids:
            assert np.mean(spd[pid, scheme]) < np.mean(lpd[pid, scheme]), (pid, scheme)


def test_scheme_ordering(seeded_reports: list[ExperimentReport]) -> None:
    """Test frequency-based plans predict best and resource-based plans worst."""
    means = {
        scheme: np.mean(
            [c.spd_nrmse for r in seeded_reports for c in r.cells if c.scheme is scheme]
        )
        for scheme in (Scheme.FG, Scheme.MG, Scheme.RG)
    }
    assert means[Scheme.FG] <= means[Scheme.MG] <= means[Scheme.RG]


def _requested_shape() -> np.ndarray:
    return 1.0 + 0.25 * np.sin(2 * np.pi * DAYS / 360)


def _dip() -> np.ndarray:
    # late-year maintenance dip, zero during the June trial
    return np.exp(-(((DAYS - 330) / 10) ** 2))


def _ranked_world(seed: int) -> tuple[ConsumerRequest, list[ProviderProfile], list[str]]:
    """Seven providers whose distance to the request grows with their dip depth.

    Provider ids are shuffled against the dip depth, so an id-ordered ranking
    carries no information.
    """
    rng = np.random.default_rng(seed)
    ids = [f"p{i}" for i in rng.permutation(np.arange(1, 8))]
    workload = WorkloadSeries(TimeSeries(np.full(360, 50.0)), 100.0)
    shape = _requested_shape()
    request = ConsumerRequest(workload, QoSMatrix.from_arrays({"throughput": 100.0 * shape}))
    profiles = [
        ProviderProfile(
            provider_id=pid,
            base_perf={
                Level.LOW: {"throughput": 150.0},
                Level.MEDIUM: {"throughput": 100.0},
                Level.HIGH: {"throughput": 60.0},
            },
            seasonal=QoSMatrix.from_arrays({"throughput": shape - 0.015 * depth * _dip()}),
            rng_seed=int(rng.integers(0, 1000)),
        )
        for depth, pid in enumerate(ids)
    ]
    return request, profiles, ids


def test_ranking_fidelity() -> None:
    """Test SPD recovers the constructed ranking while trial-only methods do not."""
    taus: dict[RankingMethod, list[float]] = defaultdict(list)
    for seed in SEEDS:
        request, profiles, construction = _ranked_world(seed)
        config = ExperimentConfig(seed=seed, schemes=(Scheme.FG,))
        report = run_experiment(config, request, profiles)
        expected = report.rankings[RankingMethod.EXPECTED]
        assert kendall_tau(list(expected.order), construction) == pytest.approx(1.0)
        for method in (RankingMethod.SHORT_TERM, RankingMethod.LPD, RankingMethod.SPD):
            tau = report.kendall_tau[method]
            assert tau is not None
            taus[method].append(tau)

    spd = np.mean(taus[RankingMethod.SPD])
    assert min(taus[RankingMethod.SPD]) >= 0.8
    assert np.mean(taus[RankingMethod.SHORT_TERM]) < spd
    assert np.mean(taus[RankingMethod.LPD]) < spd


def _seasonal_profile(pid: str, seasonal: np.ndarray) -> ProviderProfile:
    return ProviderProfile(
        provider_id=pid,
        base_perf={
            Level.LOW: {"throughput": 150.0, "response_time": 20.0},
            Level.MEDIUM: {"throughput": 100.0, "response_time": 40.0},
            Level.HIGH: {"throughput": 60.0, "response_time": 80.0},
        },
        seasonal=QoSMatrix.from_arrays({"throughput": seasonal, "response_time": seasonal}),
    )


def test_confidence_self_test_and_inverted_provider() -> None:
    """Test a provider matching its signature passes and an inverted one is discarded."""
    seasonal = 1.0 + 0.2 * np.sin(2 * np.pi * DAYS / 360) + 0.05 * np.sin(2 * np.pi * DAYS / 7)
    honest = _seasonal_profile("honest", seasonal)
    inverted = _seasonal_profile("inverted", 2.0 - seasonal)
    workload = WorkloadSeries(TimeSeries(np.full(360, 50.0)), 100.0)
    plan = plan_trial(workload, 30, Scheme.FG)
    signature = build_signature_from_history(honest, 12, tiled_windows(360, 30), 0, 50.0, 100.0)

    reports = []
    for profile in (honest, inverted):
        experience = simulate_trial(profile, plan, (151, 180), 100.0)
        reports.append(assess_trial(experience, signature, capacity=100.0, threshold=0.7))

    assert reports[0].total >= 0.999
    assert reports[1].total < 0
    kept, discarded = filter_providers(reports, 0.7)
    assert [r.provider_id for r in kept] == ["honest"]
    assert [r.provider_id for r in discarded] == ["inverted"]
