"""Provider ranking against the consumer's requested QoS.

Each provider is scored by the sum over attributes of the RMSE between the
min-max normalized requested and predicted series; lower is better. The
expected ranking scores ground-truth performance with NRMSE instead.
"""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from scipy import stats

from iaas_signature_selection_tool.confidence import TrialExperience
from iaas_signature_selection_tool.core import (
    QoSMatrix,
    TimeSeries,
    WorkloadSeries,
    min_max_normalize,
    nrmse,
    rmse,
)
from iaas_signature_selection_tool.discovery import PerformancePrediction
from iaas_signature_selection_tool.errors import (
    AttributeMismatch,
    LengthMismatch,
    MixedMethods,
    NoProviders,
    NotPermutation,
)
from iaas_signature_selection_tool.logging_config import get_logger

logger = get_logger(__name__)


class RankingMethod(StrEnum):
    """How the provider scores were obtained."""

    EXPECTED = "EXPECTED"
    SHORT_TERM = "SHORT_TERM"
    LPD = "LPD"
    SPD = "SPD"


@dataclass(frozen=True, eq=False)
class ConsumerRequest:
    """The consumer's long-term workload and requested QoS per timestamp."""

    workload: WorkloadSeries
    required_qos: QoSMatrix

    def __post_init__(self) -> None:
        if self.required_qos.length != len(self.workload):
            raise LengthMismatch(
                f"Requested QoS covers {self.required_qos.length} timestamps, "
                f"workload {len(self.workload)}"
            )


@dataclass(frozen=True)
class ProviderScore:
    """Score of one provider plus attributes normalized by the constant convention."""

    score: float
    constant_attributes: tuple[str, ...] = ()


@dataclass(frozen=True)
class RankingReport:
    """Provider scores and their best-first order."""

    method: RankingMethod
    scores: dict[str, float]
    order: tuple[str, ...]
    constant_series: dict[str, tuple[str, ...]] = field(default_factory=dict)


def _weights_for(names: Sequence[str], weights: Mapping[str, float] | None) -> dict[str, float]:
    if weights is None:
        return dict.fromkeys(names, 1.0)
    unknown = set(weights) - set(names)
    if unknown:
        raise AttributeMismatch(f"Weights given for unknown attributes: {sorted(unknown)}")
    return {name: float(weights.get(name, 1.0)) for name in names}


def _check_compatible(requested: QoSMatrix, other: QoSMatrix) -> None:
    if set(requested.names) != set(other.names):
        raise AttributeMismatch(
            f"Requested attributes {sorted(requested.names)} differ from {sorted(other.names)}"
        )
    if requested.length != other.length:
        raise LengthMismatch(
            f"Requested QoS has {requested.length} timestamps, other has {other.length}"
        )


def score_detail(
    requested: QoSMatrix,
    predicted: QoSMatrix,
    weights: Mapping[str, float] | None = None,
) -> ProviderScore:
    """Weighted sum over attributes of RMSE between min-max normalized series."""
    _check_compatible(requested, predicted)
    total = 0.0
    constant: list[str] = []
    for name, weight in _weights_for(requested.names, weights).items():
        req = min_max_normalize(requested[name])
        pred = min_max_normalize(predicted[name])
        if req.constant or pred.constant:
            constant.append(name)
        total += weight * rmse(req.series, pred.series)
    return ProviderScore(score=total, constant_attributes=tuple(constant))


def provider_score(
    requested: QoSMatrix,
    predicted: QoSMatrix,
    weights: Mapping[str, float] | None = None,
) -> float:
    """Rank score of one provider; attribute weights default to 1.

    Raises:
        AttributeMismatch: If the attribute sets differ
        LengthMismatch: If the series lengths differ
    """
    return score_detail(requested, predicted, weights).score


def _report(method: RankingMethod, details: Mapping[str, ProviderScore]) -> RankingReport:
    if not details:
        raise NoProviders("At least one provider is required for a ranking")
    scores = {pid: d.score for pid, d in details.items()}
    order = tuple(sorted(scores, key=lambda pid: (scores[pid], pid)))
    constant = {pid: d.constant_attributes for pid, d in details.items() if d.constant_attributes}
    for pid, names in constant.items():
        logger.warning("%s ranking: provider %s has constant series %s", method, pid, names)
    logger.info("%s ranking: %s", method.value, " < ".join(order))
    return RankingReport(method=method, scores=scores, order=order, constant_series=constant)


def _unique_ids(ids: Sequence[str]) -> None:
    if len(set(ids)) != len(ids):
        raise NotPermutation(f"Duplicate provider ids in {list(ids)}")


def rank_providers(
    request: ConsumerRequest,
    predictions: Sequence[PerformancePrediction],
    weights: Mapping[str, float] | None = None,
) -> RankingReport:
    """Rank providers by the distance of their predictions to the request.

    Ties are broken by provider id.

    Raises:
        MixedMethods: If the predictions come from more than one discovery method
    """
    _unique_ids([p.provider_id for p in predictions])
    methods = sorted({p.method.value for p in predictions})
    if len(methods) > 1:
        raise MixedMethods(f"Predictions mix discovery methods {', '.join(methods)}")
    details = {
        p.provider_id: score_detail(request.required_qos, p.predicted, weights)
        for p in predictions
    }
    method = RankingMethod(methods[0]) if methods else RankingMethod.SPD
    return _report(method, details)


def expected_ranking(
    request: ConsumerRequest,
    actual: Sequence[tuple[str, QoSMatrix]],
    weights: Mapping[str, float] | None = None,
) -> RankingReport:
    """Ground-truth ranking by summed NRMSE between request and actual performance.

    Each provider is normalized by the range of its own actual series.

    Raises:
        ZeroRange: If an actual attribute series is constant
    """
    _unique_ids([pid for pid, _ in actual])
    details: dict[str, ProviderScore] = {}
    for pid, matrix in actual:
        _check_compatible(request.required_qos, matrix)
        total = sum(
            weight * nrmse(matrix[name], request.required_qos[name])
            for name, weight in _weights_for(request.required_qos.names, weights).items()
        )
        details[pid] = ProviderScore(score=float(total))
    return _report(RankingMethod.EXPECTED, details)


def _mean_stream(experience: TrialExperience) -> QoSMatrix:
    return QoSMatrix(
        {
            name: TimeSeries(
                np.mean([s[name].values for s in experience.streams], axis=0), experience.start
            )
            for name in experience.observed.names
        }
    )


def short_term_ranking(
    request: ConsumerRequest,
    experiences: Sequence[TrialExperience],
    weights: Mapping[str, float] | None = None,
) -> RankingReport:
    """Rank providers on the trial window only.

    The request is sliced to each trial window and compared with the observed
    trial performance (averaged over VMs for multi-VM experiences).
    """
    _unique_ids([e.provider_id for e in experiences])
    details: dict[str, ProviderScore] = {}
    for experience in experiences:
        window = request.required_qos.slice(experience.start, experience.plan.trial_length)
        details[experience.provider_id] = score_detail(window, _mean_stream(experience), weights)
    return _report(RankingMethod.SHORT_TERM, details)


def kendall_tau(order_a: Sequence[str], order_b: Sequence[str]) -> float:
    """Kendall rank correlation between two orders of the same ids.

    Raises:
        NotPermutation: If the orders are not permutations of one id set of size >= 2
    """
    if (
        len(order_a) != len(order_b)
        or len(set(order_a)) != len(order_a)
        or set(order_a) != set(order_b)
    ):
        raise NotPermutation(f"{list(order_a)} and {list(order_b)} are not permutations")
    if len(order_a) < 2:
        raise NotPermutation("Kendall tau needs at least 2 ids")
    position = {pid: i for i, pid in enumerate(order_b)}
    result = stats.kendalltau(np.arange(len(order_a)), [position[pid] for pid in order_a])
    return float(result.statistic)


def ranking_table(
    reports: Mapping[RankingMethod, RankingReport],
) -> list[tuple[RankingMethod, tuple[str, ...]]]:
    """Best-first order per method, one row per available method in canonical order."""
    return [(method, reports[method].order) for method in RankingMethod if method in reports]
