"""Long-term performance discovery from a trial experience.

SPD matches every long-term workload to its nearest trial workload and
rescales the observed trial performance by the signature ratio between the
long-term timestamp and the timestamp at which the trial workload ran. LPD,
the baseline, propagates the matched trial performance unchanged.
"""

from dataclasses import dataclass
from enum import StrEnum

import numpy as np
import numpy.typing as npt

from iaas_signature_selection_tool.confidence import TrialExperience
from iaas_signature_selection_tool.core import FloatArray, QoSMatrix, TimeSeries, WorkloadSeries
from iaas_signature_selection_tool.errors import (
    AttributeMismatch,
    ConfigError,
    EmptyPlan,
    ZeroSignatureValue,
)
from iaas_signature_selection_tool.logging_config import get_logger
from iaas_signature_selection_tool.signature import IaaSSignature, signature_values_at
from iaas_signature_selection_tool.trial import TrialPlan

logger = get_logger(__name__)

IntArray = npt.NDArray[np.int64]


class Method(StrEnum):
    """Performance discovery method."""

    SPD = "SPD"
    LPD = "LPD"


@dataclass(frozen=True, eq=False)
class PerformancePrediction:
    """Predicted per-timestamp QoS over the consumer's horizon."""

    provider_id: str
    method: Method
    predicted: QoSMatrix
    matched_slot: IntArray


def nearest_neighbor(demand: float, plan: TrialPlan) -> int:
    """Index of the plan entry whose demand is closest; ties go to the lower index.

    Raises:
        EmptyPlan: If the plan has no entries
    """
    if not plan.entries:
        raise EmptyPlan("Trial plan has no entries")
    return int(np.argmin(np.abs(plan.demands - demand)))


def _match_all(workload: WorkloadSeries, plan: TrialPlan) -> IntArray:
    if not plan.entries:
        raise EmptyPlan("Trial plan has no entries")
    distance = np.abs(workload.demands.values[:, None] - plan.demands[None, :])
    # argmin returns the first minimum, i.e. the lower entry index on ties
    matched: IntArray = np.argmin(distance, axis=1).astype(np.int64)
    return matched


def _trial_times(experience: TrialExperience) -> IntArray:
    return np.array(
        [experience.start + e.trial_slot - 1 for e in experience.plan.entries], dtype=np.int64
    )


def _trial_values(experience: TrialExperience, attribute: str) -> FloatArray:
    return np.array(
        [
            experience.streams[e.vm][attribute].values[e.trial_slot - 1]
            for e in experience.plan.entries
        ],
        dtype=np.float64,
    )


def lpd_discover(workload: WorkloadSeries, experience: TrialExperience) -> PerformancePrediction:
    """Baseline discovery: each long-term workload inherits its nearest trial result.

    Raises:
        EmptyPlan: If the plan has no entries
    """
    matched = _match_all(workload, experience.plan)
    start = workload.demands.start_index
    rows = {
        name: TimeSeries(_trial_values(experience, name)[matched], start)
        for name in experience.observed.names
    }
    logger.debug("LPD for %s over %d timestamps", experience.provider_id, len(workload))
    return PerformancePrediction(
        provider_id=experience.provider_id,
        method=Method.LPD,
        predicted=QoSMatrix(rows),
        matched_slot=matched,
    )


def spd_discover(
    workload: WorkloadSeries,
    experience: TrialExperience,
    signature: IaaSSignature,
    wrap: bool = True,
) -> PerformancePrediction:
    """Signature-based discovery: P(t) = S(t) / S(trial_time) * P_trial.

    The signature is indexed at the actual horizon timestamp where each trial
    slot ran. Horizons longer than the signature period wrap modulo the
    period unless wrap is disabled.

    Raises:
        EmptyPlan: If the plan has no entries
        AttributeMismatch: If an observed attribute has no signature row
        SignatureTooShort: If wrap is disabled and the horizon exceeds the signature
        ZeroSignatureValue: If the signature is zero at a matched trial timestamp
    """
    matched = _match_all(workload, experience.plan)
    horizon = workload.demands.timestamps()
    trial_times = _trial_times(experience)
    used = np.unique(matched)
    rows: dict[str, TimeSeries] = {}
    for name in experience.observed.names:
        if name not in signature.matrix:
            raise AttributeMismatch(
                f"Signature of {signature.provider_id} has no attribute '{name}'"
            )
        s_now = signature_values_at(signature, name, horizon, wrap)
        s_trial = signature_values_at(signature, name, trial_times, wrap)
        zero = used[s_trial[used] == 0]
        if zero.size:
            raise ZeroSignatureValue(name, int(trial_times[zero[0]]))
        transform = s_now / s_trial[matched]
        rows[name] = TimeSeries(
            transform * _trial_values(experience, name)[matched], workload.demands.start_index
        )
    logger.debug("SPD for %s over %d timestamps", experience.provider_id, len(workload))
    return PerformancePrediction(
        provider_id=experience.provider_id,
        method=Method.SPD,
        predicted=QoSMatrix(rows),
        matched_slot=matched,
    )


def discover(
    method: Method,
    workload: WorkloadSeries,
    experience: TrialExperience,
    signature: IaaSSignature | None = None,
    wrap: bool = True,
) -> PerformancePrediction:
    """Run the requested discovery method."""
    if method is Method.LPD:
        return lpd_discover(workload, experience)
    if signature is None:
        raise ConfigError("SPD discovery needs a provider signature")
    return spd_discover(workload, experience, signature, wrap)
