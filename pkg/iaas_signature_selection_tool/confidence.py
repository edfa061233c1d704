"""Trial confidence: how well a trial experience matches a provider's signature.

Per-attribute confidence is the Pearson correlation between the normalized
trial observation and the signature slice of the trial window; the total is
the mean across attributes. Providers below the threshold are discarded.
"""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from iaas_signature_selection_tool.core import QoSMatrix, TimeSeries, pearson, std_normalize
from iaas_signature_selection_tool.errors import (
    ConfigError,
    LengthMismatch,
    NoAttributes,
    TooShort,
    WindowMismatch,
    ZeroVariance,
)
from iaas_signature_selection_tool.logging_config import get_logger
from iaas_signature_selection_tool.signature import IaaSSignature, signature_window
from iaas_signature_selection_tool.trial import (
    DEFAULT_THRESHOLDS,
    Level,
    LevelThresholds,
    TrialPlan,
    plan_levels,
)

logger = get_logger(__name__)

DEFAULT_CONFIDENCE_THRESHOLD = 0.7


@dataclass(frozen=True, eq=False)
class TrialExperience:
    """QoS observed while running a trial plan; one stream per trial VM."""

    provider_id: str
    plan: TrialPlan
    streams: tuple[QoSMatrix, ...]
    trial_window: tuple[int, int]

    def __post_init__(self) -> None:
        start, end = self.trial_window
        k = self.plan.trial_length
        if end - start + 1 != k:
            raise WindowMismatch(f"Trial window [{start}, {end}] does not span {k} timestamps")
        if len(self.streams) != self.plan.vm_count:
            raise WindowMismatch(
                f"Plan runs on {self.plan.vm_count} VM(s) but {len(self.streams)} "
                "observation stream(s) were given"
            )
        for stream in self.streams:
            if stream.length != k or stream.start_index != start:
                raise LengthMismatch(
                    f"Observation stream must cover [{start}, {end}], "
                    f"got {stream.length} values from {stream.start_index}"
                )

    @property
    def observed(self) -> QoSMatrix:
        """The first (for FG/RG/MG the only) observation stream."""
        return self.streams[0]

    @property
    def start(self) -> int:
        return self.trial_window[0]


@dataclass(frozen=True)
class AttributeConfidence:
    """Confidence of one attribute; zero_variance marks the 0 convention."""

    value: float
    zero_variance: bool = False


@dataclass(frozen=True)
class ConfidenceReport:
    """Per-attribute and total trial confidence of one provider."""

    provider_id: str
    per_attribute: dict[str, float]
    total: float
    passed: bool
    threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    zero_variance: tuple[str, ...] = field(default_factory=tuple)
    skipped: tuple[str, ...] = field(default_factory=tuple)


def _level_adjusted(series: TimeSeries, groups: Sequence[Level]) -> TimeSeries:
    labels = np.array([str(g) for g in groups])
    values = series.values.copy()
    for label in np.unique(labels):
        mask = labels == label
        mean = float(np.mean(values[mask]))
        if mean != 0:
            values[mask] = values[mask] / mean
    return series.with_values(values)


def attribute_confidence(
    observed: TimeSeries,
    signature_slice: TimeSeries,
    groups: Sequence[Level] | None = None,
) -> AttributeConfidence:
    """Pearson correlation of the std-normalized observation with the signature slice.

    When workload-level groups are given, both series are first divided by
    their per-group means so that base-performance differences between
    workload levels are not read as temporal variability.

    A flat observation or flat slice yields confidence 0 with zero_variance set.

    Raises:
        LengthMismatch: If the lengths differ
        TooShort: If fewer than two trial slots exist
    """
    if len(observed) != len(signature_slice):
        raise LengthMismatch(
            f"Observation has {len(observed)} slots, signature slice {len(signature_slice)}"
        )
    if len(observed) < 2:
        raise TooShort("Trial confidence needs at least 2 trial slots")
    if groups is not None:
        if len(groups) != len(observed):
            raise LengthMismatch("One workload level per trial slot is required")
        observed = _level_adjusted(observed, groups)
        signature_slice = _level_adjusted(signature_slice, groups)
    try:
        value = pearson(std_normalize(observed), signature_slice)
    except ZeroVariance:
        return AttributeConfidence(0.0, zero_variance=True)
    return AttributeConfidence(value)


def total_confidence(per_attribute: Mapping[str, float]) -> float:
    """Arithmetic mean of the per-attribute confidences.

    Raises:
        NoAttributes: If the mapping is empty
    """
    if not per_attribute:
        raise NoAttributes("Total confidence needs at least one attribute")
    return float(np.mean(list(per_attribute.values())))


def _check_threshold(threshold: float) -> None:
    if not -1.0 <= threshold <= 1.0:
        raise ConfigError(f"Confidence threshold must lie in [-1, 1], got {threshold}")


def assess_trial(
    experience: TrialExperience,
    signature: IaaSSignature,
    capacity: float | None = None,
    threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
    thresholds: LevelThresholds = DEFAULT_THRESHOLDS,
) -> ConfidenceReport:
    """Score a trial experience against the provider's signature.

    Each observation stream is correlated with the signature slice of the
    trial window; for multi-VM experiences the per-attribute confidence is the
    mean over streams. Passing a capacity enables level-adjusted correlation.

    Raises:
        OutOfRange: If the trial window lies outside the signature period
        NoAttributes: If observation and signature share no attribute
    """
    _check_threshold(threshold)
    start = experience.start
    k = experience.plan.trial_length
    sig_slice = signature_window(signature, start, k)
    observed_names = set(experience.observed.names)
    skipped = tuple(sorted(set(sig_slice.names) ^ observed_names))
    for name in skipped:
        logger.warning(
            "Provider %s: attribute '%s' is not in both trial and signature; skipped",
            experience.provider_id,
            name,
        )

    streams = experience.plan.streams()
    per_attribute: dict[str, float] = {}
    zero_variance: list[str] = []
    for name in sig_slice.names:
        if name not in observed_names:
            continue
        results = []
        for stream_entries, stream in zip(streams, experience.streams, strict=True):
            groups = (
                plan_levels(stream_entries, capacity, thresholds)
                if capacity is not None
                else None
            )
            results.append(attribute_confidence(stream[name], sig_slice[name], groups))
        per_attribute[name] = float(np.mean([r.value for r in results]))
        if any(r.zero_variance for r in results):
            zero_variance.append(name)

    total = total_confidence(per_attribute)
    passed = total >= threshold
    logger.info(
        "Provider %s: trial confidence %.3f (%s)",
        experience.provider_id,
        total,
        "passed" if passed else "below threshold",
    )
    return ConfidenceReport(
        provider_id=experience.provider_id,
        per_attribute=per_attribute,
        total=total,
        passed=passed,
        threshold=threshold,
        zero_variance=tuple(zero_variance),
        skipped=skipped,
    )


def filter_providers(
    reports: Sequence[ConfidenceReport], threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
) -> tuple[list[ConfidenceReport], list[ConfidenceReport]]:
    """Split reports into kept (total >= threshold) and discarded, preserving order."""
    _check_threshold(threshold)
    kept: list[ConfidenceReport] = []
    discarded: list[ConfidenceReport] = []
    for report in reports:
        passed = report.total >= threshold
        updated = replace(report, passed=passed, threshold=threshold)
        (kept if passed else discarded).append(updated)
    for report in discarded:
        logger.info(
            "Discarding provider %s (confidence %.3f < %.2f)",
            report.provider_id,
            report.total,
            threshold,
        )
    return kept, discarded
