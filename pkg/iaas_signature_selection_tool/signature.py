"""IaaS signature generation from aggregated past-trial observations.

Past trial users share their observed QoS with a trusted aggregator, which
averages the observations per timestamp and divides each attribute's average
by its standard deviation. Only the relative profile is kept; the raw
observations are not retained in the signature.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from iaas_signature_selection_tool.core import FloatArray, QoSMatrix, TimeSeries, std_normalize
from iaas_signature_selection_tool.errors import (
    AttributeMismatch,
    CoverageGap,
    EmptySeries,
    LengthMismatch,
    OutOfRange,
    SignatureTooShort,
    ZeroVariance,
)
from iaas_signature_selection_tool.logging_config import get_logger

logger = get_logger(__name__)

IntArray = npt.NDArray[np.int64]


@dataclass(frozen=True, eq=False)
class TrialObservation:
    """QoS observed by one past trial user over a window of the reference period."""

    user_id: str
    observed: QoSMatrix
    window: tuple[int, int]

    def __post_init__(self) -> None:
        start, end = self.window
        if self.observed.length != end - start + 1 or self.observed.start_index != start:
            raise LengthMismatch(
                f"Observation of '{self.user_id}' does not match its window [{start}, {end}]"
            )


@dataclass(frozen=True, eq=False)
class Aggregate:
    """Per-timestamp mean of all observations plus contribution counts."""

    matrix: QoSMatrix
    coverage: IntArray


@dataclass(frozen=True, eq=False)
class IaaSSignature:
    """Relative long-term performance profile of one provider."""

    provider_id: str
    matrix: QoSMatrix
    coverage: IntArray
    flat_attributes: frozenset[str] = field(default_factory=frozenset)

    @property
    def period(self) -> int:
        return self.matrix.length

    @property
    def start_index(self) -> int:
        return self.matrix.start_index


def aggregate_observations(
    observations: Sequence[TrialObservation], period_length: int
) -> Aggregate:
    """Average observed values per attribute and timestamp over [1, period_length].

    Raises:
        EmptySeries: If no observations are given
        AttributeMismatch: If observations disagree on the attribute set
        OutOfRange: If a window lies outside the reference period
        CoverageGap: If some timestamp has no contributing observation
    """
    if not observations:
        raise EmptySeries("At least one trial observation is required")
    names = observations[0].observed.names
    for obs in observations:
        if set(obs.observed.names) != set(names):
            raise AttributeMismatch(
                f"Observation '{obs.user_id}' has attributes {sorted(obs.observed.names)}, "
                f"expected {sorted(names)}"
            )
        start, end = obs.window
        if start < 1 or end > period_length or end < start:
            raise OutOfRange(
                f"Window [{start}, {end}] of '{obs.user_id}' is outside [1, {period_length}]"
            )

    sums = {name: np.zeros(period_length) for name in names}
    coverage = np.zeros(period_length, dtype=np.int64)
    # fixed summation order makes the mean independent of input order
    for obs in sorted(observations, key=lambda o: (o.window, o.user_id)):
        start, end = obs.window
        coverage[start - 1 : end] += 1
        for name in names:
            sums[name][start - 1 : end] += obs.observed[name].values

    gaps = np.flatnonzero(coverage == 0) + 1
    if gaps.size:
        raise CoverageGap([int(t) for t in gaps])

    matrix = QoSMatrix({name: TimeSeries(sums[name] / coverage, 1) for name in names})
    coverage.flags.writeable = False
    logger.debug(
        "Aggregated %d observations over %d timestamps (coverage %d-%d)",
        len(observations),
        period_length,
        int(coverage.min()),
        int(coverage.max()),
    )
    return Aggregate(matrix=matrix, coverage=coverage)


def generate_signature(
    provider_id: str, observations: Sequence[TrialObservation], period_length: int
) -> IaaSSignature:
    """Generate a provider signature: per-attribute aggregate divided by its std.

    An attribute whose aggregate is flat becomes the all-ones series and is
    listed in flat_attributes.
    """
    aggregate = aggregate_observations(observations, period_length)
    rows: dict[str, TimeSeries] = {}
    flat: set[str] = set()
    for name in aggregate.matrix:
        series = aggregate.matrix[name]
        try:
            rows[name] = std_normalize(series)
        except ZeroVariance:
            logger.warning("Provider %s: attribute '%s' is flat", provider_id, name)
            rows[name] = series.with_values(np.ones(len(series)))
            flat.add(name)
    logger.info(
        "Generated signature for %s from %d observations (%d attributes)",
        provider_id,
        len(observations),
        len(rows),
    )
    return IaaSSignature(
        provider_id=provider_id,
        matrix=QoSMatrix(rows),
        coverage=aggregate.coverage,
        flat_attributes=frozenset(flat),
    )


def signature_window(signature: IaaSSignature, start: int, length: int) -> QoSMatrix:
    """Slice of the signature aligned with a trial window.

    Raises:
        OutOfRange: If the window is not inside the signature period
    """
    return signature.matrix.slice(start, length)


def signature_values_at(
    signature: IaaSSignature,
    attribute: str,
    timestamps: npt.NDArray[np.int64],
    wrap: bool = True,
) -> FloatArray:
    """Signature values of one attribute at arbitrary horizon timestamps.

    Timestamps beyond the signature period wrap modulo the period when wrap is
    set (seasonal periodicity); otherwise they raise SignatureTooShort.
    """
    offsets = np.asarray(timestamps, dtype=np.int64) - signature.start_index
    if wrap:
        offsets = np.mod(offsets, signature.period)
    elif offsets.size and (offsets.min() < 0 or offsets.max() >= signature.period):
        raise SignatureTooShort(
            f"Signature covers {signature.period} timestamps but timestamp "
            f"{int(offsets.max()) + signature.start_index} was requested"
        )
    values: FloatArray = signature.matrix[attribute].values[offsets]
    return values
