"""Time-series types and the numeric operations shared by every module.

All values are immutable: TimeSeries stores a read-only float64 array, and
QoSMatrix stores a read-only mapping of attribute name to TimeSeries.
Timestamps are 1-based integers; one step is one day unless configured
otherwise.
"""

from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np
import numpy.typing as npt
from scipy import stats

from iaas_signature_selection_tool.errors import (
    EmptySeries,
    InvalidWorkload,
    LengthMismatch,
    NonFiniteValue,
    OutOfRange,
    TooShort,
    ZeroRange,
    ZeroVariance,
)

FloatArray = npt.NDArray[np.float64]


def _frozen(values: npt.ArrayLike) -> FloatArray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise EmptySeries(f"Expected a one-dimensional series, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled series of finite values starting at start_index."""

    values: FloatArray
    start_index: int = 1

    def __post_init__(self) -> None:
        arr = _frozen(self.values)
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise NonFiniteValue(
                f"Non-finite value {arr[bad]!r} at timestamp {self.start_index + bad}"
            )
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "start_index", int(self.start_index))

    @classmethod
    def of(cls, values: Iterable[float], start_index: int = 1) -> "TimeSeries":
        """Build a series from any iterable of numbers."""
        return cls(np.fromiter(values, dtype=np.float64), start_index)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def end_index(self) -> int:
        """Last timestamp covered by the series (inclusive)."""
        return self.start_index + len(self) - 1

    def timestamps(self) -> npt.NDArray[np.int64]:
        return np.arange(self.start_index, self.start_index + len(self), dtype=np.int64)

    def slice(self, start: int, length: int) -> "TimeSeries":
        """Return the sub-series covering [start, start + length - 1].

        Raises:
            OutOfRange: If the requested window is not inside the series
        """
        offset = start - self.start_index
        if length < 1 or offset < 0 or offset + length > len(self):
            raise OutOfRange(
                f"Window [{start}, {start + length - 1}] is outside "
                f"[{self.start_index}, {self.end_index}]"
            )
        return TimeSeries(self.values[offset : offset + length], start)

    def with_values(self, values: npt.ArrayLike) -> "TimeSeries":
        """Return a series with new values on the same timestamp index."""
        return TimeSeries(np.asarray(values, dtype=np.float64), self.start_index)

    def to_list(self) -> list[float]:
        return [float(v) for v in self.values]


@dataclass(frozen=True, eq=False)
class QoSMatrix:
    """Named QoS time series sharing one timestamp index."""

    attributes: Mapping[str, TimeSeries]

    def __post_init__(self) -> None:
        attrs = dict(self.attributes)
        series = list(attrs.values())
        if series:
            first = series[0]
            for name, ts in attrs.items():
                if len(ts) != len(first) or ts.start_index != first.start_index:
                    raise LengthMismatch(
                        f"Attribute '{name}' covers [{ts.start_index}, {ts.end_index}] "
                        f"but the matrix covers [{first.start_index}, {first.end_index}]"
                    )
        object.__setattr__(self, "attributes", MappingProxyType(attrs))

    @classmethod
    def from_arrays(
        cls, columns: Mapping[str, Iterable[float]], start_index: int = 1
    ) -> "QoSMatrix":
        """Build a matrix from plain value sequences."""
        return cls({name: TimeSeries.of(vals, start_index) for name, vals in columns.items()})

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.attributes)

    @property
    def length(self) -> int:
        return len(next(iter(self.attributes.values()))) if self.attributes else 0

    @property
    def start_index(self) -> int:
        return next(iter(self.attributes.values())).start_index if self.attributes else 1

    @property
    def end_index(self) -> int:
        """Last timestamp covered (start_index - 1 for an empty matrix)."""
        return self.start_index + self.length - 1

    def __getitem__(self, name: str) -> TimeSeries:
        return self.attributes[name]

    def __contains__(self, name: object) -> bool:
        return name in self.attributes

    def __iter__(self) -> Iterator[str]:
        return iter(self.attributes)

    def slice(self, start: int, length: int) -> "QoSMatrix":
        """Slice every attribute to the same window, preserving attribute order."""
        return QoSMatrix({name: ts.slice(start, length) for name, ts in self.attributes.items()})

    def to_lists(self) -> dict[str, list[float]]:
        return {name: ts.to_list() for name, ts in self.attributes.items()}


@dataclass(frozen=True, eq=False)
class WorkloadSeries:
    """Resource demand per timestamp plus the provisioned capacity."""

    demands: TimeSeries
    capacity: float

    def __post_init__(self) -> None:
        if not self.capacity > 0:
            raise InvalidWorkload(f"Capacity must be positive, got {self.capacity}")
        if np.any(self.demands.values < 0):
            raise InvalidWorkload("Resource demands must be non-negative")

    def __len__(self) -> int:
        return len(self.demands)


@dataclass(frozen=True)
class NormalizedSeries:
    """Result of min-max scaling; constant marks the 0.5 convention."""

    series: TimeSeries
    constant: bool = False


def _require_non_empty(*series: TimeSeries) -> None:
    for ts in series:
        if len(ts) == 0:
            raise EmptySeries("Operation requires a non-empty series")


def _require_same_length(a: TimeSeries, b: TimeSeries) -> None:
    if len(a) != len(b):
        raise LengthMismatch(f"Series lengths differ: {len(a)} != {len(b)}")


def min_max_normalize(series: TimeSeries) -> NormalizedSeries:
    """Scale a series into [0, 1] with min-max feature scaling.

    A constant series maps to 0.5 everywhere and is flagged as constant.

    Raises:
        EmptySeries: If the series is empty
    """
    _require_non_empty(series)
    lo = float(np.min(series.values))
    hi = float(np.max(series.values))
    if hi == lo:
        return NormalizedSeries(series.with_values(np.full(len(series), 0.5)), constant=True)
    scaled = np.clip((series.values - lo) / (hi - lo), 0.0, 1.0)
    return NormalizedSeries(series.with_values(scaled))


def rmse(a: TimeSeries, b: TimeSeries) -> float:
    """Root mean squared error between two equally long series.

    Raises:
        EmptySeries: If either series is empty
        LengthMismatch: If the lengths differ
    """
    _require_non_empty(a, b)
    _require_same_length(a, b)
    return float(np.sqrt(np.mean((a.values - b.values) ** 2)))


def nrmse(a: TimeSeries, b: TimeSeries) -> float:
    """RMSE normalized by the range of the reference series a.

    Raises:
        ZeroRange: If the reference series is constant
    """
    error = rmse(a, b)
    span = float(np.ptp(a.values))
    if span == 0:
        raise ZeroRange("Reference series has zero range; NRMSE is undefined")
    return error / span


def std_normalize(series: TimeSeries) -> TimeSeries:
    """Divide a series by its population standard deviation.

    The mean is not subtracted, so ratios between timestamps are preserved.

    Raises:
        TooShort: If the series has fewer than two values
        ZeroVariance: If the series is constant
    """
    if len(series) < 2:
        raise TooShort(f"Standard deviation needs at least 2 values, got {len(series)}")
    if np.ptp(series.values) == 0:
        raise ZeroVariance("Series is constant; standard deviation is zero")
    sigma = float(np.std(series.values))
    return series.with_values(series.values / sigma)


def pearson(a: TimeSeries, b: TimeSeries) -> float:
    """Pearson correlation coefficient, clamped to [-1, 1].

    Raises:
        LengthMismatch: If the lengths differ
        TooShort: If the series have fewer than two values
        ZeroVariance: If either series is constant
    """
    _require_same_length(a, b)
    if len(a) < 2:
        raise TooShort(f"Correlation needs at least 2 values, got {len(a)}")
    if np.ptp(a.values) == 0 or np.ptp(b.values) == 0:
        raise ZeroVariance("Correlation is undefined for a constant series")
    result = stats.pearsonr(a.values, b.values)
    return float(np.clip(result.statistic, -1.0, 1.0))
