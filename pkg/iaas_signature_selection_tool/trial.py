"""Workload characterization and significance-based trial workload selection.

A consumer's long-term workload is characterized by frequency distribution
analysis (one WorkloadInfo per unique demand) and k trial workloads are
selected by frequency (FG), resource consumption (RG), or a mix of both (MG).
The EQ baseline partitions the workload across trial VMs instead.
"""

from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from iaas_signature_selection_tool.core import FloatArray, WorkloadSeries
from iaas_signature_selection_tool.errors import (
    ConfigError,
    EmptyWorkload,
    InvalidTrialLength,
    InvalidWorkload,
    TooFewWorkloads,
    TrialTooLong,
)
from iaas_signature_selection_tool.logging_config import get_logger

logger = get_logger(__name__)


class Level(StrEnum):
    """Workload level relative to the provisioned capacity."""

    LOW = "LOW"
    MEDIUM = "MEDIUM"
    HIGH = "HIGH"


class Scheme(StrEnum):
    """Trial workload generation scheme."""

    FG = "FG"
    RG = "RG"
    MG = "MG"
    EQ = "EQ"


@dataclass(frozen=True)
class LevelThresholds:
    """Capacity fractions separating LOW/MEDIUM and MEDIUM/HIGH."""

    low: float = 1 / 3
    high: float = 2 / 3

    def __post_init__(self) -> None:
        if not 0 < self.low < self.high:
            raise ConfigError(
                f"Level thresholds must satisfy 0 < low < high, got {self.low}, {self.high}"
            )


DEFAULT_THRESHOLDS = LevelThresholds()


@dataclass(frozen=True)
class WorkloadInfo:
    """Frequency and level of one unique demand value."""

    demand: float
    frequency: int
    level: Level
    first_occurrence: int


@dataclass(frozen=True)
class TrialEntry:
    """One trial workload: executed at trial_slot, taken from source_timestamp."""

    trial_slot: int
    demand: float
    source_timestamp: int
    vm: int = 0


@dataclass(frozen=True)
class TrialPlan:
    """Selected trial workloads; EQ plans carry one entry list per VM."""

    scheme: Scheme
    trial_length: int
    entries: tuple[TrialEntry, ...]
    vm_count: int = 1

    def streams(self) -> list[tuple[TrialEntry, ...]]:
        """Entries grouped per VM, each ordered by trial slot."""
        return [
            tuple(sorted((e for e in self.entries if e.vm == vm), key=lambda e: e.trial_slot))
            for vm in range(self.vm_count)
        ]

    @property
    def demands(self) -> FloatArray:
        return np.array([e.demand for e in self.entries], dtype=np.float64)


def level_of(
    demand: float, capacity: float, thresholds: LevelThresholds = DEFAULT_THRESHOLDS
) -> Level:
    """Classify a demand by its share of capacity; demands above capacity are HIGH."""
    if not capacity > 0:
        raise InvalidWorkload(f"Capacity must be positive, got {capacity}")
    ratio = demand / capacity
    if ratio < thresholds.low:
        return Level.LOW
    if ratio < thresholds.high:
        return Level.MEDIUM
    return Level.HIGH


def plan_levels(
    entries: tuple[TrialEntry, ...],
    capacity: float,
    thresholds: LevelThresholds = DEFAULT_THRESHOLDS,
) -> list[Level]:
    """Levels of the given trial entries, in entry order."""
    return [level_of(e.demand, capacity, thresholds) for e in entries]


def characterize(
    workload: WorkloadSeries, thresholds: LevelThresholds = DEFAULT_THRESHOLDS
) -> list[WorkloadInfo]:
    """Frequency distribution of the workload, one entry per unique demand.

    Returns:
        WorkloadInfo list sorted by demand ascending

    Raises:
        EmptyWorkload: If the workload has no timestamps
    """
    values = workload.demands.values
    if values.size == 0:
        raise EmptyWorkload("Cannot characterize an empty workload")
    unique, first_idx, counts = np.unique(values, return_index=True, return_counts=True)
    start = workload.demands.start_index
    return [
        WorkloadInfo(
            demand=float(d),
            frequency=int(c),
            level=level_of(float(d), workload.capacity, thresholds),
            first_occurrence=start + int(i),
        )
        for d, i, c in zip(unique, first_idx, counts, strict=True)
    ]


def _check_trial_length(workload: WorkloadSeries, trial_length: int) -> None:
    if len(workload) == 0:
        raise EmptyWorkload("Cannot select trial workloads from an empty workload")
    if trial_length < 1:
        raise InvalidTrialLength(f"Trial length must be at least 1, got {trial_length}")
    if trial_length > len(workload):
        raise TrialTooLong(
            f"Trial length {trial_length} exceeds the workload length {len(workload)}"
        )


def _by_frequency(infos: list[WorkloadInfo]) -> list[WorkloadInfo]:
    # equal frequency: higher demand first
    return sorted(infos, key=lambda i: (-i.frequency, -i.demand))


def _by_demand(infos: list[WorkloadInfo]) -> list[WorkloadInfo]:
    return sorted(infos, key=lambda i: -i.demand)


def _round_robin(ranked: list[WorkloadInfo], k: int) -> list[WorkloadInfo]:
    return [ranked[i % len(ranked)] for i in range(k)]


def _mixed(infos: list[WorkloadInfo], k: int) -> list[WorkloadInfo]:
    fg_ranked = _by_frequency(infos)
    fg_count = k // 2
    picks = fg_ranked[:fg_count]
    chosen = {i.demand for i in picks}
    for info in _by_demand(infos)[: k - fg_count]:
        if info.demand not in chosen:
            picks.append(info)
            chosen.add(info.demand)
    for info in fg_ranked[fg_count:]:
        if len(picks) >= k:
            break
        if info.demand not in chosen:
            picks.append(info)
            chosen.add(info.demand)
    return _round_robin(picks, k)


def _build_plan(scheme: Scheme, picks: list[WorkloadInfo], k: int) -> TrialPlan:
    ordered = sorted(picks, key=lambda i: i.demand)
    entries = tuple(
        TrialEntry(trial_slot=slot, demand=info.demand, source_timestamp=info.first_occurrence)
        for slot, info in enumerate(ordered, start=1)
    )
    return TrialPlan(scheme=scheme, trial_length=k, entries=entries)


def select_trial_workloads(
    workload: WorkloadSeries,
    trial_length: int,
    scheme: Scheme,
    thresholds: LevelThresholds = DEFAULT_THRESHOLDS,
) -> TrialPlan:
    """Select trial workloads by significance (FG, RG or MG).

    When fewer unique demands than trial slots exist, the top-ranked demands
    are repeated round-robin. Slots are ordered by demand ascending.

    Args:
        workload: The consumer's long-term workload
        trial_length: Number of trial timestamps k
        scheme: FG, RG or MG

    Returns:
        TrialPlan with exactly k entries

    Raises:
        EmptyWorkload: If the workload is empty
        InvalidTrialLength: If k < 1
        TrialTooLong: If k exceeds the workload length
        ConfigError: If scheme is EQ
    """
    _check_trial_length(workload, trial_length)
    infos = characterize(workload, thresholds)
    if scheme is Scheme.FG:
        picks = _round_robin(_by_frequency(infos), trial_length)
    elif scheme is Scheme.RG:
        picks = _round_robin(_by_demand(infos), trial_length)
    elif scheme is Scheme.MG:
        picks = _mixed(infos, trial_length)
    else:
        raise ConfigError("EQ plans need a VM count; use select_trial_workloads_eq")
    logger.info(
        "Selected %d %s trial workloads from %d unique demands",
        trial_length,
        scheme.value,
        len(infos),
    )
    return _build_plan(scheme, picks, trial_length)


def select_trial_workloads_eq(
    workload: WorkloadSeries, trial_length: int, vm_count: int
) -> TrialPlan:
    """Equivalence-partitioning plan: one compressed partition per trial VM.

    The workload is split into vm_count contiguous partitions (the last takes
    the remainder); each partition is compressed to trial_length slots by
    uniform-stride sampling, keeping chronological order, and its VM runs that
    compressed day for the whole trial.

    Raises:
        TooFewWorkloads: If the workload has fewer timestamps than VMs
        InvalidTrialLength: If trial_length < 1
    """
    if trial_length < 1:
        raise InvalidTrialLength(f"Trial length must be at least 1, got {trial_length}")
    if vm_count < 1:
        raise TooFewWorkloads(f"At least one trial VM is required, got {vm_count}")
    n = len(workload)
    if n < vm_count:
        raise TooFewWorkloads(f"{n} workload timestamps cannot fill {vm_count} partitions")
    values = workload.demands.values
    start = workload.demands.start_index
    size = n // vm_count
    entries: list[TrialEntry] = []
    for vm in range(vm_count):
        lo = vm * size
        hi = n if vm == vm_count - 1 else lo + size
        idx = lo + (np.arange(trial_length) * (hi - lo)) // trial_length
        entries.extend(
            TrialEntry(
                trial_slot=slot,
                demand=float(values[i]),
                source_timestamp=start + int(i),
                vm=vm,
            )
            for slot, i in enumerate(idx, start=1)
        )
    logger.info("Built EQ plan: %d VMs x %d slots", vm_count, trial_length)
    return TrialPlan(
        scheme=Scheme.EQ, trial_length=trial_length, entries=tuple(entries), vm_count=vm_count
    )


def plan_trial(
    workload: WorkloadSeries,
    trial_length: int,
    scheme: Scheme,
    vm_count: int = 1,
    thresholds: LevelThresholds = DEFAULT_THRESHOLDS,
) -> TrialPlan:
    """Dispatch to the significance-based or EQ planner."""
    if scheme is Scheme.EQ:
        return select_trial_workloads_eq(workload, trial_length, vm_count)
    return select_trial_workloads(workload, trial_length, scheme, thresholds)
