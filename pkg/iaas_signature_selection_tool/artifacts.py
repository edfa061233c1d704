"""File formats: JSON artifacts, workload CSV ingestion and report CSV tables.

JSON is written with sorted keys and two-space indentation so that reruns
with the same seed produce byte-identical files.
"""

import csv
import json
import math
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np

from iaas_signature_selection_tool.confidence import ConfidenceReport, TrialExperience
from iaas_signature_selection_tool.core import QoSMatrix, TimeSeries, WorkloadSeries
from iaas_signature_selection_tool.discovery import Method, PerformancePrediction
from iaas_signature_selection_tool.errors import (
    ArtifactError,
    EmptyWorkload,
    MissingCapacity,
    NonFiniteValue,
    WorkloadParseError,
)
from iaas_signature_selection_tool.logging_config import get_logger
from iaas_signature_selection_tool.ranking import (
    ConsumerRequest,
    RankingMethod,
    RankingReport,
    ranking_table,
)
from iaas_signature_selection_tool.signature import IaaSSignature, TrialObservation
from iaas_signature_selection_tool.simharness import (
    CellResult,
    ExperimentReport,
    ProviderProfile,
    aggregate_daily,
    expand_cyclic,
    trace_rows,
)
from iaas_signature_selection_tool.trial import Level, Scheme, TrialEntry, TrialPlan

logger = get_logger(__name__)

PROFILE_SCHEMA = 1
WORKLOAD_HEADER = ["t", "demand"]


def dump_json(data: Any, path: Path) -> None:
    """Write data as deterministic JSON."""
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_json(path: Path) -> dict[str, Any]:
    """Read a JSON object.

    Raises:
        ArtifactError: If the file is not UTF-8 JSON or not an object
        OSError: If the file cannot be read
    """
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ArtifactError(f"{path}: invalid JSON ({e})") from e
    except UnicodeDecodeError as e:
        raise ArtifactError(f"{path}: not valid UTF-8 ({e.reason} at byte {e.start})") from e
    if not isinstance(data, dict):
        raise ArtifactError(f"{path}: expected a JSON object")
    return data


def _decode[T](path: Path, decoder: Callable[[dict[str, Any]], T]) -> T:
    data = load_json(path)
    try:
        return decoder(data)
    except ArtifactError as e:
        raise ArtifactError(f"{path}: {e}") from e
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactError(f"{path}: malformed artifact ({type(e).__name__}: {e})") from e


def _matrix_to_dict(matrix: QoSMatrix) -> dict[str, Any]:
    return {"start_index": matrix.start_index, "attributes": matrix.to_lists()}


def _matrix_from_dict(data: dict[str, Any]) -> QoSMatrix:
    attributes = data["attributes"]
    if not isinstance(attributes, dict) or not attributes:
        raise ArtifactError("'attributes' must be a non-empty object")
    return QoSMatrix.from_arrays(attributes, int(data.get("start_index", 1)))


def _window(value: Any) -> tuple[int, int]:
    start, end = value
    return int(start), int(end)


# observations


def observation_to_dict(observation: TrialObservation) -> dict[str, Any]:
    return {
        "user_id": observation.user_id,
        "window": list(observation.window),
        "observed": _matrix_to_dict(observation.observed),
    }


def observation_from_dict(data: dict[str, Any]) -> TrialObservation:
    return TrialObservation(
        user_id=str(data["user_id"]),
        observed=_matrix_from_dict(data["observed"]),
        window=_window(data["window"]),
    )


def read_observation(path: Path) -> TrialObservation:
    return _decode(path, observation_from_dict)


def write_observation(observation: TrialObservation, path: Path) -> None:
    dump_json(observation_to_dict(observation), path)


# signatures


def signature_to_dict(signature: IaaSSignature) -> dict[str, Any]:
    return {
        "provider_id": signature.provider_id,
        "period": signature.period,
        "start_index": signature.start_index,
        "attributes": signature.matrix.to_lists(),
        "coverage": [int(c) for c in signature.coverage],
        "flat_attributes": sorted(signature.flat_attributes),
    }


def signature_from_dict(data: dict[str, Any]) -> IaaSSignature:
    matrix = _matrix_from_dict(data)
    if int(data["period"]) != matrix.length:
        raise ArtifactError(f"period {data['period']} does not match {matrix.length} values")
    coverage = np.array(data.get("coverage", [1] * matrix.length), dtype=np.int64)
    return IaaSSignature(
        provider_id=str(data["provider_id"]),
        matrix=matrix,
        coverage=coverage,
        flat_attributes=frozenset(data.get("flat_attributes", [])),
    )


def read_signature(path: Path) -> IaaSSignature:
    return _decode(path, signature_from_dict)


def write_signature(signature: IaaSSignature, path: Path) -> None:
    dump_json(signature_to_dict(signature), path)


# trial plans and experiences


def plan_to_dict(plan: TrialPlan) -> dict[str, Any]:
    return {
        "scheme": plan.scheme.value,
        "trial_length": plan.trial_length,
        "vm_count": plan.vm_count,
        "entries": [
            {
                "trial_slot": e.trial_slot,
                "demand": e.demand,
                "source_timestamp": e.source_timestamp,
                "vm": e.vm,
            }
            for e in plan.entries
        ],
    }


def plan_from_dict(data: dict[str, Any]) -> TrialPlan:
    entries = tuple(
        TrialEntry(
            trial_slot=int(e["trial_slot"]),
            demand=float(e["demand"]),
            source_timestamp=int(e["source_timestamp"]),
            vm=int(e.get("vm", 0)),
        )
        for e in data["entries"]
    )
    return TrialPlan(
        scheme=Scheme(data["scheme"]),
        trial_length=int(data["trial_length"]),
        entries=entries,
        vm_count=int(data.get("vm_count", 1)),
    )


def read_plan(path: Path) -> TrialPlan:
    return _decode(path, plan_from_dict)


def write_plan(plan: TrialPlan, path: Path) -> None:
    dump_json(plan_to_dict(plan), path)


def experience_to_dict(experience: TrialExperience) -> dict[str, Any]:
    return {
        "provider_id": experience.provider_id,
        "trial_window": list(experience.trial_window),
        "plan": plan_to_dict(experience.plan),
        "streams": [_matrix_to_dict(s) for s in experience.streams],
    }


def experience_from_dict(data: dict[str, Any], plan: TrialPlan | None = None) -> TrialExperience:
    """Decode an experience; an explicit plan replaces the embedded one."""
    return TrialExperience(
        provider_id=str(data["provider_id"]),
        plan=plan if plan is not None else plan_from_dict(data["plan"]),
        streams=tuple(_matrix_from_dict(s) for s in data["streams"]),
        trial_window=_window(data["trial_window"]),
    )


def read_experience(path: Path, plan: TrialPlan | None = None) -> TrialExperience:
    return _decode(path, lambda data: experience_from_dict(data, plan))


def write_experience(experience: TrialExperience, path: Path) -> None:
    dump_json(experience_to_dict(experience), path)


# predictions and requests


def prediction_to_dict(prediction: PerformancePrediction) -> dict[str, Any]:
    return {
        "provider_id": prediction.provider_id,
        "method": prediction.method.value,
        "predicted": _matrix_to_dict(prediction.predicted),
        "matched_slot": [int(i) for i in prediction.matched_slot],
    }


def prediction_from_dict(data: dict[str, Any]) -> PerformancePrediction:
    return PerformancePrediction(
        provider_id=str(data["provider_id"]),
        method=Method(data["method"]),
        predicted=_matrix_from_dict(data["predicted"]),
        matched_slot=np.array(data.get("matched_slot", []), dtype=np.int64),
    )


def read_prediction(path: Path) -> PerformancePrediction:
    return _decode(path, prediction_from_dict)


def write_prediction(prediction: PerformancePrediction, path: Path) -> None:
    dump_json(prediction_to_dict(prediction), path)


def request_to_dict(request: ConsumerRequest) -> dict[str, Any]:
    return {
        "capacity": request.workload.capacity,
        "start_index": request.workload.demands.start_index,
        "demands": request.workload.demands.to_list(),
        "required_qos": _matrix_to_dict(request.required_qos),
    }


def request_from_dict(data: dict[str, Any]) -> ConsumerRequest:
    demands = TimeSeries.of(data["demands"], int(data.get("start_index", 1)))
    return ConsumerRequest(
        workload=WorkloadSeries(demands, float(data["capacity"])),
        required_qos=_matrix_from_dict(data["required_qos"]),
    )


def read_request(path: Path) -> ConsumerRequest:
    return _decode(path, request_from_dict)


def write_request(request: ConsumerRequest, path: Path) -> None:
    dump_json(request_to_dict(request), path)


def ranking_to_dict(ranking: RankingReport) -> dict[str, Any]:
    return {
        "method": ranking.method.value,
        "order": list(ranking.order),
        "scores": ranking.scores,
        "constant_series": {k: list(v) for k, v in ranking.constant_series.items()},
    }


def write_ranking(ranking: RankingReport, path: Path) -> None:
    dump_json(ranking_to_dict(ranking), path)


# provider profiles


def profile_to_dict(profile: ProviderProfile) -> dict[str, Any]:
    return {
        "schema": PROFILE_SCHEMA,
        "provider_id": profile.provider_id,
        "base_perf": {level.value: dict(perf) for level, perf in profile.base_perf.items()},
        "seasonal": _matrix_to_dict(profile.seasonal),
        "noise_std": profile.noise_std,
        "rng_seed": profile.rng_seed,
        "public": profile.public,
    }


def profile_from_dict(data: dict[str, Any]) -> ProviderProfile:
    if data.get("schema") != PROFILE_SCHEMA:
        raise ArtifactError(f"Unsupported profile schema {data.get('schema')!r}")
    base_perf = {
        Level(level): {str(k): float(v) for k, v in perf.items()}
        for level, perf in data["base_perf"].items()
    }
    return ProviderProfile(
        provider_id=str(data["provider_id"]),
        base_perf=base_perf,
        seasonal=_matrix_from_dict(data["seasonal"]),
        noise_std=float(data.get("noise_std", 0.0)),
        rng_seed=int(data.get("rng_seed", 0)),
        public=bool(data.get("public", False)),
    )


def read_profile(path: Path) -> ProviderProfile:
    return _decode(path, profile_from_dict)


def write_profile(profile: ProviderProfile, path: Path) -> None:
    dump_json(profile_to_dict(profile), path)


# experiment reports


def _confidence_to_dict(report: ConfidenceReport | None) -> dict[str, Any] | None:
    if report is None:
        return None
    return {
        "total": report.total,
        "per_attribute": report.per_attribute,
        "passed": report.passed,
        "threshold": report.threshold,
        "zero_variance": list(report.zero_variance),
        "skipped": list(report.skipped),
    }


def _cell_to_dict(cell: CellResult) -> dict[str, Any]:
    return {
        "provider_id": cell.provider_id,
        "scheme": cell.scheme.value,
        "confidence": _confidence_to_dict(cell.confidence),
        "discarded": cell.discarded,
        "spd_nrmse": cell.spd_nrmse,
        "lpd_nrmse": cell.lpd_nrmse,
        "spd_nrmse_per_attribute": cell.spd_nrmse_per_attribute,
        "lpd_nrmse_per_attribute": cell.lpd_nrmse_per_attribute,
        "error": cell.error,
    }


def report_to_dict(report: ExperimentReport) -> dict[str, Any]:
    return {
        "seed": report.seed,
        "config": report.config,
        "providers": report.provider_ids,
        "schemes": [s.value for s in report.schemes],
        "cells": [_cell_to_dict(c) for c in report.cells],
        "rankings": {
            method.value: ranking_to_dict(ranking) for method, ranking in report.rankings.items()
        },
        "ranking_errors": {m.value: msg for m, msg in report.ranking_errors.items()},
        "kendall_tau": {m.value: tau for m, tau in report.kendall_tau.items()},
    }


def write_report(report: ExperimentReport, path: Path) -> None:
    dump_json(report_to_dict(report), path)


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def write_rankings_csv(report: ExperimentReport, path: Path) -> None:
    """One row per ranking method with the best-first provider order."""
    n = len(report.provider_ids)
    with open(path, "w", encoding="utf-8", newline="") as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(["method", *(f"rank_{i}" for i in range(1, n + 1)), "kendall_tau"])
        for method, order in ranking_table(report.rankings):
            padded = list(order) + [""] * (n - len(order))
            tau = None if method is RankingMethod.EXPECTED else report.kendall_tau.get(method)
            writer.writerow([method.value, *padded, _fmt(tau)])


def write_nrmse_grid_csv(report: ExperimentReport, path: Path) -> None:
    """Provider x scheme NRMSE of SPD and LPD; blank where a cell was discarded or failed."""
    with open(path, "w", encoding="utf-8", newline="") as csvfile:
        writer = csv.writer(csvfile)
        header = ["provider"]
        for scheme in report.schemes:
            header += [f"{scheme.value}_spd", f"{scheme.value}_lpd"]
        writer.writerow(header)
        for pid in report.provider_ids:
            row = [pid]
            for scheme in report.schemes:
                cell = report.cell(pid, scheme)
                row += [_fmt(cell.spd_nrmse), _fmt(cell.lpd_nrmse)]
            writer.writerow(row)


def write_traces_csv(report: ExperimentReport, path: Path) -> None:
    header, rows = trace_rows(report)
    with open(path, "w", encoding="utf-8", newline="") as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(header)
        writer.writerows(rows)


def write_report_bundle(report: ExperimentReport, out_dir: Path) -> list[Path]:
    """Write report.json plus the CSV tables into out_dir and return the paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [
        out_dir / "report.json",
        out_dir / "rankings.csv",
        out_dir / "nrmse_grid.csv",
        out_dir / "traces.csv",
    ]
    write_report(report, written[0])
    write_rankings_csv(report, written[1])
    write_nrmse_grid_csv(report, written[2])
    write_traces_csv(report, written[3])
    logger.info("Wrote report bundle to %s", out_dir)
    return written


# workload CSV


def _parse_capacity(comment: str, line_number: int, line: str) -> float | None:
    body = comment.lstrip("#").strip()
    key, sep, value = body.partition("=")
    if not sep or key.strip().lower() != "capacity":
        return None
    try:
        return float(value)
    except ValueError as e:
        raise WorkloadParseError(f"Invalid capacity '{value.strip()}'", line_number, line) from e


def ingest_workload_csv(
    path: Path,
    capacity: float | None = None,
    expand_to: int | None = None,
    samples_per_day: int = 1,
) -> WorkloadSeries:
    """Read a `t,demand` workload trace.

    Lines starting with `#` are comments; `# capacity=<value>` sets the
    capacity unless the capacity argument overrides it. Timestamps must be
    consecutive. With samples_per_day > 1 the samples are averaged per day,
    and expand_to tiles the daily series cyclically to that many days (a
    longer series is cut, with a warning).

    Raises:
        WorkloadParseError: On a malformed header or row (with line number)
        NonFiniteValue: If a demand is NaN or infinite
        EmptyWorkload: If the file has no data rows
        MissingCapacity: If neither the file nor the caller gives a capacity
    """
    header_capacity: float | None = None
    header_seen = False
    timestamps: list[int] = []
    demands: list[float] = []
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        line_number = raw[: e.start].count(b"\n") + 1
        raise WorkloadParseError(
            f"Not valid UTF-8 ({e.reason} at byte {e.start})", line_number, ""
        ) from e
    lines = text.splitlines()
    for line_number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            found = _parse_capacity(stripped, line_number, line)
            header_capacity = found if found is not None else header_capacity
            continue
        fields = [c.strip() for c in next(csv.reader([stripped]))]
        if not header_seen:
            if [c.lower() for c in fields] != WORKLOAD_HEADER:
                raise WorkloadParseError(
                    f"Expected header 't,demand', got '{stripped}'", line_number, line
                )
            header_seen = True
            continue
        if len(fields) != 2:
            raise WorkloadParseError(
                f"Expected 2 columns, got {len(fields)}", line_number, line
            )
        try:
            t = int(fields[0])
            demand = float(fields[1])
        except ValueError as e:
            raise WorkloadParseError(f"Cannot parse row '{stripped}'", line_number, line) from e
        if not math.isfinite(demand):
            raise NonFiniteValue(f"Non-finite demand at line {line_number}: {stripped}")
        if timestamps and t != timestamps[-1] + 1:
            raise WorkloadParseError(
                f"Timestamp {t} does not follow {timestamps[-1]}", line_number, line
            )
        timestamps.append(t)
        demands.append(demand)

    if not demands:
        raise EmptyWorkload(f"{path}: no workload rows")
    resolved = capacity if capacity is not None else header_capacity
    if resolved is None:
        raise MissingCapacity(f"{path}: no '# capacity=' header and no capacity given")

    values = np.array(demands, dtype=np.float64)
    start = timestamps[0]
    if samples_per_day > 1:
        values = aggregate_daily(values, samples_per_day)
        start = 1
    if expand_to is not None and expand_to != values.size:
        if expand_to < values.size:
            logger.warning("%s: cutting %d days of workload to %d", path, values.size, expand_to)
        values = expand_cyclic(values, expand_to)
        start = 1
    logger.info(
        "Ingested %d workload rows from %s (%d timestamps)", len(demands), path, values.size
    )
    return WorkloadSeries(TimeSeries(values, start), resolved)


def write_workload_csv(workload: WorkloadSeries, path: Path) -> None:
    """Write a workload in the format read by ingest_workload_csv."""
    with open(path, "w", encoding="utf-8", newline="") as csvfile:
        csvfile.write(f"# capacity={workload.capacity!r}\n")
        writer = csv.writer(csvfile)
        writer.writerow(WORKLOAD_HEADER)
        for t, d in zip(workload.demands.timestamps(), workload.demands.values, strict=True):
            writer.writerow([int(t), repr(float(d))])
