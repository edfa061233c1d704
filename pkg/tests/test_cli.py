"""Tests for the command-line interface."""

import json
from pathlib import Path

import click
import pytest
from click.testing import CliRunner

from iaas_signature_selection_tool.cli import main

SMALL_CONFIG = {
    "horizon_days": 40,
    "provider_count": 3,
    "trial_length_days": 8,
    "trial_start_day": 11,
    "signature_window_days": 10,
    "past_users_per_window": 2,
    "scenario": {"distinct_demands": 6, "public_count": 1},
}


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def write_json(path: Path, data: object) -> Path:
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def observation(path: Path, user: str, start: int, values: list[float]) -> Path:
    return write_json(
        path,
        {
            "user_id": user,
            "window": [start, start + len(values) - 1],
            "observed": {"start_index": start, "attributes": {"tput": values}},
        },
    )


@pytest.fixture
def workload_csv(tmp_path: Path) -> Path:
    """Six days of demand with capacity 100."""
    path = tmp_path / "demand.csv"
    path.write_text("# capacity=100\nt,demand\n1,10\n2,50\n3,10\n4,90\n5,10\n6,50\n")
    return path


@pytest.fixture
def experience_json(tmp_path: Path) -> Path:
    """A two-day FG trial on days 2-3 for demands 10 and 50."""
    plan = {
        "scheme": "FG",
        "trial_length": 2,
        "vm_count": 1,
        "entries": [
            {"trial_slot": 1, "demand": 10.0, "source_timestamp": 1, "vm": 0},
            {"trial_slot": 2, "demand": 50.0, "source_timestamp": 2, "vm": 0},
        ],
    }
    return write_json(
        tmp_path / "trial.json",
        {
            "provider_id": "p1",
            "trial_window": [2, 3],
            "plan": plan,
            "streams": [{"start_index": 2, "attributes": {"tput": [120.0, 100.0]}}],
        },
    )


def signature_json(path: Path, values: list[float]) -> Path:
    return write_json(
        path,
        {"provider_id": "p1", "period": len(values), "attributes": {"tput": values}},
    )


def test_help_lists_commands(runner: CliRunner) -> None:
    """Test the group help and version."""
    result = runner.invoke(main, [])
    assert result.exit_code == 0
    for command in ("signature", "plan", "discover", "rank", "experiment", "completion"):
        assert command in result.output
    assert runner.invoke(main, ["--version"]).exit_code == 0


@pytest.mark.parametrize("name", ["signature", "plan", "discover", "rank", "experiment"])
def test_subcommand_help(runner: CliRunner, name: str) -> None:
    """Test every option of a subcommand is described in its help with the file formats."""
    command = main.commands[name]
    result = runner.invoke(main, [name, "--help"])
    assert result.exit_code == 0
    assert "File formats:" in result.output
    for param in command.params:
        assert isinstance(param, click.Option)
        assert param.help, f"{name} {param.opts} has no help"
        for opt in (*param.opts, *param.secondary_opts):
            assert opt in result.output


def test_unknown_option_is_usage_error(runner: CliRunner) -> None:
    """Test click usage errors exit with 1."""
    result = runner.invoke(main, ["plan", "--bogus"])
    assert result.exit_code == 1


def test_signature_success(runner: CliRunner, tmp_path: Path) -> None:
    """Test signature generation from two users."""
    first = observation(tmp_path / "u1.json", "u1", 1, [1.0, 2.0])
    second = observation(tmp_path / "u2.json", "u2", 3, [3.0, 4.0])
    out = tmp_path / "sig.json"
    result = runner.invoke(
        main,
        ["signature", "--observations", str(first), "--observations", str(second),
         "--period", "4", "--provider-id", "p1", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert data["provider_id"] == "p1"
    assert data["coverage"] == [1, 1, 1, 1]


def test_signature_coverage_gap(runner: CliRunner, tmp_path: Path) -> None:
    """Test an uncovered timestamp exits with 2 and is named."""
    first = observation(tmp_path / "u1.json", "u1", 1, [1.0, 2.0])
    out = tmp_path / "sig.json"
    result = runner.invoke(
        main,
        ["signature", "--observations", str(first), "--period", "4", "--out", str(out)],
    )
    assert result.exit_code == 2
    assert "3, 4" in result.output
    assert not out.exists()


def test_signature_missing_file(runner: CliRunner, tmp_path: Path) -> None:
    """Test a missing input exits with 1."""
    result = runner.invoke(
        main,
        ["signature", "--observations", str(tmp_path / "none.json"), "--period", "4",
         "--out", str(tmp_path / "sig.json")],
    )
    assert result.exit_code == 1
    assert "does not exist" in result.output


def test_plan_success(runner: CliRunner, workload_csv: Path, tmp_path: Path) -> None:
    """Test planning an FG trial from a CSV workload."""
    out = tmp_path / "plan.json"
    result = runner.invoke(
        main, ["plan", "--workload", str(workload_csv), "--trial-days", "2", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert data["scheme"] == "FG"
    assert sorted(e["demand"] for e in data["entries"]) == [10.0, 50.0]


def test_plan_parse_error(runner: CliRunner, tmp_path: Path) -> None:
    """Test a malformed CSV row names its line."""
    bad = tmp_path / "bad.csv"
    bad.write_text("# capacity=100\nt,demand\n1,abc\n")
    result = runner.invoke(
        main,
        ["plan", "--workload", str(bad), "--trial-days", "1", "--out", str(tmp_path / "p.json")],
    )
    assert result.exit_code == 2
    assert "line 3" in result.output


def test_plan_invalid_utf8(runner: CliRunner, tmp_path: Path) -> None:
    """Test undecodable workload bytes are reported, not raised."""
    bad = tmp_path / "bad.csv"
    bad.write_bytes(b"# capacity=100\nt,demand\n1,5\xff\n")
    result = runner.invoke(
        main,
        ["plan", "--workload", str(bad), "--trial-days", "1", "--out", str(tmp_path / "p.json")],
    )
    assert result.exit_code == 2
    assert not isinstance(result.exception, UnicodeDecodeError)
    assert "line 3" in result.output
    assert "UTF-8" in result.output


def test_plan_validation_error(runner: CliRunner, workload_csv: Path, tmp_path: Path) -> None:
    """Test a trial longer than the workload is rejected."""
    result = runner.invoke(
        main,
        ["plan", "--workload", str(workload_csv), "--trial-days", "7",
         "--out", str(tmp_path / "p.json")],
    )
    assert result.exit_code == 2
    assert "exceeds" in result.output


def test_plan_refuses_overwrite(runner: CliRunner, workload_csv: Path, tmp_path: Path) -> None:
    """Test existing outputs need --force."""
    out = tmp_path / "plan.json"
    out.write_text("{}")
    args = ["plan", "--workload", str(workload_csv), "--trial-days", "2", "--out", str(out)]
    assert runner.invoke(main, args).exit_code == 1
    assert runner.invoke(main, [*args, "--force"]).exit_code == 0


def test_discover_flat_signature_matches_lpd(
    runner: CliRunner, workload_csv: Path, experience_json: Path, tmp_path: Path
) -> None:
    """Test SPD with an all-ones signature writes the LPD prediction."""
    sig = signature_json(tmp_path / "sig.json", [1.0] * 6)
    spd_out, lpd_out = tmp_path / "spd.json", tmp_path / "lpd.json"
    common = ["--experience", str(experience_json), "--workload", str(workload_csv)]
    spd = runner.invoke(
        main, ["discover", *common, "--signature", str(sig), "--out", str(spd_out)]
    )
    lpd = runner.invoke(main, ["discover", *common, "--method", "lpd", "--out", str(lpd_out)])
    assert spd.exit_code == 0, spd.output
    assert lpd.exit_code == 0, lpd.output
    spd_data, lpd_data = json.loads(spd_out.read_text()), json.loads(lpd_out.read_text())
    assert spd_data["method"] == "SPD"
    assert lpd_data["method"] == "LPD"
    assert spd_data["predicted"] == lpd_data["predicted"]
    # demand 90 matches the 50 slot
    assert lpd_data["predicted"]["attributes"]["tput"] == [120.0, 100.0, 120.0, 100.0, 120.0, 100.0]


def test_discover_scales_by_signature(
    runner: CliRunner, workload_csv: Path, experience_json: Path, tmp_path: Path
) -> None:
    """Test SPD scales the matched trial value by the signature ratio."""
    sig = signature_json(tmp_path / "sig.json", [1.0, 2.0, 2.0, 1.0, 1.0, 1.0])
    out = tmp_path / "spd.json"
    result = runner.invoke(
        main,
        ["discover", "--experience", str(experience_json), "--workload", str(workload_csv),
         "--signature", str(sig), "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    predicted = json.loads(out.read_text())["predicted"]["attributes"]["tput"]
    assert predicted == pytest.approx([60.0, 100.0, 120.0, 50.0, 60.0, 50.0])


def test_discover_zero_signature(
    runner: CliRunner, workload_csv: Path, experience_json: Path, tmp_path: Path
) -> None:
    """Test a zero signature value at a trial timestamp exits with 2."""
    sig = signature_json(tmp_path / "sig.json", [1.0, 0.0, 1.0, 1.0, 1.0, 1.0])
    result = runner.invoke(
        main,
        ["discover", "--experience", str(experience_json), "--workload", str(workload_csv),
         "--signature", str(sig), "--out", str(tmp_path / "spd.json")],
    )
    assert result.exit_code == 2


def test_discover_spd_needs_signature(
    runner: CliRunner, workload_csv: Path, experience_json: Path, tmp_path: Path
) -> None:
    """Test SPD without a signature is a configuration error."""
    result = runner.invoke(
        main,
        ["discover", "--experience", str(experience_json), "--workload", str(workload_csv),
         "--out", str(tmp_path / "spd.json")],
    )
    assert result.exit_code == 1


def _rank_inputs(tmp_path: Path) -> tuple[Path, list[Path]]:
    request = write_json(
        tmp_path / "request.json",
        {
            "capacity": 100,
            "demands": [10, 20, 30],
            "required_qos": {"attributes": {"tput": [1, 2, 3]}},
        },
    )
    predictions = []
    for pid, values in (("far", [3, 2, 1]), ("near", [1, 2, 3])):
        predictions.append(
            write_json(
                tmp_path / f"{pid}.json",
                {
                    "provider_id": pid,
                    "method": "SPD",
                    "predicted": {"attributes": {"tput": values}},
                },
            )
        )
    return request, predictions


def test_rank_success(runner: CliRunner, tmp_path: Path) -> None:
    """Test ranking two predictions best-first."""
    request, predictions = _rank_inputs(tmp_path)
    out = tmp_path / "ranking.json"
    args = ["rank", "--request", str(request), "--out", str(out)]
    for path in predictions:
        args += ["--predictions", str(path)]
    result = runner.invoke(main, args)
    assert result.exit_code == 0, result.output
    assert json.loads(out.read_text())["order"] == ["near", "far"]
    assert "1. near" in result.output


def test_rank_errors(runner: CliRunner, tmp_path: Path) -> None:
    """Test malformed weights, mismatched lengths and duplicate ids."""
    request, predictions = _rank_inputs(tmp_path)
    base = ["rank", "--request", str(request), "--out", str(tmp_path / "r.json")]
    bad_weight = runner.invoke(main, [*base, "--predictions", str(predictions[0]), "--weight", "x"])
    assert bad_weight.exit_code == 1

    short = write_json(
        tmp_path / "short.json",
        {"provider_id": "s", "method": "SPD", "predicted": {"attributes": {"tput": [1, 2]}}},
    )
    assert runner.invoke(main, [*base, "--predictions", str(short)]).exit_code == 2

    twice = [*base, "--predictions", str(predictions[0]), "--predictions", str(predictions[0])]
    assert runner.invoke(main, twice).exit_code == 2

    lpd = write_json(
        tmp_path / "lpd.json",
        {"provider_id": "l", "method": "LPD", "predicted": {"attributes": {"tput": [1, 2, 3]}}},
    )
    mixed_args = [*base, "--predictions", str(predictions[0]), "--predictions", str(lpd)]
    mixed = runner.invoke(main, mixed_args)
    assert mixed.exit_code == 2
    assert "mix discovery methods" in mixed.output


def test_experiment_reproducible(runner: CliRunner, tmp_path: Path) -> None:
    """Test seeded runs echo the seed and write identical bundles for any worker count."""
    config = write_json(tmp_path / "exp.json", SMALL_CONFIG)
    outputs = []
    for name, workers in (("a", "1"), ("b", "1"), ("c", "3")):
        out_dir = tmp_path / name
        result = runner.invoke(
            main,
            ["experiment", "--config", str(config), "--seed", "5", "--workers", workers,
             "--out-dir", str(out_dir)],
        )
        assert result.exit_code == 0, result.output
        assert "Seed: 5" in result.output
        outputs.append(
            [(out_dir / f).read_bytes() for f in ("report.json", "rankings.csv", "traces.csv")]
        )
    assert outputs[0] == outputs[1] == outputs[2]
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["seed"] == 5


def test_experiment_default_grid(runner: CliRunner, tmp_path: Path) -> None:
    """Test the default setup reports every provider x scheme cell."""
    result = runner.invoke(main, ["experiment", "--out-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["providers"] == [f"p{i}" for i in range(1, 8)]
    assert report["schemes"] == ["FG", "RG", "MG", "EQ"]
    assert len(report["cells"]) == 28


def test_experiment_invalid_config(runner: CliRunner, tmp_path: Path) -> None:
    """Test invalid configs and existing reports exit with 1."""
    bad = write_json(tmp_path / "bad.json", {"horizon_days": 0})
    result = runner.invoke(
        main, ["experiment", "--config", str(bad), "--out-dir", str(tmp_path / "out")]
    )
    assert result.exit_code == 1
    assert "horizon_days" in result.output

    existing = tmp_path / "existing"
    existing.mkdir()
    (existing / "report.json").write_text("{}")
    result = runner.invoke(main, ["experiment", "--out-dir", str(existing)])
    assert result.exit_code == 1
    assert "--force" in result.output


def test_experiment_with_workload_and_profiles(
    runner: CliRunner, workload_csv: Path, tmp_path: Path
) -> None:
    """Test a CSV workload and profile files replace the synthetic world."""
    config = write_json(tmp_path / "exp.json", SMALL_CONFIG)
    profile = {
        "schema": 1,
        "provider_id": "own",
        "base_perf": {
            level: {"throughput": value, "response_time": value}
            for level, value in (("LOW", 120.0), ("MEDIUM", 100.0), ("HIGH", 60.0))
        },
        "seasonal": {
            "attributes": {
                "throughput": [1.0 + 0.01 * t for t in range(40)],
                "response_time": [1.0] * 40,
            }
        },
    }
    first = write_json(tmp_path / "own.json", profile)
    second = write_json(tmp_path / "other.json", {**profile, "provider_id": "other"})
    out_dir = tmp_path / "out"
    args = ["experiment", "--config", str(config), "--workload", str(workload_csv),
            "--profile", str(first), "--profile", str(second), "--threshold", "-1",
            "--out-dir", str(out_dir)]

    result = runner.invoke(main, args)
    assert result.exit_code == 2
    assert "6 days of workload" in result.output
    assert "--expand" in result.output
    assert not out_dir.exists()

    result = runner.invoke(main, [*args, "--expand"])
    assert result.exit_code == 0, result.output
    report = json.loads((out_dir / "report.json").read_text())
    assert report["providers"] == ["own", "other"]
    assert report["config"]["confidence_threshold"] == -1.0


def test_defaults_file(runner: CliRunner, workload_csv: Path, tmp_path: Path) -> None:
    """Test option defaults per subcommand with flags taking precedence."""
    defaults = write_json(tmp_path / "defaults.json", {"plan": {"scheme": "RG", "trial_days": 1}})
    out = tmp_path / "plan.json"
    result = runner.invoke(
        main,
        ["--defaults", str(defaults), "plan", "--workload", str(workload_csv), "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert data["scheme"] == "RG"
    assert [e["demand"] for e in data["entries"]] == [90.0]

    result = runner.invoke(
        main,
        ["--defaults", str(defaults), "plan", "--workload", str(workload_csv),
         "--scheme", "FG", "--out", str(out), "--force"],
    )
    assert result.exit_code == 0, result.output
    assert json.loads(out.read_text())["scheme"] == "FG"

    broken = write_json(tmp_path / "broken.json", {"plan": 3})
    assert runner.invoke(main, ["--defaults", str(broken), "plan"]).exit_code == 1


@pytest.mark.parametrize("shell", ["bash", "zsh", "fish"])
def test_completion(runner: CliRunner, shell: str) -> None:
    """Test completion scripts are generated."""
    result = runner.invoke(main, ["completion", shell])
    assert result.exit_code == 0
    assert "_IAAS_SIGNATURE_SELECTION_TOOL_COMPLETE" in result.output
