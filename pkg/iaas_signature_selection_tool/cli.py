"""CLI entry point for iaas-signature-selection-tool.

Exit codes: 0 on success, 1 for usage, I/O, config and artifact errors, 2 for
domain validation errors raised by the selection pipeline.
"""

import json
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, NoReturn

import click
import numpy as np

from iaas_signature_selection_tool import __version__
from iaas_signature_selection_tool.artifacts import (
    ingest_workload_csv,
    read_experience,
    read_observation,
    read_plan,
    read_prediction,
    read_profile,
    read_request,
    read_signature,
    write_plan,
    write_prediction,
    write_ranking,
    write_report_bundle,
    write_signature,
)
from iaas_signature_selection_tool.completion import completion_command
from iaas_signature_selection_tool.config import load_experiment_config
from iaas_signature_selection_tool.discovery import Method, discover
from iaas_signature_selection_tool.errors import (
    ArtifactError,
    ConfigError,
    HorizonMismatch,
    SelectionError,
)
from iaas_signature_selection_tool.logging_config import get_logger, setup_logging
from iaas_signature_selection_tool.ranking import rank_providers
from iaas_signature_selection_tool.signature import generate_signature
from iaas_signature_selection_tool.simharness import (
    ExperimentReport,
    consumer_request,
    run_experiment,
    synthetic_providers,
    synthetic_world,
)
from iaas_signature_selection_tool.trial import Scheme, plan_trial

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2

VERBOSE_HELP = "Enable verbose output (use -v for INFO, -vv for DEBUG, -vvv for thread names)"


class SelectionGroup(click.Group):
    """Group that maps click usage errors to exit code 1 instead of 2."""

    def main(  # type: ignore[override]
        self,
        args: Sequence[str] | None = None,
        prog_name: str | None = None,
        complete_var: str | None = None,
        standalone_mode: bool = True,
        **extra: Any,
    ) -> Any:
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
            code = rv if isinstance(rv, int) else EXIT_OK
        except click.ClickException as e:
            e.show()
            code = EXIT_USAGE
        except click.Abort:
            click.echo("Aborted!", err=True)
            code = EXIT_USAGE
        if standalone_mode:
            sys.exit(code)
        return code


def _fail(action: str, error: Exception) -> NoReturn:
    """Report an error on stderr and exit with its exit code."""
    click.echo(f"Error {action}: {error}", err=True)
    logger.debug("%s details", type(error).__name__, exc_info=True)
    if isinstance(error, ConfigError | ArtifactError | OSError):
        raise click.exceptions.Exit(EXIT_USAGE)
    raise click.exceptions.Exit(EXIT_DOMAIN)


def _check_output(path: Path, force: bool) -> None:
    if path.exists() and not force:
        click.echo(
            f"Error: Output file '{path}' already exists. Use --force to overwrite.",
            err=True,
        )
        raise click.Abort()


def _setup(verbose: int) -> None:
    ctx = click.get_current_context()
    setup_logging(verbose + int(ctx.find_root().meta.get("verbose", 0)))


def _load_defaults(path: Path) -> dict[str, Any]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    except UnicodeDecodeError as e:
        raise ConfigError(f"{path}: not valid UTF-8 ({e.reason} at byte {e.start})") from e
    if not isinstance(data, dict) or not all(isinstance(v, dict) for v in data.values()):
        raise ConfigError(f"{path}: expected an object of subcommand -> option defaults")
    return data


@click.group(cls=SelectionGroup, invoke_without_command=True)
@click.option("-v", "--verbose", count=True, help=VERBOSE_HELP)
@click.option(
    "--defaults",
    "defaults_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="JSON file with option defaults per subcommand (flags still take precedence)",
)
@click.version_option(version=__version__)
@click.pass_context
def main(ctx: click.Context, verbose: int, defaults_file: Path | None) -> None:
    """A CLI tool that selects long-term IaaS providers from free-trial observations
    and performance signatures."""
    ctx.meta["verbose"] = verbose
    setup_logging(verbose)

    if defaults_file is not None:
        try:
            ctx.default_map = _load_defaults(defaults_file)
            logger.info("Loaded option defaults from %s", defaults_file)
        except (ConfigError, OSError) as e:
            _fail("loading defaults", e)

    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@click.command()
@click.option(
    "--observations",
    multiple=True,
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Trial observation JSON file (repeat for every past user)",
)
@click.option("--period", type=click.IntRange(min=1), required=True, help="Reference period T")
@click.option("--provider-id", default="provider", show_default=True, help="Provider identifier")
@click.option(
    "--out",
    "output_file",
    type=click.Path(path_type=Path),
    required=True,
    help="Signature JSON to write",
)
@click.option("-v", "--verbose", count=True, help=VERBOSE_HELP)
@click.option("-f", "--force", is_flag=True, help="Overwrite output file if it exists")
def signature(
    observations: tuple[Path, ...],
    period: int,
    provider_id: str,
    output_file: Path,
    verbose: int,
    force: bool,
) -> None:
    """Generate a provider signature from past trial observations.

    \b
    Examples:

        \b
        # Aggregate three users covering days 1-360
        iaas-signature-selection-tool signature --period 360 \\
            --observations u1.json --observations u2.json --observations u3.json \\
            --provider-id p1 --out p1-signature.json

    \b
    File formats:
        Observation JSON (input, one per past user):
          {"user_id", "window": [first, last], "observed": {"start_index", "attributes"}}
        Signature JSON (output):
          {"provider_id", "period", "start_index", "attributes", "coverage",
           "flat_attributes"}
    """
    _setup(verbose)
    logger.info("Generating signature for %s from %d files", provider_id, len(observations))
    _check_output(output_file, force)

    try:
        loaded = [read_observation(path) for path in observations]
        sig = generate_signature(provider_id, loaded, period)
        write_signature(sig, output_file)
    except (SelectionError, OSError) as e:
        _fail("generating signature", e)

    if sig.flat_attributes:
        click.echo(
            f"Warning: flat attribute(s) {', '.join(sorted(sig.flat_attributes))} "
            "set to all ones",
            err=True,
        )
    click.echo(f"✓ Successfully wrote signature of {provider_id} to {output_file}")


@click.command()
@click.option(
    "--workload",
    "workload_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    required=True,
    help="Workload CSV (t,demand)",
)
@click.option(
    "--scheme",
    type=click.Choice([s.value for s in Scheme], case_sensitive=False),
    default=Scheme.FG.value,
    show_default=True,
    help="Trial workload selection scheme",
)
@click.option("--trial-days", type=int, required=True, help="Trial length k")
@click.option("--vms", type=int, default=1, show_default=True, help="Trial VMs (EQ only)")
@click.option("--capacity", type=float, help="Capacity, overrides the CSV header")
@click.option(
    "--out",
    "output_file",
    type=click.Path(path_type=Path),
    required=True,
    help="Plan JSON to write",
)
@click.option("-v", "--verbose", count=True, help=VERBOSE_HELP)
@click.option("-f", "--force", is_flag=True, help="Overwrite output file if it exists")
def plan(
    workload_file: Path,
    scheme: str,
    trial_days: int,
    vms: int,
    capacity: float | None,
    output_file: Path,
    verbose: int,
    force: bool,
) -> None:
    """Select trial workloads from a long-term workload.

    \b
    Examples:

        \b
        # Frequency-based plan for a 30 day trial
        iaas-signature-selection-tool plan --workload demand.csv \\
            --scheme FG --trial-days 30 --out plan.json

        \b
        # Equivalence partitioning over 3 VMs
        iaas-signature-selection-tool plan --workload demand.csv \\
            --scheme EQ --trial-days 30 --vms 3 --out plan-eq.json

    \b
    File formats:
        Workload CSV (input):
          optional "# capacity=<float>" header, then t,demand rows with
          consecutive integer timestamps
        Plan JSON (output):
          {"scheme", "trial_length", "vm_count",
           "entries": [{"trial_slot", "demand", "source_timestamp", "vm"}]}
    """
    _setup(verbose)
    _check_output(output_file, force)

    try:
        workload = ingest_workload_csv(workload_file, capacity=capacity)
        trial_plan = plan_trial(workload, trial_days, Scheme(scheme.upper()), vms)
        write_plan(trial_plan, output_file)
    except (SelectionError, OSError) as e:
        _fail("planning trial", e)

    click.echo(
        f"✓ Successfully wrote {trial_plan.scheme.value} plan "
        f"({len(trial_plan.entries)} entries) to {output_file}"
    )


@click.command(name="discover")
@click.option(
    "--plan",
    "plan_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Trial plan JSON (overrides the plan embedded in the experience)",
)
@click.option(
    "--experience",
    "experience_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    required=True,
    help="Trial experience JSON (observed streams over the trial window)",
)
@click.option(
    "--signature",
    "signature_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Provider signature JSON (required for SPD)",
)
@click.option(
    "--workload",
    "workload_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    required=True,
    help="Long-term workload CSV (t,demand) to predict for",
)
@click.option(
    "--method",
    type=click.Choice(["spd", "lpd"], case_sensitive=False),
    default="spd",
    show_default=True,
    help="spd scales by the signature, lpd repeats the trial as observed",
)
@click.option("--capacity", type=float, help="Capacity, overrides the CSV header")
@click.option(
    "--wrap/--no-wrap",
    default=True,
    show_default=True,
    help="Wrap horizons longer than the signature period",
)
@click.option(
    "--out",
    "output_file",
    type=click.Path(path_type=Path),
    required=True,
    help="Prediction JSON to write",
)
@click.option("-v", "--verbose", count=True, help=VERBOSE_HELP)
@click.option("-f", "--force", is_flag=True, help="Overwrite output file if it exists")
def discover_command(
    plan_file: Path | None,
    experience_file: Path,
    signature_file: Path | None,
    workload_file: Path,
    method: str,
    capacity: float | None,
    wrap: bool,
    output_file: Path,
    verbose: int,
    force: bool,
) -> None:
    """Predict long-term performance from a trial experience.

    \b
    Examples:

        \b
        # Signature-based discovery
        iaas-signature-selection-tool discover --experience trial.json \\
            --signature p1-signature.json --workload demand.csv --out p1-spd.json

        \b
        # Baseline without signature
        iaas-signature-selection-tool discover --experience trial.json \\
            --workload demand.csv --method lpd --out p1-lpd.json

    \b
    File formats:
        Experience JSON (input):
          {"provider_id", "trial_window": [first, last], "plan": {...},
           "streams": [{"start_index", "attributes"}]}  one stream per trial VM
        Plan JSON (input, --plan): as written by the plan command
        Signature JSON (input, --signature): as written by the signature command
        Workload CSV (input): "# capacity=<float>" header, then t,demand rows
        Prediction JSON (output):
          {"provider_id", "method", "predicted": {"start_index", "attributes"},
           "matched_slot": [...]}
    """
    _setup(verbose)
    _check_output(output_file, force)

    try:
        trial_plan = read_plan(plan_file) if plan_file is not None else None
        experience = read_experience(experience_file, trial_plan)
        sig = read_signature(signature_file) if signature_file is not None else None
        workload = ingest_workload_csv(workload_file, capacity=capacity)
        prediction = discover(Method(method.upper()), workload, experience, sig, wrap)
        write_prediction(prediction, output_file)
    except (SelectionError, OSError) as e:
        _fail("discovering performance", e)

    click.echo(
        f"✓ Successfully wrote {prediction.method.value} prediction of "
        f"{prediction.provider_id} to {output_file}"
    )


def _parse_weights(items: tuple[str, ...]) -> dict[str, float] | None:
    if not items:
        return None
    weights: dict[str, float] = {}
    for item in items:
        name, sep, value = item.partition("=")
        try:
            if not sep:
                raise ValueError(item)
            weights[name.strip()] = float(value)
        except ValueError as e:
            raise click.BadParameter(f"expected ATTRIBUTE=WEIGHT, got '{item}'") from e
    return weights


@click.command()
@click.option(
    "--request",
    "request_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    required=True,
    help="Consumer request JSON (workload and requested QoS)",
)
@click.option(
    "--predictions",
    multiple=True,
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Prediction JSON file (repeat per provider)",
)
@click.option("--weight", "weight_items", multiple=True, help="Attribute weight ATTRIBUTE=WEIGHT")
@click.option(
    "--out",
    "output_file",
    type=click.Path(path_type=Path),
    required=True,
    help="Ranking JSON to write",
)
@click.option("-v", "--verbose", count=True, help=VERBOSE_HELP)
@click.option("-f", "--force", is_flag=True, help="Overwrite output file if it exists")
def rank(
    request_file: Path,
    predictions: tuple[Path, ...],
    weight_items: tuple[str, ...],
    output_file: Path,
    verbose: int,
    force: bool,
) -> None:
    """Rank providers by the distance of their predictions to the request.

    \b
    Examples:

        \b
        iaas-signature-selection-tool rank --request request.json \\
            --predictions p1-spd.json --predictions p2-spd.json --out ranking.json

    \b
    File formats:
        Request JSON (input):
          {"capacity", "start_index", "demands": [...],
           "required_qos": {"attributes": {...}}}
        Prediction JSON (input): as written by the discover command; all
        predictions must use the same method
        Ranking JSON (output):
          {"method", "order": [...], "scores": {...}, "constant_series": {...}}
          lower scores are better, ties are broken by provider id
    """
    _setup(verbose)
    _check_output(output_file, force)
    weights = _parse_weights(weight_items)

    try:
        request = read_request(request_file)
        loaded = [read_prediction(path) for path in predictions]
        ranking = rank_providers(request, loaded, weights)
        write_ranking(ranking, output_file)
    except (SelectionError, OSError) as e:
        _fail("ranking providers", e)

    for position, pid in enumerate(ranking.order, start=1):
        click.echo(f"  {position}. {pid} ({ranking.scores[pid]:.4f})")
    click.echo(f"✓ Successfully wrote {ranking.method.value} ranking to {output_file}")


def _summary(report: ExperimentReport) -> None:
    for scheme in report.schemes:
        spd = [c.spd_nrmse for c in report.cells if c.scheme is scheme and c.spd_nrmse is not None]
        lpd = [c.lpd_nrmse for c in report.cells if c.scheme is scheme and c.lpd_nrmse is not None]
        if not spd:
            click.echo(f"  {scheme.value}: no provider passed the confidence check")
            continue
        click.echo(
            f"  {scheme.value}: mean NRMSE SPD {np.mean(spd):.4f}, LPD {np.mean(lpd):.4f} "
            f"({len(spd)}/{len(report.provider_ids)} providers)"
        )
    for method, tau in report.kendall_tau.items():
        shown = "n/a" if tau is None else f"{tau:.3f}"
        click.echo(f"  Kendall tau {method.value} vs EXPECTED: {shown}")


@click.command()
@click.option(
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Experiment config JSON",
)
@click.option(
    "--out-dir",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Directory for report.json and the CSV tables",
)
@click.option("--seed", type=int, help="Random seed (overrides the config)")
@click.option("--workers", type=int, help="Parallel worker threads (overrides the config)")
@click.option("--threshold", type=float, help="Confidence threshold (overrides the config)")
@click.option(
    "--workload",
    "workload_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Consumer workload CSV instead of the synthetic Zipf workload",
)
@click.option(
    "--expand",
    is_flag=True,
    help="Tile (or cut) the --workload trace cyclically to horizon_days",
)
@click.option(
    "--profile",
    "profile_files",
    multiple=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Provider profile JSON (repeat per provider) instead of synthetic providers",
)
@click.option("-v", "--verbose", count=True, help=VERBOSE_HELP)
@click.option("-f", "--force", is_flag=True, help="Overwrite existing report files")
def experiment(
    config_file: Path | None,
    out_dir: Path,
    seed: int | None,
    workers: int | None,
    threshold: float | None,
    workload_file: Path | None,
    expand: bool,
    profile_files: tuple[Path, ...],
    verbose: int,
    force: bool,
) -> None:
    """Run the provider x scheme experiment and write the report bundle.

    Writes report.json, rankings.csv, nrmse_grid.csv and traces.csv into
    OUT_DIR. The seed is echoed so a run can be reproduced exactly.

    \b
    Examples:

        \b
        # Default setup: 7 providers, 4 schemes, 360 days
        iaas-signature-selection-tool experiment --out-dir results/

        \b
        # Another seed on 4 worker threads
        iaas-signature-selection-tool experiment --config exp.json \\
            --seed 7 --workers 4 --out-dir results-7/

        \b
        # Own workload trace tiled to the horizon, own provider profiles
        iaas-signature-selection-tool experiment --workload demand.csv --expand \\
            --profile own.json --profile other.json --out-dir results-own/

    \b
    File formats:
        Config JSON (input): ExperimentConfig fields, unknown keys are rejected
        Workload CSV (input): "# capacity=<float>" header, then t,demand rows;
          without --expand it must cover exactly horizon_days
        Profile JSON (input):
          {"schema": 1, "provider_id", "base_perf": {"LOW", "MEDIUM", "HIGH"},
           "seasonal": {"attributes"}, "noise_std", "rng_seed", "public"}
        Output files in OUT_DIR:
          report.json      seed, config, cells, rankings and Kendall tau
          rankings.csv     method,rank_1,...,rank_n,kendall_tau
          nrmse_grid.csv   provider,FG_spd,FG_lpd,... (empty when discarded)
          traces.csv       provider,scheme,t,actual_<attr>,spd_<attr>,lpd_<attr>
    """
    _setup(verbose)
    _check_output(out_dir / "report.json", force)

    try:
        config = load_experiment_config(config_file).with_overrides(
            seed=seed, workers=workers, confidence_threshold=threshold
        )
        logger.debug("Effective config: %s", config.to_dict())
        if workload_file is None:
            request, profiles = synthetic_world(config)
        else:
            workload = ingest_workload_csv(
                workload_file,
                capacity=config.scenario.capacity,
                expand_to=config.horizon_days if expand else None,
                samples_per_day=config.samples_per_day,
            )
            if len(workload) != config.horizon_days:
                raise HorizonMismatch(
                    f"{workload_file}: {len(workload)} days of workload, horizon_days is "
                    f"{config.horizon_days} (use --expand to tile the trace)"
                )
            rng = np.random.default_rng([config.seed, 104729])
            request = consumer_request(workload, config.scenario, rng)
            profiles = synthetic_providers(config)
        if profile_files:
            profiles = [read_profile(path) for path in profile_files]
        report = run_experiment(config, request, profiles)
        written = write_report_bundle(report, out_dir)
    except (SelectionError, OSError) as e:
        _fail("running experiment", e)

    click.echo(f"Seed: {config.seed}")
    _summary(report)
    for path in written:
        click.echo(f"✓ Wrote {path}")


main.add_command(completion_command)
main.add_command(signature)
main.add_command(plan)
main.add_command(discover_command)
main.add_command(rank)
main.add_command(experiment)


if __name__ == "__main__":
    main()
