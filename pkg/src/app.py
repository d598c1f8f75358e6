"""Command-line entry point for the smart-home attack analytics workflows."""
from __future__ import annotations

import functools
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import click
from pydantic import ValidationError

from . import __version__
from .core_model import (
    BudgetExceeded,
    ConfigError,
    HomeFdiError,
    InfeasibleSchedule,
    SensorTrace,
    TraceFormatError,
)
from .data_loader import (
    iter_trace_paths,
    load_bench_config,
    load_home,
    load_model,
    load_sweep_config,
    load_synth_config,
    load_trace,
    report_path,
    resolve_relative,
    save_model,
    write_json,
    write_report,
    write_trace,
)
from .schemas import AccessConfig, SynthConfigModel
from .services.adm_service import ALGORITHMS, detect, sweep_hyperparameters, train
from .services.attack_service import attack_cost, realtime_replay, verify_stealth
from .services.controller_service import simulate
from .services.evaluation_service import (
    ADM_EVAL_COLUMNS,
    BENCH_COLUMNS,
    IMPACT_COLUMNS,
    PROGRESSIVE_COLUMNS,
    adm_evaluation,
    impact_frame,
    impact_sweep,
    naive_attack,
    progressive_evaluation,
    scalability_bench,
    split_attack_days,
)
from .services.scheduling_service import (
    DEFAULT_NODE_BUDGET,
    DEFAULT_WINDOW,
    ScheduleContext,
    explain_schedule,
    greedy_schedule,
    windowed_schedule,
)
from .services.synthesis_service import synth_trace

logger = logging.getLogger(__name__)

ENV_PREFIX = "HOMEFDI"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
EXIT_UNSTEALTHY = 1
EXIT_CONFIG = 2
EXIT_SEARCH = 3
EXIT_IO = 4
DEFAULT_SWEEP_GRID = {
    "dbscan": {"eps": [1.0, 2.0, 3.0, 5.0, 8.0], "min_pts": [5, 10, 20, 30]},
    "kmeans": {"k": [5, 10, 20, 29]},
}


class UnstealthyAttack(HomeFdiError):
    """The attacked trace broke at least one stealth constraint."""


def _classify(exc: BaseException) -> tuple[int, str]:
    if isinstance(exc, (ConfigError, ValidationError, TraceFormatError)):
        return EXIT_CONFIG, "config"
    if isinstance(exc, (InfeasibleSchedule, BudgetExceeded)):
        return EXIT_SEARCH, "search"
    if isinstance(exc, OSError):
        return EXIT_IO, "io"
    if isinstance(exc, UnstealthyAttack):
        return EXIT_UNSTEALTHY, "unstealthy"
    return 1, "runtime"


def _one_line(text: str) -> str:
    return " ".join(str(text).split())


def workflow(name: str) -> Callable[[Callable[..., dict[str, Any]]], Callable[..., None]]:
    """Run a subcommand body, map failures to exit codes and always write the manifest.

    The body returns the manifest entries it wants recorded (resolved config paths and
    outputs). The first stderr line of a failure is ``error=<kind> detail=<one line>``.
    """

    def decorate(body: Callable[..., dict[str, Any]]) -> Callable[..., None]:
        @functools.wraps(body)
        @click.pass_context
        def command(ctx: click.Context, **options: Any) -> None:
            settings = ctx.obj
            out = Path(options["out"])
            started = time.perf_counter()
            manifest: dict[str, Any] = {
                "subcommand": name,
                "options": {
                    key: str(value)
                    for key, value in options.items()
                    if value is not None and key != "out" and isinstance(value, (str, Path, int, float, bool))
                },
                "seed": settings["seed"],
                "out": str(out),
                "version": __version__,
            }
            code = 0
            try:
                manifest.update(body(settings, **options) or {})
            except Exception as exc:  # noqa: BLE001 - every failure becomes an exit code
                code, kind = _classify(exc)
                click.echo(f"error={kind} detail={_one_line(exc)}", err=True)
                if code == 1 and kind == "runtime":
                    logger.exception("Unexpected failure in %s", name)
                manifest["error"] = {"kind": kind, "detail": _one_line(exc)}
            manifest["exit_code"] = code
            manifest["wall_clock_s"] = round(time.perf_counter() - started, 3)
            try:
                write_json(manifest, out / "manifest.json")
            except OSError as exc:
                if code == 0:
                    click.echo(f"error=io detail={_one_line(exc)}", err=True)
                    code = EXIT_IO
            ctx.exit(code)

        return command

    return decorate


def _parse_ints(text: Optional[str]) -> Optional[list[int]]:
    if text is None:
        return None
    values: list[int] = []
    for part in filter(None, (piece.strip() for piece in text.split(","))):
        if "-" in part:
            low, high = (int(value) for value in part.split("-", 1))
            values.extend(range(low, high + 1))
        else:
            values.append(int(part))
    return values


def _parse_ranges(text: Optional[str]) -> Optional[list[tuple[int, int]]]:
    if text is None:
        return None
    ranges = []
    for part in filter(None, (piece.strip() for piece in text.split(","))):
        low, high = (int(value) for value in part.split(":", 1))
        ranges.append((low, high))
    return ranges


def _access_config(options: dict[str, Any]) -> AccessConfig:
    try:
        return AccessConfig(
            name=options.get("access_name") or "full",
            zones=_parse_ints(options.get("access_zones")),
            slots=_parse_ranges(options.get("access_slots")),
            occupant_tags=_parse_ints(options.get("access_occupants")),
            appliances=_parse_ints(options.get("access_appliances")),
        )
    except ValueError as exc:
        raise ConfigError(f"Malformed access option: {exc}", location="access") from exc


def _training_days(paths: Sequence[str], home) -> list[SensorTrace]:
    days: list[SensorTrace] = []
    for path in iter_trace_paths(paths):
        days.extend(load_trace(path, home).split_days(home.slots_per_day))
    if not days:
        raise ConfigError("No training traces were found.", location="trace")
    return days


def _seed(settings: dict[str, Any], fallback: int) -> int:
    return fallback if settings["seed"] is None else int(settings["seed"])


def _synth_days(home, synth: SynthConfigModel, days: int, seed: int) -> list[SensorTrace]:
    return synth_trace(home, synth, days, seed=seed).split_days(home.slots_per_day)


@click.group(context_settings={"auto_envvar_prefix": ENV_PREFIX, "help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="homefdi")
@click.option(
    "--seed",
    type=int,
    default=None,
    help="Seed threaded to every random step; overrides the seed of any config file.",
)
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["csv", "json"]),
    default="csv",
    show_default=True,
    envvar=f"{ENV_PREFIX}_FORMAT",
)
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True, help="Worker processes.")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default="WARNING",
    show_default=True,
)
@click.pass_context
def cli(ctx: click.Context, seed: Optional[int], fmt: str, jobs: int, log_level: str) -> None:
    """Simulate a demand-controlled HVAC home, train its anomaly detector and attack it."""

    logging.basicConfig(level=log_level.upper(), format=LOG_FORMAT, stream=sys.stderr, force=True)
    ctx.obj = {"seed": seed, "fmt": fmt, "jobs": jobs}


out_option = click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory.")
home_option = click.option("--home", type=click.Path(dir_okay=False), required=True, help="Home config JSON.")


@cli.command("simulate")
@home_option
@click.option("--trace", type=click.Path(dir_okay=False), required=True)
@out_option
@workflow("simulate")
def cmd_simulate(settings: dict[str, Any], home: str, trace: str, out: str) -> dict[str, Any]:
    """Run the controller over a trace and bill it."""

    home_model = load_home(home)
    sensor_trace = load_trace(trace, home_model)
    log = simulate(sensor_trace, home_model)
    fmt = settings["fmt"]
    log_path = write_report(log.to_frame(start_slot=sensor_trace.start_slot), report_path(out, "control_log", fmt), fmt)
    summary = {"total_usd": round(log.total_cost, 6), "slots": log.n_slots}
    write_json(summary, Path(out) / "summary.json")
    click.echo(f"total_usd={summary['total_usd']:.6f} slots={summary['slots']}")
    return {"outputs": [str(log_path)], **summary}


@cli.command("synth")
@home_option
@click.option("--synth-config", type=click.Path(dir_okay=False), required=True)
@click.option("--days", type=click.IntRange(min=1), default=1, show_default=True)
@out_option
@workflow("synth")
def cmd_synth(settings: dict[str, Any], home: str, synth_config: str, days: int, out: str) -> dict[str, Any]:
    """Generate a seeded synthetic trace."""

    home_model = load_home(home)
    config = load_synth_config(synth_config)
    seed = _seed(settings, config.seed)
    trace = synth_trace(home_model, config, days, seed=seed)
    path = write_trace(trace, home_model, Path(out) / "trace.csv")
    click.echo(f"slots={trace.n_slots} path={path}")
    return {"outputs": [str(path)], "slots": trace.n_slots, "seed": seed}


@cli.command("train-adm")
@home_option
@click.option("--trace", "traces", multiple=True, required=True, help="Trace CSV or directory; repeatable.")
@click.option("--algorithm", type=click.Choice(ALGORITHMS), default="dbscan", show_default=True)
@click.option("--eps", type=float, default=None)
@click.option("--min-pts", type=int, default=None)
@click.option("--k", type=int, default=None)
@click.option("--sweep", is_flag=True, help="Grid-search hyperparameters and rank them by DBI/SC/CHI.")
@out_option
@workflow("train-adm")
def cmd_train_adm(
    settings: dict[str, Any],
    home: str,
    traces: tuple[str, ...],
    algorithm: str,
    eps: Optional[float],
    min_pts: Optional[int],
    k: Optional[int],
    sweep: bool,
    out: str,
) -> dict[str, Any]:
    """Train the anomaly detector, optionally after a hyperparameter sweep."""

    home_model = load_home(home)
    days = _training_days(traces, home_model)
    fmt = settings["fmt"]
    outputs = []
    params: dict[str, float] = {}
    if algorithm == "dbscan":
        params.update({key: value for key, value in (("eps", eps), ("min_pts", min_pts)) if value is not None})
    else:
        params.update({"seed": _seed(settings, 0)})
        if k is not None:
            params["k"] = k
    if sweep:
        grid = dict(DEFAULT_SWEEP_GRID[algorithm])
        if algorithm == "kmeans":
            grid["seed"] = [_seed(settings, 0)]
        ranking = sweep_hyperparameters(days, algorithm, grid, slots_per_day=home_model.slots_per_day)
        if not ranking.empty:
            unscored = int(ranking[["dbi", "sc", "chi"]].isna().any(axis=1).sum())
            if unscored:
                logger.warning("Dropping %d grid points with undefined cluster scores.", unscored)
            ranking = ranking.dropna(subset=["dbi", "sc", "chi"]).reset_index(drop=True)
        outputs.append(str(write_report(ranking, report_path(out, "sweep", fmt), fmt)))
        if not ranking.empty:
            best = ranking.iloc[0]
            params.update({name: best[name] for name in grid})
            params = {key: (int(value) if key in {"min_pts", "k", "seed"} else float(value)) for key, value in params.items()}
            logger.info("Best hyperparameters: %s", params)
    model = train(days, algorithm, params, slots_per_day=home_model.slots_per_day)
    outputs.append(str(save_model(model, Path(out) / "model.json")))
    n_clusters = sum(len(hulls) for hulls in model.clusters.values())
    click.echo(f"algorithm={algorithm} days={len(days)} clusters={n_clusters}")
    return {"outputs": outputs, "hyperparameters": dict(model.hyperparameters)}


@cli.command("detect")
@home_option
@click.option("--trace", type=click.Path(dir_okay=False), required=True)
@click.option("--model", type=click.Path(dir_okay=False), required=True)
@out_option
@workflow("detect")
def cmd_detect(settings: dict[str, Any], home: str, trace: str, model: str, out: str) -> dict[str, Any]:
    """Report every stay that falls outside the trained clusters."""

    home_model = load_home(home)
    result = detect(load_trace(trace, home_model), load_model(model))
    fmt = settings["fmt"]
    path = write_report(result.to_frame(), report_path(out, "alarms", fmt), fmt)
    click.echo(f"alarms={result.alarm_count} stays={len(result.events)}")
    return {"outputs": [str(path)], "alarms": result.alarm_count}


@cli.command("attack")
@home_option
@click.option("--trace", type=click.Path(dir_okay=False), required=True)
@click.option("--model", type=click.Path(dir_okay=False), required=True)
@click.option("--strategy", type=click.Choice(["naive", "greedy", "windowed"]), default="windowed", show_default=True)
@click.option("--window", type=click.IntRange(min=1), default=DEFAULT_WINDOW, show_default=True)
@click.option("--trigger/--no-trigger", default=False, show_default=True)
@click.option("--node-budget", type=click.IntRange(min=1), default=DEFAULT_NODE_BUDGET, show_default=True)
@click.option("--strict-budget", is_flag=True)
@click.option("--access-name", default=None)
@click.option("--access-zones", default=None, help="Comma-separated zone ids or ranges, e.g. 0-2,4.")
@click.option("--access-slots", default=None, help="Half-open slot-of-day ranges, e.g. 0:600,900:1440.")
@click.option("--access-occupants", default=None)
@click.option("--access-appliances", default=None)
@click.option("--explain", is_flag=True, help="Also write the binding constraint per slot and occupant.")
@out_option
@workflow("attack")
def cmd_attack(settings: dict[str, Any], **options: Any) -> dict[str, Any]:
    """Synthesize an attack on a trace and check it against the detector."""

    home_model = load_home(options["home"])
    trace = load_trace(options["trace"], home_model)
    model = load_model(options["model"])
    access = _access_config(options).to_profile(home_model, trace.n_slots, start_slot=trace.start_slot)
    strategy = options["strategy"]
    out = Path(options["out"])
    fmt = settings["fmt"]

    if strategy == "naive":
        attacked, schedule = naive_attack(trace, home_model, access)
    elif strategy == "greedy":
        schedule = greedy_schedule(trace, home_model, model, access, trigger=options["trigger"])
        attacked, _ = realtime_replay(schedule, schedule.triggers, trace, home_model, access)
    else:
        schedule = windowed_schedule(
            trace,
            home_model,
            model,
            access,
            options["window"],
            trigger=options["trigger"],
            node_budget=options["node_budget"],
            strict_budget=options["strict_budget"],
        )
        attacked, _ = realtime_replay(schedule, schedule.triggers, trace, home_model, access)

    benign = attack_cost(trace, home_model)
    total = attack_cost(attacked, home_model)
    verdict = verify_stealth(trace, attacked, simulate(attacked, home_model), model, home_model, access)
    outputs = [
        str(write_report(schedule.to_frame(start_slot=trace.start_slot), report_path(out, "schedule", fmt), fmt)),
        str(write_trace(attacked, home_model, out / "attacked_trace.csv")),
    ]
    if options["explain"] and strategy != "naive":
        context = ScheduleContext(trace, home_model, model, access, trigger=options["trigger"])
        outputs.append(str(write_report(explain_schedule(schedule, context), report_path(out, "explain", fmt), fmt)))
    note = "empty access profile: attack equals benign" if access.is_empty else None
    summary = {
        "strategy": strategy,
        "source": schedule.source,
        "benign_usd": round(benign, 6),
        "attacked_usd": round(total, 6),
        "uplift_usd": round(total - benign, 6),
        "activations": len(schedule.triggers or ()),
        "deadlocks": [deadlock.as_dict() for deadlock in schedule.deadlocks],
        "verdict": verdict.as_dict(),
        "note": note,
    }
    outputs.append(str(write_json(summary, out / "attack.json")))
    click.echo(
        f"strategy={strategy} benign_usd={benign:.6f} attacked_usd={total:.6f} stealthy={str(verdict.stealthy).lower()}"
    )
    if note:
        click.echo(f"note={note}")
    if not verdict.stealthy:
        raise UnstealthyAttack(f"Stealth constraints violated: {', '.join(verdict.violated)}.")
    return {"outputs": outputs}


@cli.command("impact")
@click.option("--sweep-config", type=click.Path(dir_okay=False), required=True)
@out_option
@workflow("impact")
def cmd_impact(settings: dict[str, Any], sweep_config: str, out: str) -> dict[str, Any]:
    """Cross strategies, detectors, knowledge, triggering and access profiles."""

    config = load_sweep_config(sweep_config)
    home_model = load_home(resolve_relative(sweep_config, config.home))
    synth = load_synth_config(resolve_relative(sweep_config, config.synth))
    seed = _seed(settings, config.seed)
    days = _synth_days(home_model, synth, config.days, seed)
    reports = impact_sweep(home_model, days, config, jobs=settings["jobs"])
    fmt = settings["fmt"]
    path = write_report(impact_frame(reports), report_path(out, "impact", fmt), fmt, columns=IMPACT_COLUMNS)
    click.echo(f"rows={len(reports)} path={path}")
    return {"outputs": [str(path)], "rows": len(reports), "seed": seed}


@cli.command("evaluate-adm")
@click.option("--sweep-config", type=click.Path(dir_okay=False), required=True)
@click.option("--progressive/--no-progressive", default=True, show_default=True, help="Also score growing training prefixes.")
@out_option
@workflow("evaluate-adm")
def cmd_evaluate_adm(settings: dict[str, Any], sweep_config: str, progressive: bool, out: str) -> dict[str, Any]:
    """Score each detector on benign days and their naive-attack twins."""

    config = load_sweep_config(sweep_config)
    home_model = load_home(resolve_relative(sweep_config, config.home))
    synth = load_synth_config(resolve_relative(sweep_config, config.synth))
    seed = _seed(settings, config.seed)
    train_days, test_days = split_attack_days(_synth_days(home_model, synth, config.days, seed), config.attack_days)
    fmt = settings["fmt"]
    frame = adm_evaluation(home_model, train_days, test_days, config.adm, config.knowledge)
    outputs = [str(write_report(frame, report_path(out, "adm_eval", fmt), fmt, columns=ADM_EVAL_COLUMNS))]
    if progressive:
        prefixes = progressive_evaluation(home_model, train_days, test_days, config.adm[0])
        outputs.append(str(write_report(prefixes, report_path(out, "progressive", fmt), fmt, columns=PROGRESSIVE_COLUMNS)))
    click.echo(f"rows={len(frame)} best_f1={frame['f1'].max():.3f}")
    return {"outputs": outputs, "rows": len(frame), "seed": seed}


@cli.command("bench")
@click.option("--bench-config", type=click.Path(dir_okay=False), required=True)
@out_option
@workflow("bench")
def cmd_bench(settings: dict[str, Any], bench_config: str, out: str) -> dict[str, Any]:
    """Time the windowed search over window lengths and zone counts."""

    config = load_bench_config(bench_config)
    home_model = load_home(resolve_relative(bench_config, config.home))
    synth = load_synth_config(resolve_relative(bench_config, config.synth))
    seed = _seed(settings, config.seed)
    days = _synth_days(home_model, synth, config.days, seed)
    points = scalability_bench(home_model, days, config)
    fmt = settings["fmt"]
    path = write_report(points, report_path(out, "bench", fmt), fmt, columns=BENCH_COLUMNS)
    click.echo(f"points={len(points)} censored={sum(point.censored for point in points)}")
    return {"outputs": [str(path)], "points": len(points), "seed": seed}


def main(argv: Optional[Sequence[str]] = None) -> None:
    cli.main(args=list(argv) if argv is not None else None, prog_name="homefdi")


if __name__ == "__main__":  # pragma: no cover - module execution entry point
    main()
