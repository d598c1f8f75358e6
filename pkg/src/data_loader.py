"""File I/O for home configs, traces, trained models and reports."""
from __future__ import annotations

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Type, TypeVar, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from .core_model import (
    ConfigError,
    HomeModel,
    SensorTrace,
    TraceFormatError,
    validate_home,
    validate_trace,
)
from .schemas import BenchConfig, HomeConfig, SweepConfig, SynthConfigModel
from .services.adm_service import AdmModel, model_from_dict

logger = logging.getLogger(__name__)

ROOT_DIR = Path(__file__).resolve().parent.parent
DATA_DIR = ROOT_DIR / "data"
EXAMPLE_HOME_PATH = DATA_DIR / "homes" / "house_a.json"
EXAMPLE_SYNTH_PATH = DATA_DIR / "synth" / "house_a_synth.json"

PathLike = Union[str, Path]
ModelT = TypeVar("ModelT", bound=BaseModel)

_KEY_COLUMNS = ("slot", "occupant_id", "zone_id", "activity_id")
COST_SUFFIX = "_usd"
COST_DECIMALS = 6
REPORT_FORMATS = ("csv", "json")


def trace_columns(home: HomeModel) -> list[str]:
    """Documented column order of a trace CSV for ``home``."""
    columns = list(_KEY_COLUMNS)
    columns.extend(f"appliance_{appliance.id}" for appliance in home.appliances)
    columns.extend(f"co2_z{zone.id}" for zone in home.zones)
    columns.extend(f"temp_z{zone.id}" for zone in home.zones)
    columns.extend(["outdoor_co2", "outdoor_temp"])
    return columns


def _format_location(loc: Sequence[Any]) -> str:
    parts: list[str] = []
    for item in loc:
        if isinstance(item, int):
            parts.append(f"[{item}]")
        else:
            parts.append(f".{item}" if parts else str(item))
    return "".join(parts)


def load_json(path: PathLike) -> Any:
    """Parse a JSON file, reporting syntax errors with their line and column.

    Raises:
        ConfigError: If the file is empty or not valid JSON.
        OSError: If the file cannot be read.
    """
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        raise ConfigError("File is empty.", location=str(path))
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{exc.msg} at line {exc.lineno}, column {exc.colno}.", location=str(path)) from exc


def parse_config(model: Type[ModelT], payload: Any, *, source: str = "config") -> ModelT:
    """Validate a parsed document, turning the first pydantic error into a ``ConfigError``."""
    try:
        return model.model_validate(payload)
    except ValidationError as exc:
        error = exc.errors()[0]
        location = _format_location(error.get("loc", ()))
        detail = f"{error.get('msg', 'invalid value')} ({exc.error_count()} error(s))"
        raise ConfigError(detail, location=f"{source}:{location}" if location else source) from exc


def home_from_config(config: HomeConfig, *, source: str = "home") -> HomeModel:
    home = config.to_home()
    violations = validate_home(home)
    if violations:
        first = violations[0]
        raise ConfigError(
            f"{first.message} ({len(violations)} violation(s))", location=f"{source}:{first.field}"
        )
    return home


def load_home(path: PathLike) -> HomeModel:
    """Load and validate a home configuration.

    Args:
        path: JSON home document, see ``docs/config.md``.

    Returns:
        A home for which ``validate_home`` reports nothing.

    Raises:
        ConfigError: On syntax errors, schema errors or home invariant violations.
    """
    config = parse_config(HomeConfig, load_json(path), source=str(path))
    home = home_from_config(config, source=str(path))
    logger.debug("Loaded home %s: %d zones, %d occupants", home.name, home.n_zones, home.n_occupants)
    return home


def load_synth_config(path: PathLike) -> SynthConfigModel:
    return parse_config(SynthConfigModel, load_json(path), source=str(path))


def load_sweep_config(path: PathLike) -> SweepConfig:
    return parse_config(SweepConfig, load_json(path), source=str(path))


def load_bench_config(path: PathLike) -> BenchConfig:
    return parse_config(BenchConfig, load_json(path), source=str(path))


def resolve_relative(base: PathLike, target: str) -> Path:
    """Resolve ``target`` against the directory of the config file that names it."""
    candidate = Path(target)
    if candidate.is_absolute() or candidate.exists():
        return candidate
    return Path(base).resolve().parent / candidate


def _atomic_write(path: PathLike, text: str) -> Path:
    """Write through a temporary file in the target directory and rename it into place."""
    destination = Path(path)
    destination.parent.mkdir(parents=True, exist_ok=True)
    handle, temporary = tempfile.mkstemp(prefix=f".{destination.name}.", dir=destination.parent)
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="\n") as stream:
            stream.write(text)
        os.replace(temporary, destination)
    except BaseException:
        if os.path.exists(temporary):
            os.unlink(temporary)
        raise
    return destination


def trace_to_frame(trace: SensorTrace, home: HomeModel) -> pd.DataFrame:
    """Long format: one row per (slot, occupant), per-slot readings repeated on each row."""
    n_slots, n_occupants = trace.occupant_zone.shape

    def repeat(values: np.ndarray) -> np.ndarray:
        return np.repeat(values, n_occupants, axis=0)

    data: dict[str, Any] = {
        "slot": repeat(np.arange(n_slots) + trace.start_slot),
        "occupant_id": np.tile(np.arange(n_occupants), n_slots),
        "zone_id": trace.occupant_zone.ravel(),
        "activity_id": trace.activity.ravel(),
    }
    for appliance in home.appliances:
        data[f"appliance_{appliance.id}"] = repeat(trace.appliance_on[:, appliance.id].astype(int))
    for zone in home.zones:
        data[f"co2_z{zone.id}"] = repeat(trace.co2[:, zone.id])
    for zone in home.zones:
        data[f"temp_z{zone.id}"] = repeat(trace.temp[:, zone.id])
    data["outdoor_co2"] = repeat(trace.outdoor_co2)
    data["outdoor_temp"] = repeat(trace.outdoor_temp)
    return pd.DataFrame(data, columns=trace_columns(home))


def write_trace(trace: SensorTrace, home: HomeModel, path: PathLike) -> Path:
    frame = trace_to_frame(trace, home)
    return _atomic_write(path, frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"))


def frame_to_trace(frame: pd.DataFrame, home: HomeModel) -> SensorTrace:
    """Rebuild a trace from its long CSV format.

    Raises:
        TraceFormatError: On missing columns, gaps, duplicate rows or ids unknown to ``home``.
    """
    expected = trace_columns(home)
    missing = [column for column in expected if column not in frame.columns]
    if missing:
        raise TraceFormatError(f"Trace is missing columns {missing}.")
    extra = [column for column in frame.columns if column not in expected]
    if extra:
        raise TraceFormatError(f"Trace has unknown columns {extra}.")
    if frame.empty:
        raise TraceFormatError("Trace has no rows.")

    frame = frame.sort_values(["slot", "occupant_id"], kind="stable").reset_index(drop=True)
    slots = frame["slot"].to_numpy(dtype=int)
    unique_slots = np.unique(slots)
    start = int(unique_slots[0])
    expected_slots = np.arange(start, int(unique_slots[-1]) + 1)
    if unique_slots.size != expected_slots.size:
        gap = int(np.setdiff1d(expected_slots, unique_slots)[0])
        raise TraceFormatError(f"Trace has a gap: slot {gap} is missing.")

    n_occupants = home.n_occupants
    occupants = frame["occupant_id"].to_numpy(dtype=int)
    if frame.shape[0] != unique_slots.size * n_occupants or not np.array_equal(
        occupants, np.tile(np.arange(n_occupants), unique_slots.size)
    ):
        for slot, ids in frame.groupby("slot", sort=True)["occupant_id"]:
            if sorted(ids.astype(int).tolist()) != list(range(n_occupants)):
                raise TraceFormatError(f"Slot {slot} does not list occupants 0..{n_occupants - 1} exactly once.")

    n_slots = unique_slots.size
    first_rows = frame.iloc[::n_occupants] if n_occupants else frame.drop_duplicates("slot")

    def per_slot(column: str) -> np.ndarray:
        return first_rows[column].to_numpy()

    appliance_on = np.column_stack(
        [per_slot(f"appliance_{appliance.id}") for appliance in home.appliances]
    ) if home.n_appliances else np.zeros((n_slots, 0))
    if np.any((appliance_on != 0) & (appliance_on != 1)):
        raise TraceFormatError("Appliance status columns must hold 0 or 1.")
    trace = SensorTrace.from_arrays(
        occupant_zone=frame["zone_id"].to_numpy(dtype=int).reshape(n_slots, n_occupants),
        activity=frame["activity_id"].to_numpy(dtype=int).reshape(n_slots, n_occupants),
        co2=np.column_stack([per_slot(f"co2_z{zone.id}") for zone in home.zones]).astype(float),
        temp=np.column_stack([per_slot(f"temp_z{zone.id}") for zone in home.zones]).astype(float),
        appliance_on=appliance_on.astype(bool),
        outdoor_temp=per_slot("outdoor_temp").astype(float),
        outdoor_co2=per_slot("outdoor_co2").astype(float),
        start_slot=start,
    )
    violations = validate_trace(trace, home)
    if violations:
        raise TraceFormatError(violations[0].message)
    return trace


def load_trace(path: PathLike, home: HomeModel) -> SensorTrace:
    """Load a trace CSV written in the documented column order."""
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError as exc:
        raise TraceFormatError(f"{path}: file is empty.") from exc
    except pd.errors.ParserError as exc:
        raise TraceFormatError(f"{path}: {exc}") from exc
    trace = frame_to_trace(frame, home)
    logger.debug("Loaded %s: %d slots from slot %d", path, trace.n_slots, trace.start_slot)
    return trace


def save_model(model: AdmModel, path: PathLike) -> Path:
    return write_json(model.as_dict(), path)


def load_model(path: PathLike) -> AdmModel:
    payload = load_json(path)
    try:
        return model_from_dict(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"Not a trained model document: {exc}", location=str(path)) from exc


def _to_builtin(value: Any) -> Any:
    if hasattr(value, "as_dict"):
        return _to_builtin(value.as_dict())
    if isinstance(value, Mapping):
        return {str(key): _to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [_to_builtin(item) for item in items]
    if isinstance(value, np.ndarray):
        return _to_builtin(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(payload: Any, path: PathLike) -> Path:
    text = json.dumps(_to_builtin(payload), indent=2, sort_keys=True, allow_nan=False)
    return _atomic_write(path, text + "\n")


def report_frame(report: Any, columns: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """Normalize a report (DataFrame, records or objects with ``as_dict``) into a frame."""
    if isinstance(report, pd.DataFrame):
        frame = report.copy()
    else:
        records = [_to_builtin(row) for row in report]
        frame = pd.DataFrame.from_records(records, columns=list(columns) if columns and not records else None)
    if columns is not None and not frame.empty:
        frame = frame[list(columns)]
    for column in frame.columns:
        if str(column).endswith(COST_SUFFIX):
            frame[column] = pd.to_numeric(frame[column]).round(COST_DECIMALS)
    return frame


def write_report(
    report: Any,
    path: PathLike,
    fmt: str = "csv",
    *,
    columns: Optional[Sequence[str]] = None,
) -> Path:
    """Write a tabular report atomically; an empty report keeps its header.

    Dollar columns (suffix ``_usd``) are rounded to six decimals.
    """
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"Unknown report format {fmt!r}; expected one of {REPORT_FORMATS}.")
    frame = report_frame(report, columns)
    numeric = frame.select_dtypes(include="number")
    if numeric.size and not np.isfinite(numeric.to_numpy(dtype=float)).all():
        raise ValueError("Reports must be finite-valued.")
    if fmt == "csv":
        text = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    else:
        payload = {"columns": [str(c) for c in frame.columns], "rows": frame.to_dict(orient="records")}
        text = json.dumps(_to_builtin(payload), indent=2, allow_nan=False) + "\n"
    logger.debug("Writing %d report rows to %s", len(frame), path)
    return _atomic_write(path, text)


def read_report(path: PathLike) -> pd.DataFrame:
    """Read a report written by ``write_report``; the format follows the file suffix."""
    path = Path(path)
    if path.suffix == ".json":
        payload = load_json(path)
        return pd.DataFrame.from_records(payload["rows"], columns=payload["columns"])
    return pd.read_csv(path)


def report_path(out_dir: PathLike, stem: str, fmt: str) -> Path:
    return Path(out_dir) / f"{stem}.{fmt}"


def iter_trace_paths(paths: Iterable[PathLike]) -> list[Path]:
    """Expand directories into their sorted ``*.csv`` files."""
    resolved: list[Path] = []
    for item in paths:
        item = Path(item)
        if item.is_dir():
            resolved.extend(sorted(item.glob("*.csv")))
        else:
            resolved.append(item)
    return resolved


__all__ = [
    "COST_DECIMALS",
    "DATA_DIR",
    "EXAMPLE_HOME_PATH",
    "EXAMPLE_SYNTH_PATH",
    "REPORT_FORMATS",
    "frame_to_trace",
    "home_from_config",
    "iter_trace_paths",
    "load_bench_config",
    "load_home",
    "load_json",
    "load_model",
    "load_sweep_config",
    "load_synth_config",
    "load_trace",
    "parse_config",
    "read_report",
    "report_frame",
    "report_path",
    "resolve_relative",
    "save_model",
    "trace_columns",
    "trace_to_frame",
    "write_json",
    "write_report",
    "write_trace",
]
