"""Tests for config loading, trace CSV I/O, model files and reports."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.core_model import ConfigError, TraceFormatError
from src.data_loader import (
    DATA_DIR,
    EXAMPLE_HOME_PATH,
    EXAMPLE_SYNTH_PATH,
    iter_trace_paths,
    load_bench_config,
    load_home,
    load_json,
    load_model,
    load_sweep_config,
    load_synth_config,
    load_trace,
    read_report,
    save_model,
    trace_columns,
    trace_to_frame,
    write_json,
    write_report,
    write_trace,
)
from src.services.synthesis_service import synth_trace
from tests.conftest import rectangle_model


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def test_bundled_configs_load() -> None:
    home = load_home(EXAMPLE_HOME_PATH)
    assert home.n_zones == 5
    assert home.n_occupants == 2
    assert home.appliances[5].name == "Refrigerator"
    synth = load_synth_config(EXAMPLE_SYNTH_PATH)
    assert len(synth.routines) == home.n_occupants
    assert load_sweep_config(DATA_DIR / "sweeps" / "impact_sweep.json").days == 8
    assert load_bench_config(DATA_DIR / "bench" / "bench.json").windows == [2, 4, 6, 8]


def test_bundled_routine_synthesizes_a_valid_day() -> None:
    home = load_home(EXAMPLE_HOME_PATH)
    trace = synth_trace(home, load_synth_config(EXAMPLE_SYNTH_PATH), 1)
    assert trace.n_slots == home.slots_per_day
    assert trace.appliance_on[:, 5].all()


def test_json_syntax_errors_carry_line_and_column(tmp_path) -> None:
    path = _write(tmp_path / "home.json", '{\n  "zones": [,]\n}')
    with pytest.raises(ConfigError) as info:
        load_json(path)
    assert "line 2" in str(info.value)
    assert info.value.location == str(path)


def test_empty_config_file_is_rejected(tmp_path) -> None:
    with pytest.raises(ConfigError):
        load_json(_write(tmp_path / "empty.json", "  \n"))


def test_schema_errors_name_the_field(tmp_path) -> None:
    payload = json.loads(EXAMPLE_HOME_PATH.read_text(encoding="utf-8"))
    payload["zones"][1]["volume"] = "large"
    with pytest.raises(ConfigError) as info:
        load_home(_write(tmp_path / "home.json", json.dumps(payload)))
    assert "zones[1].volume" in info.value.location


def test_home_invariants_are_checked_after_parsing(tmp_path) -> None:
    payload = json.loads(EXAMPLE_HOME_PATH.read_text(encoding="utf-8"))
    payload["appliances"][0]["zone"] = 42
    with pytest.raises(ConfigError) as info:
        load_home(_write(tmp_path / "home.json", json.dumps(payload)))
    assert info.value.location.endswith("appliances[0].zone")


def test_trace_csv_keeps_documented_columns_and_values(tiny_home, tiny_trace, tmp_path) -> None:
    path = write_trace(tiny_trace, tiny_home, tmp_path / "trace.csv")
    header = path.read_text(encoding="utf-8").splitlines()[0].split(",")
    assert header == trace_columns(tiny_home)
    loaded = load_trace(path, tiny_home)
    np.testing.assert_array_equal(loaded.occupant_zone, tiny_trace.occupant_zone)
    np.testing.assert_array_equal(loaded.co2, tiny_trace.co2)
    np.testing.assert_array_equal(loaded.appliance_on, tiny_trace.appliance_on)


def test_trace_missing_column_is_rejected(tiny_home, tiny_trace, tmp_path) -> None:
    frame = trace_to_frame(tiny_trace, tiny_home).drop(columns=["temp_z1"])
    frame.to_csv(tmp_path / "trace.csv", index=False)
    with pytest.raises(TraceFormatError, match="temp_z1"):
        load_trace(tmp_path / "trace.csv", tiny_home)


def test_trace_gap_is_rejected(tiny_home, tiny_trace, tmp_path) -> None:
    frame = trace_to_frame(tiny_trace, tiny_home)
    frame[frame["slot"] != 4].to_csv(tmp_path / "trace.csv", index=False)
    with pytest.raises(TraceFormatError, match="slot 4"):
        load_trace(tmp_path / "trace.csv", tiny_home)


def test_trace_with_unknown_zone_is_rejected(tiny_home, tiny_trace, tmp_path) -> None:
    frame = trace_to_frame(tiny_trace, tiny_home)
    frame.loc[3, "zone_id"] = 9
    frame.to_csv(tmp_path / "trace.csv", index=False)
    with pytest.raises(TraceFormatError):
        load_trace(tmp_path / "trace.csv", tiny_home)


def test_empty_trace_file_is_rejected(tiny_home, tmp_path) -> None:
    with pytest.raises(TraceFormatError):
        load_trace(_write(tmp_path / "trace.csv", ""), tiny_home)


def test_model_file_round_trip(tiny_home, tmp_path) -> None:
    model = rectangle_model(tiny_home, 5, min_duration=1)
    loaded = load_model(save_model(model, tmp_path / "model.json"))
    np.testing.assert_array_equal(loaded.feasible_table(0, 2), model.feasible_table(0, 2))


def test_non_model_document_is_a_config_error(tmp_path) -> None:
    with pytest.raises(ConfigError):
        load_model(_write(tmp_path / "model.json", '{"clusters": 3}'))


def test_write_json_sorts_keys_and_converts_numpy(tmp_path) -> None:
    path = write_json({"b": np.int64(2), "a": np.array([1.5, 2.5]), "s": {3, 1}}, tmp_path / "x.json")
    assert json.loads(path.read_text(encoding="utf-8")) == {"a": [1.5, 2.5], "b": 2, "s": [1, 3]}
    assert path.read_text(encoding="utf-8").index('"a"') < path.read_text(encoding="utf-8").index('"b"')


def test_reports_round_cost_columns(tmp_path) -> None:
    rows = [{"name": "x", "cost_usd": 1.23456789, "count": 2}]
    csv_path = write_report(rows, tmp_path / "report.csv", "csv")
    assert read_report(csv_path)["cost_usd"].iloc[0] == pytest.approx(1.234568)
    payload = json.loads(write_report(rows, tmp_path / "report.json", "json").read_text(encoding="utf-8"))
    assert payload["columns"] == ["name", "cost_usd", "count"]
    assert payload["rows"][0]["cost_usd"] == pytest.approx(1.234568)


def test_empty_report_keeps_its_header(tmp_path) -> None:
    path = write_report([], tmp_path / "alarms.csv", columns=["occupant", "zone"])
    assert path.read_text(encoding="utf-8").strip() == "occupant,zone"


def test_reports_refuse_non_finite_values(tmp_path) -> None:
    with pytest.raises(ValueError):
        write_report(pd.DataFrame({"dbi": [np.nan]}), tmp_path / "sweep.csv")
    assert not (tmp_path / "sweep.csv").exists()


def test_unknown_report_format_is_rejected(tmp_path) -> None:
    with pytest.raises(ValueError):
        write_report([], tmp_path / "r.parquet", "parquet")


def test_writes_leave_no_temporary_files(tiny_home, tiny_trace, tmp_path) -> None:
    write_trace(tiny_trace, tiny_home, tmp_path / "out" / "trace.csv")
    assert [p.name for p in (tmp_path / "out").iterdir()] == ["trace.csv"]


def test_trace_directories_expand_to_sorted_csvs(tmp_path) -> None:
    for name in ("b.csv", "a.csv", "notes.txt"):
        _write(tmp_path / name, "")
    assert [p.name for p in iter_trace_paths([tmp_path])] == ["a.csv", "b.csv"]
