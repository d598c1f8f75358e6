"""Tests for the seeded trace generator."""
from __future__ import annotations

import numpy as np
import pytest

from src.core_model import ConfigError, validate_trace
from src.schemas import SynthConfigModel
from src.services.controller_service import max_residual, simulate
from src.services.synthesis_service import synth_trace


def _config(**overrides) -> SynthConfigModel:
    payload = {
        "seed": 3,
        "routines": [
            {
                "occupant": 0,
                "start_zone": 1,
                "bands": [
                    {
                        "start": 0,
                        "end": 1440,
                        "transitions": {"0": {"1": 1.0}, "1": {"2": 2.0, "0": 1.0}, "2": {"1": 1.0}},
                    }
                ],
            }
        ],
        "zone_dwell": {"0": {"range": [20, 40]}, "1": {"range": [30, 90]}, "2": {"range": [10, 30]}},
        "activity_weights": {"1": {"1": 1.0}, "2": {"1": 1.0}},
        "activity_appliances": {"1": [1]},
        "always_on": [0],
    }
    payload.update(overrides)
    return SynthConfigModel.model_validate(payload)


def test_same_seed_gives_identical_traces(tiny_home) -> None:
    first = synth_trace(tiny_home, _config(), 1)
    second = synth_trace(tiny_home, _config(), 1)
    np.testing.assert_array_equal(first.occupant_zone, second.occupant_zone)
    np.testing.assert_array_equal(first.co2, second.co2)


def test_seed_argument_overrides_config(tiny_home) -> None:
    first = synth_trace(tiny_home, _config(), 1)
    other = synth_trace(tiny_home, _config(), 1, seed=99)
    assert not np.array_equal(first.occupant_zone, other.occupant_zone)


def test_trace_shapes_follow_the_home(tiny_home) -> None:
    trace = synth_trace(tiny_home, _config(), 2)
    assert trace.occupant_zone.shape == (2880, 1)
    assert trace.co2.shape == (2880, tiny_home.n_zones)
    assert trace.start_slot == 0
    assert validate_trace(trace, tiny_home) == []


def test_readings_follow_the_controller(tiny_home) -> None:
    trace = synth_trace(tiny_home, _config(), 1)
    assert max_residual(trace, simulate(trace, tiny_home), tiny_home) < 1e-6
    np.testing.assert_array_equal(trace.co2[:, 0], trace.outdoor_co2)


def test_activities_and_appliances_follow_the_routine(tiny_home) -> None:
    trace = synth_trace(tiny_home, _config(), 1)
    zones = trace.occupant_zone[:, 0]
    np.testing.assert_array_equal(trace.activity[:, 0], np.where(zones > 0, 1, 0))
    assert trace.appliance_on[:, 0].all()
    np.testing.assert_array_equal(trace.appliance_on[:, 1], zones == 2)
    assert set(np.unique(zones)) <= {0, 1, 2}


def test_outdoor_temperature_peaks_mid_afternoon(tiny_home) -> None:
    trace = synth_trace(tiny_home, _config(), 1)
    assert int(np.argmax(trace.outdoor_temp)) == 900


def test_unknown_zone_reference_is_rejected(tiny_home) -> None:
    config = _config(zone_dwell={}, always_on=[])
    bad = config.model_copy(update={"routines": [config.routines[0].model_copy(update={"start_zone": 9})]})
    with pytest.raises(ConfigError) as info:
        synth_trace(tiny_home, bad, 1)
    assert info.value.location == "routines[0].start_zone"


def test_routines_must_cover_every_occupant(two_occupant_home) -> None:
    with pytest.raises(ConfigError):
        synth_trace(two_occupant_home, _config(), 1)


def test_unknown_appliance_is_rejected(tiny_home) -> None:
    with pytest.raises(ConfigError):
        synth_trace(tiny_home, _config(always_on=[7]), 1)


def test_days_must_be_positive(tiny_home) -> None:
    with pytest.raises(ValueError):
        synth_trace(tiny_home, _config(), 0)
