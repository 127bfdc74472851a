import pytest

from gridforge.config import (ConfigError, SweepSpec, apply_overrides, load, loads,
                              parse_override, parse_value)
from gridforge.scenarios import LOAD_STEP, MACHINE_TRIP, preset


@pytest.mark.parametrize("text, value", [
    ("1", 1), ("1.5", 1.5), ("1e-5", 1e-5), ("true", True), ("off", False), ("none", None),
    ("matching", "matching"), ("0.2, 0.3", (0.2, 0.3)), ("sm,gfc,sm", ("sm", "gfc", "sm")),
])
def test_parse_value(text, value):
    assert parse_value(text) == value


def test_overrides_reach_nested_fields():
    cfg = apply_overrides(preset("large-disturbance"), {
        "control.k_iv": "20", "integrator.dt": 2e-5, "machine.pss.enabled": "false",
        "scenario.t_end": "3", "mix": "gfc,gfc,gfc"})
    assert cfg.control.k_iv == 20.0
    assert cfg.integrator.dt == 2e-5
    assert cfg.machine.pss.enabled is False
    assert cfg.t_end == 3.0
    assert cfg.mix == ("gfc", "gfc", "gfc")


@pytest.mark.parametrize("key, value, fragment", [
    ("control.k_nope", "1", "control.k_nope"),
    ("t_end", "soon", "t_end"),
    ("control", "1", "control"),
    ("integrator.dt", "-1", "integrator.dt"),
    ("machine.pss.enabled", "3", "machine.pss.enabled"),
])
def test_bad_override_names_the_key(key, value, fragment):
    with pytest.raises(ConfigError, match=fragment.replace(".", r"\.")):
        apply_overrides(preset("large-disturbance"), {key: value})


def test_parse_override():
    assert parse_override("control.k_iv = 10") == ("control.k_iv", "10")
    with pytest.raises(ConfigError):
        parse_override("control.k_iv")


FILE = """
[scenario]
preset = sweep-9bus
strategy = vsm
t_end = 4

[control]
k_iv = 12   ; comment

[event.2]
time = 1.0
kind = machine-trip
bus = 1

[event.1]
time = 0.5
kind = load-step
bus = 7
dp = 0.4

[sweep]
dps = 0.2, 0.25
"""


def test_scenario_file():
    cfg, sweep = loads(FILE)
    assert cfg.name == "sweep-9bus" and cfg.strategy == "vsm"
    assert cfg.t_end == 4.0 and cfg.control.k_iv == 12.0
    assert [e.kind for e in cfg.events] == [LOAD_STEP, MACHINE_TRIP]
    assert cfg.events[0].dp == 0.4
    assert list(sweep.values()) == [0.2, 0.25]


def test_default_sweep_grid_has_100_points():
    assert SweepSpec().values().size == 100


@pytest.mark.parametrize("text, fragment", [
    ("[scenario]\npreset = nope\n", "preset"),
    ("[event.1]\ntime = 0.5\nkind = load-step\n", "bus"),
    ("[event.1]\ntime = 0.5\nkind = fault\nbus = 7\n", "event"),
    ("[thresholds]\nv_dc_min = x\n", "thresholds.v_dc_min"),
    ("[sweep]\ncount = 2.5\n", "sweep.count"),
    ("no section\n", "<string>"),
])
def test_bad_files(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        loads(text)


def test_missing_file_names_path(tmp_path):
    missing = tmp_path / "absent.ini"
    with pytest.raises(ConfigError, match="absent.ini"):
        load(missing)


def test_example_scenarios_load():
    from pathlib import Path
    for path in sorted((Path(__file__).parents[1] / "scripts" / "scenarios").glob("*.ini")):
        cfg, _ = load(path)
        assert cfg.events
