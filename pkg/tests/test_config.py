import json

import pytest

from aoi_v2i.config import ConfigError, load_config, merge, parse_assignment, parse_config_text

INI = """
[traffic]
discipline = DM1
utilization = 0.4
fleet_size = 3
collision_window = 0.01

[channel]
vehicle_speed = 20
fading_margin = 5

[sim]
horizon = 5000
seed = 9
"""


def test_ini_sections_typed():
    cfg = parse_config_text(INI)
    assert cfg["traffic"] == {"discipline": "DM1", "utilization": 0.4, "fleet_size": 3,
                              "collision_window": 0.01}
    assert isinstance(cfg["traffic"]["fleet_size"], int)
    assert cfg["channel"] == {"vehicle_speed": 20.0, "fading_margin": 5.0}
    assert cfg["sim"] == {"horizon": 5000, "seed": 9}


def test_json_sectioned_and_flat():
    sectioned = parse_config_text(json.dumps({"traffic": {"utilization": 0.3}, "sim": {"seed": 2}}), "json")
    assert sectioned["traffic"] == {"utilization": 0.3}
    assert sectioned["sim"] == {"seed": 2}
    flat = parse_config_text(json.dumps({"utilization": 0.3, "average_aoi": 4.0,
                                         "term_service": 1.0, "beta": None}), "json")
    assert flat["traffic"] == {"utilization": 0.3}


def test_collision_window_null():
    cfg = parse_config_text(json.dumps({"collision_window": None}), "json")
    assert cfg["traffic"] == {"collision_window": None}


def test_load_config_by_suffix(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text(INI)
    js = tmp_path / "run.json"
    js.write_text(json.dumps({"traffic": {"fleet_size": 7}}))
    assert load_config(ini)["traffic"]["fleet_size"] == 3
    assert load_config(js)["traffic"]["fleet_size"] == 7


@pytest.mark.parametrize(
    "text,fmt,key",
    [
        ("[traffic]\nspeed = 3\n", "ini", "traffic.speed"),
        ("[traffic]\nfleet_size = 2.5\n", "ini", "traffic.fleet_size"),
        ("[traffic]\nutilization = nan\n", "ini", "traffic.utilization"),
        ("[weather]\nrain = 1\n", "ini", "weather"),
        ("no section header", "ini", None),
        ('{"traffic": 3}', "json", "traffic"),
        ("[1, 2]", "json", None),
        ("{broken", "json", None),
    ],
)
def test_errors_name_key(text, fmt, key):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text, fmt)
    assert info.value.key == key


def test_merge_precedence():
    base = {"traffic": {"utilization": 0.4, "fleet_size": 2}, "channel": {}, "sim": {}}
    top = {"traffic": {"utilization": 0.6, "fleet_size": None}}
    out = merge(base, top)
    assert out["traffic"] == {"utilization": 0.6, "fleet_size": 2}
    assert base["traffic"]["utilization"] == 0.4


def test_parse_assignment():
    assert parse_assignment("sim.seed=4") == ("sim", "seed", 4)
    assert parse_assignment("utilization=0.25") == ("traffic", "utilization", 0.25)
    assert parse_assignment("channel.fading_margin = 12") == ("channel", "fading_margin", 12.0)
    for bad in ("sim.seed", "moon.phase=1", "traffic.fleet_size=x"):
        with pytest.raises(ConfigError):
            parse_assignment(bad)
