import json

import pytest

from fdjrc import config as cf


def test_defaults_follow_system_parameters():
    c = cf.ExperimentConfig()
    s, d, r = c.system, c.design, c.radar
    assert (s.n_bs, s.n_ms, s.n_rf, s.n_streams, s.M, s.N) == (32, 16, 4, 4, 792, 14)
    assert s.subcarrier_spacing_hz == 120e3 and s.symbol_duration_s == 8.92e-6
    assert s.carrier_hz == 28e9 and s.noise_dbm == -93.8
    assert (d.tau_r, d.eps1, d.eps2) == (0.7, 0.1, 0.3)
    assert (r.Mbar_factor, r.Nbar_factor) == (10, 200)
    assert c.trials == 100
    c.validate()


def test_presets_load():
    assert {"desk.json", "paper.json"} <= set(cf.list_presets())
    desk, paper = cf.load_config("desk.json"), cf.load_config("paper")
    assert (desk.system.M, desk.trials) == (64, 20)
    assert (paper.system.M, paper.trials) == (792, 100)
    assert desk.radar.Mbar_factor == 10 and desk.radar.Nbar_factor == 200
    assert set(desk.experiment) == set(cf.EXPERIMENTS)


def test_round_trip(tiny_dict):
    c = cf.config_from_dict(tiny_dict)
    assert cf.config_from_dict(json.loads(json.dumps(cf.config_to_dict(c)))) == c


def test_string_experiment():
    assert cf.config_from_dict({"experiment": "radar_maps"}).experiment == ("radar_maps",)


@pytest.mark.parametrize("data,match", [
    ({"trails": 3}, "unknown key"),
    ({"system": {"nbs": 3}}, r"config\.system: unknown key"),
    ({"radar": {"targets": [{"range_m": 1, "angle_deg": 0, "speed": 1}]}}, "speed"),
    ({"trials": 2.5}, "integer"),
    ({"trials": True}, "integer"),
    ({"system": {"M": "64"}}, "integer"),
    ({"design": {"ridge": "small"}}, "number"),
    ({"radar": {"noise": 1}}, "true/false"),
    ({"sweep": {"power_dbm": 20}}, "list"),
    ({"radar": {"angle_grid_deg": [0, 1]}}, "3 items"),
    ({"system": []}, "object"),
    ({"radar": {"targets": [{"angle_deg": 0}]}}, "range_m"),
])
def test_strict_loading(data, match):
    with pytest.raises(cf.ConfigError, match=match):
        cf.config_from_dict(data)


@pytest.mark.parametrize("data,match", [
    ({"experiment": ["fig9"]}, "se_vs_power"),
    ({"methods": ["mmse"]}, "optimal_svd"),
    ({"combiners": ["zf"]}, "nsp"),
    ({"system": {"n_streams": 5}}, "n_streams"),
    ({"design": {"tau_r": 1.5}}, "fractions"),
    ({"design": {"gain_semantics": "db"}}, "gain_semantics"),
    ({"design": {"eps1": 0}}, "eps1"),
    ({"design": {"block_fraction": 0}}, "block_fraction"),
    ({"trials": 0}, "trials"),
    ({"radar": {"angle_grid_deg": [10, 0, 5]}}, "angle_grid_deg"),
    ({"radar": {"combiner": "zf"}}, "radar method"),
])
def test_validation(data, match):
    with pytest.raises(cf.ConfigError, match=match):
        cf.config_from_dict(data)


def test_resolve_and_load_errors(tmp_path):
    with pytest.raises(cf.ConfigError, match="not found"):
        cf.load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(cf.ConfigError, match="invalid JSON"):
        cf.load_config(bad)
    own = tmp_path / "desk.json"
    own.write_text(json.dumps({"trials": 3}))
    assert cf.resolve_config_path(own) == own
    assert cf.load_config(own).trials == 3
