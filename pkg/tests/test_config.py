import json

import pytest

from vtguide.config import EngagementConfig, PredictionMethod, load_config
from vtguide.kinematics import ManeuverModelParams, Vec2


def test_defaults():
    c = EngagementConfig().validate()
    assert (c.nav_gain, c.a_max, c.f_sim, c.f_pn, c.f_zem, c.n_t, c.n_s) == (3, 500, 40, 40, 0.5, 20, 1000)
    assert c.target_init_pos == Vec2(0, 60000) and c.target_init_vel == Vec2(0, -200)
    assert c.interceptor_init_pos == Vec2(0, 0) and c.interceptor_init_vel == Vec2(0, 500)
    assert (c.d_endgame, c.d_hit, c.t_max) == (6000, 10, 100)
    assert (c.steps_total, c.zem_every, c.pn_every) == (4000, 80, 1)


@pytest.mark.parametrize(
    "changes",
    [
        {"f_pn": 30.0},
        {"f_zem": 0.3},
        {"d_hit": 6000.0},
        {"n_t": 1},
        {"n_s": 0},
        {"f_sim": 0.0},
        {"nav_gain": -1.0},
        {"t_max": 100.01},
        {"interceptor_init_vel": Vec2(0, 0)},
    ],
)
def test_invalid_configs(changes):
    with pytest.raises(ValueError):
        EngagementConfig(**changes).validate()


def test_method_aliases():
    assert PredictionMethod.parse("Straight-Line") is PredictionMethod.STRAIGHT_LINE
    assert PredictionMethod.parse("virtual_target") is PredictionMethod.VIRTUAL_TARGET
    with pytest.raises(ValueError):
        PredictionMethod.parse("magic")


def test_dict_round_trip():
    c = EngagementConfig(m_targets=3, maneuver=ManeuverModelParams(a_lat_max_target=12.5))
    assert EngagementConfig.from_dict(json.loads(json.dumps(c.to_dict()))) == c


def test_yaml_file_with_unit_suffixes(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text(
        "nav_gain: 4\nd_endgame_m: 5000\nd_hit_m: 5\nt_max_s: 80\n"
        "target_init_pos: [100, 50000]\nmaneuver:\n  a_lat_max_target: 20\n"
        "prediction_method: straight\n"
    )
    c = load_config(f)
    assert (c.nav_gain, c.d_endgame, c.d_hit, c.t_max) == (4, 5000, 5, 80)
    assert c.target_init_pos == Vec2(100, 50000)
    assert c.maneuver.a_lat_max_target == 20
    assert c.prediction_method is PredictionMethod.STRAIGHT_LINE


def test_json_and_empty_files(tmp_path):
    j = tmp_path / "c.json"
    j.write_text('{"n_s": 50}')
    assert load_config(j).n_s == 50
    e = tmp_path / "e.yaml"
    e.write_text("")
    assert load_config(e) == EngagementConfig()


def test_unknown_key(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("warp_drive: 9\n")
    with pytest.raises(ValueError, match="warp_drive"):
        load_config(f)
