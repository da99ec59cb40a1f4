import json

import pytest

from frenetplan.config import default_config_dict, load_config


def test_defaults():
    c = load_config()
    assert c.v_ref == 16.0 and c.horizon == 3.0 and c.density == 3
    assert c.vehicle.length == 4.5 and c.vehicle.width == 1.8
    assert c.weights.collision_probability == 100.0


def test_nested_override_keeps_other_keys():
    c = load_config({"vehicle": {"a_max": 5.0}, "weights": {"jerk": 2.0}})
    assert c.vehicle.a_max == 5.0 and c.vehicle.length == 4.5
    assert c.weights.jerk == 2.0 and c.weights.collision_probability == 100.0
    assert c.with_weights(jerk=0.0).weights.jerk == 0.0
    # the source dict of defaults is never mutated
    assert default_config_dict()["vehicle"]["a_max"] == 8.0


def test_file_override(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"planning": {"v_ref": 12.0}}))
    assert load_config(p).v_ref == 12.0


def test_malformed_json_names_location(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"planning": {"v_ref": }}')
    with pytest.raises(ValueError, match=r"bad\.json:1:"):
        load_config(p)


def test_unknown_weight_rejected():
    with pytest.raises(ValueError):
        load_config({"weights": {"speed": 1.0}})


def test_thread_env_override(monkeypatch):
    monkeypatch.setenv("FRENETPLAN_THREADS", "3")
    c = load_config({"planning": {"parallel": True}})
    assert c.threads == 3 and c.workers == 3
    assert load_config({"planning": {"parallel": False}}).workers == 1
