import dataclasses
import json

import pytest

from thrusterbiped.config import (
    ScenarioConfig,
    apply_env_overrides,
    config_to_dict,
    default_scenario,
    dict_to_config,
    load_config,
    save_config,
)
from thrusterbiped.errors import ConfigError


@pytest.fixture()
def cfg_path(tmp_path, default_cfg):
    p = tmp_path / "scenario.json"
    save_config(default_cfg, str(p))
    return p


def load_dict(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def test_roundtrip_is_field_exact(cfg_path, default_cfg):
    cfg2 = load_config(str(cfg_path), apply_env=False)
    assert config_to_dict(cfg2) == config_to_dict(default_cfg)
    assert cfg2 == default_cfg


def test_unknown_keys_are_listed(cfg_path):
    data = load_dict(cfg_path)
    data["gait"]["wobble"] = 1.0
    data["gait"]["aardvark"] = 2.0
    with pytest.raises(ConfigError, match="aardvark, wobble"):
        dict_to_config(data)

    data = load_dict(cfg_path)
    data["extra_section"] = {}
    with pytest.raises(ConfigError, match="extra_section"):
        dict_to_config(data)


def test_missing_leaf_named_with_its_section(cfg_path):
    data = load_dict(cfg_path)
    del data["model"]["l"]
    with pytest.raises(ConfigError, match=r"model\.l"):
        dict_to_config(data)


def test_missing_section_and_version_are_reported(cfg_path):
    data = load_dict(cfg_path)
    del data["sim"]
    with pytest.raises(ConfigError, match="sim"):
        dict_to_config(data)

    data = load_dict(cfg_path)
    del data["schema_version"]
    with pytest.raises(ConfigError, match="schema_version"):
        dict_to_config(data)


def test_env_overrides_parse_json_with_string_fallback(cfg_path):
    data = load_dict(cfg_path)
    env = {
        "BIPED_SIM__N_STEPS": "3",
        "BIPED_ERG__ENABLED": "false",
        "BIPED_IO__OUTPUT_DIR": "runs/ci",
        "UNRELATED": "7",
    }
    out = apply_env_overrides(data, environ=env)
    assert out["sim"]["n_steps"] == 3
    assert out["erg"]["enabled"] is False
    assert out["io"]["output_dir"] == "runs/ci"
    cfg = dict_to_config(out)
    assert cfg.sim.n_steps == 3
    assert cfg.erg.enabled is False

    with pytest.raises(ConfigError, match="unknown section"):
        apply_env_overrides(load_dict(cfg_path), environ={"BIPED_NOPE__X": "1"})


def test_env_override_through_load(cfg_path, monkeypatch):
    monkeypatch.setenv("BIPED_SIM__N_STEPS", "4")
    cfg = load_config(str(cfg_path))
    assert cfg.sim.n_steps == 4
    cfg = load_config(str(cfg_path), apply_env=False)
    assert cfg.sim.n_steps == 10


def test_missing_file_and_broken_json(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "nope.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(str(bad))


def test_integer_literals_coerce_to_float_fields(cfg_path):
    data = load_dict(cfg_path)
    data["model"]["g"] = 10
    cfg = dict_to_config(data)
    assert isinstance(cfg.model.g, float)
    assert cfg.model.g == 10.0


def sub(cfg, section, **kv):
    return dataclasses.replace(
        cfg, **{section: dataclasses.replace(getattr(cfg, section), **kv)})


def test_validate_rejects_bad_values(default_cfg):
    with pytest.raises(ConfigError, match="schema_version"):
        dataclasses.replace(default_cfg, schema_version=99).validate()
    with pytest.raises(ConfigError, match="2x6"):
        sub(default_cfg, "gait", bezier=[[0.0] * 5] * 2).validate()
    with pytest.raises(ConfigError, match="gait.kp"):
        sub(default_cfg, "gait", kp=[1.0, 1.0, 1.0]).validate()
    with pytest.raises(ConfigError, match="positive"):
        sub(default_cfg, "sim", dt_ss=0.0).validate()
    with pytest.raises(ConfigError, match="n_steps"):
        sub(default_cfg, "sim", n_steps=-1).validate()
    with pytest.raises(ConfigError, match="ds_envelope"):
        sub(default_cfg, "sim", ds_envelope=0.0).validate()
    with pytest.raises(ConfigError, match="T_s"):
        sub(default_cfg, "nmpc", T_s=0.0).validate()
    with pytest.raises(ConfigError, match="log_decimation"):
        sub(default_cfg, "io", log_decimation=0).validate()
    with pytest.raises(ValueError, match="must be positive"):
        sub(default_cfg, "model", l=-1.0).validate()


def test_default_scenario_is_self_consistent(default_cfg):
    # ships a designed gait, not placeholder zeros
    assert default_cfg.schema_version == 1
    gait = default_cfg.gait.to_gait()
    assert gait.bezier.shape == (2, 6)
    assert gait.theta_plus > 0.0 > gait.theta_minus
    params = default_cfg.model.to_params()
    assert params.l == default_cfg.model.l
    assert abs(params.total_mass - 0.7) < 1e-12
    fresh = default_scenario()
    assert config_to_dict(fresh) == config_to_dict(default_cfg)


def test_scenario_config_is_plain_data():
    cfg = ScenarioConfig()
    with pytest.raises(ConfigError):
        cfg.validate()  # empty bezier table must not validate
