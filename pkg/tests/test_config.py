import pytest

from fasisac.config import (DEFAULTS, ConfigError, ExperimentConfig, config_hash, dump_config,
                            load_config, validate)


def test_defaults_fill():
    cfg = validate({})
    assert cfg == DEFAULTS
    assert cfg is not DEFAULTS


def test_error_positions(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("system:\n  num_antennas: 4\n  wavelength: -1\n")
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert (exc.value.line, exc.value.column) == (3, 3)
    assert "system.wavelength" in str(exc.value)


@pytest.mark.parametrize("text, path", [
    ("nope: {}\n", "nope"),
    ("system:\n  typo: 1\n", "system.typo"),
    ("sweep:\n  methods: [fpa, magic]\n", "sweep.methods"),
    ("agent:\n  ou_sigma_end: 0.5\n", "agent.ou_sigma_end"),
    ("system:\n  num_rx_paths: 2\n", "system.num_rx_paths"),
    ("output:\n  record_wall_time: 1\n", "output.record_wall_time"),
    ("sweep:\n  num_scenarios: 2.5\n", "sweep.num_scenarios"),
])
def test_rejections(tmp_path, text, path):
    p = tmp_path / "c.yaml"
    p.write_text(text)
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert exc.value.path == path


def test_yaml_syntax_error(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("system: [1, 2\n")
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert exc.value.line is not None


def test_hash_stable_and_sensitive():
    a = ExperimentConfig.default()
    b = ExperimentConfig.default()
    c = ExperimentConfig.default(system__gamma=1.0)
    assert a.hash == b.hash == config_hash(validate({}))
    assert a.hash != c.hash


def test_dump_round_trip(tmp_path):
    cfg = ExperimentConfig.default(sweep__num_scenarios=3).data
    p = tmp_path / "c.yaml"
    p.write_text(dump_config(cfg))
    assert load_config(p) == cfg


def test_derived_quantities():
    exp = ExperimentConfig.default()
    assert exp.noise_power(20.0) == pytest.approx(0.01)
    sc = exp.scenario_config(10.0, num_targets=3)
    assert sc.num_targets == 3 and sc.noise_power == pytest.approx(0.1)
    bc = exp.bcd_config()
    assert bc.num_antennas == 4 and bc.agent.actor_hidden == (400, 300)
