import math

import pytest

from filmctrl.config import config_hash, parse_config, set_key, write_config
from filmctrl.errors import ConfigError


def test_empty_config_gives_defaults():
    config = parse_config("")
    assert config.reynolds == 5.0
    assert config.capillary == 0.05
    assert config.theta == math.pi / 3
    assert config.aspect == 30.0
    assert config.n == 256
    assert config.count == 5
    assert config.width == 0.1
    assert config.beta == 0.5
    assert config.dt == 0.05
    params = config.parameters()
    assert params.reynolds == 5.0


def test_preset_resolution():
    config = parse_config('parameters.preset = "water"')
    assert abs(config.reynolds - 28.2) / 28.2 < 0.03
    assert abs(config.capillary - 0.0018) / 0.0018 < 0.03


def test_preset_with_explicit_override():
    text = "parameters.preset = water\nparameters.reynolds = 7.5\n"
    config = parse_config(text)
    assert config.reynolds == 7.5  # explicit keys beat the preset
    assert abs(config.capillary - 0.0018) / 0.0018 < 0.03


def test_invalid_beta_names_key():
    with pytest.raises(ConfigError) as err:
        parse_config("control.beta = 1.5")
    assert "control.beta" in str(err.value)


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config("# comment\nnonsense.key = 3\n")
    assert "nonsense.key" in str(err.value)
    assert "line 2" in str(err.value)


def test_malformed_line():
    with pytest.raises(ConfigError) as err:
        parse_config("just some words\n")
    assert "line 1" in str(err.value)


def test_unparsable_value():
    with pytest.raises(ConfigError):
        parse_config("grid.n = many")


def test_comments_and_blanks_ignored():
    config = parse_config("\n# full line comment\ngrid.n = 128  # trailing\n\n")
    assert config.n == 128


def test_round_trip_canonical():
    text = ("parameters.reynolds = 7.25\nactuators.count = 3\n"
            "sweep.re_values = 1, 5, 10\ncontrol.beta = 0.25\n")
    config = parse_config(text)
    canonical = write_config(config)
    reparsed = parse_config(canonical)
    assert reparsed == config
    assert write_config(reparsed) == canonical


def test_round_trip_with_preset():
    config = parse_config("parameters.preset = nitrogen")
    canonical = write_config(config)
    assert parse_config(canonical) == config
    assert write_config(parse_config(canonical)) == canonical


def test_set_key_overrides():
    config = parse_config("control.beta = 0.4")
    set_key(config, "control.beta", "0.7")
    assert config.beta == 0.7
    with pytest.raises(ConfigError):
        set_key(config, "control.gamma", "1.0")


def test_sweep_lists():
    config = parse_config("sweep.re_values = 1, 5, 10, 20\nsweep.ca_values = 0.01,0.05\n")
    assert config.re_values == [1.0, 5.0, 10.0, 20.0]
    assert config.ca_values == [0.01, 0.05]
    with pytest.raises(ConfigError):
        parse_config("sweep.re_values = ")


def test_config_hash_tracks_content():
    a = parse_config("")
    b = parse_config("grid.n = 128")
    assert config_hash(a) != config_hash(b)
    assert config_hash(a) == config_hash(parse_config(""))
