import pytest

from src.config import MAX_IDENT_TIMEOUT, SimConfig
from src.errors import ConfigurationError


def test_defaults():
    config = SimConfig()
    assert (config.slots, config.div, config.steps_per_door, config.k) == (32, 4, 48, 3)
    assert config.liveness_bound == 2 * 48 * 4 + 64


@pytest.mark.parametrize('overrides', [
    {'slots': 0}, {'slots': 33}, {'div': 0}, {'div': 257}, {'steps_per_door': 0},
    {'k': 0}, {'repetitions': 0}, {'seed': -1}, {'noise_rate': 1.5}, {'ident_timeout': 0},
    {'ident_timeout': MAX_IDENT_TIMEOUT + 1},
])
def test_validation(overrides):
    with pytest.raises(ConfigurationError):
        SimConfig(**overrides)


def test_from_env(monkeypatch):
    monkeypatch.setenv('PARKSIM_DIV', '0x8')
    monkeypatch.setenv('PARKSIM_NOISE_RATE', '0.25')
    monkeypatch.setenv('PARKSIM_TIMESCALE', '10 ns')
    config = SimConfig.from_env()
    assert (config.div, config.noise_rate, config.timescale) == (8, 0.25, '10 ns')


def test_from_env_rejects_garbage(monkeypatch):
    monkeypatch.setenv('PARKSIM_SLOTS', 'many')
    with pytest.raises(ConfigurationError):
        SimConfig.from_env()


def test_overrides_skip_none():
    config = SimConfig().with_overrides(div=2, slots=None)
    assert (config.div, config.slots) == (2, 32)
