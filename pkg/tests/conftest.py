from pathlib import Path

import pytest

from src.config import SimConfig
from src.scenario.parser import Scenario, parse_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / 'scenarios'


@pytest.fixture
def config():
    return SimConfig()


@pytest.fixture
def load_scenario():
    def _load(name: str) -> Scenario:
        return parse_scenario((SCENARIO_DIR / f'{name}.scn').read_text())

    return _load


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ('SLOTS', 'DIV', 'STEPS_PER_DOOR', 'K', 'REPETITIONS', 'SEED',
                 'NOISE_RATE', 'IDENT_TIMEOUT', 'TIMESCALE'):
        monkeypatch.delenv(f'PARKSIM_{name}', raising=False)
