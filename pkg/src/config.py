from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Optional
import os

from src.errors import ConfigurationError

ENV_PREFIX = 'PARKSIM_'
LIVENESS_SLACK = 64
# cycles of an entry spent outside door motion and the card wait
ENTRY_OVERHEAD = 16
MAX_IDENT_TIMEOUT = LIVENESS_SLACK - ENTRY_OVERHEAD


@dataclass(frozen=True)
class SimConfig:
    """Every constant the parking hardware leaves open, with its default"""

    slots: int = 32
    div: int = 4
    steps_per_door: int = 48
    k: int = 3
    repetitions: int = 3
    seed: int = 0
    noise_rate: float = 0.0
    ident_timeout: int = 32
    timescale: str = '1 ns'

    def __post_init__(self) -> None:
        if not 1 <= self.slots <= 32:
            raise ConfigurationError(f'slots must be in 1..32, got {self.slots}')
        if not 1 <= self.div <= 256:
            raise ConfigurationError(f'div must be in 1..256, got {self.div}')
        if self.steps_per_door < 1:
            raise ConfigurationError('steps_per_door must be >= 1')
        if self.k < 1:
            raise ConfigurationError('k must be >= 1')
        if self.repetitions < 1:
            raise ConfigurationError('repetitions must be >= 1')
        if self.seed < 0:
            raise ConfigurationError('seed must be >= 0')
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ConfigurationError(f'noise_rate must be in [0, 1], got {self.noise_rate}')
        if not 1 <= self.ident_timeout <= MAX_IDENT_TIMEOUT:
            # a longer card wait would push a no-card entry past the liveness bound
            raise ConfigurationError(
                f'ident_timeout must be in 1..{MAX_IDENT_TIMEOUT}, got {self.ident_timeout}'
            )

    @property
    def liveness_bound(self) -> int:
        """Cycles within which an entry must return the controller to Idle"""
        return 2 * self.steps_per_door * self.div + LIVENESS_SLACK

    @classmethod
    def from_env(cls) -> 'SimConfig':
        """Build a config from PARKSIM_* environment variables (load .env first)"""
        values: Dict[str, Any] = {}
        for field in fields(cls):
            raw = os.getenv(ENV_PREFIX + field.name.upper())
            if raw is None or raw == '':
                continue
            try:
                if field.type in (int, 'int'):
                    values[field.name] = int(raw, 0)
                elif field.type in (float, 'float'):
                    values[field.name] = float(raw)
                else:
                    values[field.name] = raw
            except ValueError:
                raise ConfigurationError(
                    f'{ENV_PREFIX + field.name.upper()}={raw!r} is not a valid {field.type}'
                ) from None
        return cls(**values)

    def with_overrides(self, **overrides: Optional[Any]) -> 'SimConfig':
        """Return a copy with every non-None override applied"""
        changes = {name: value for name, value in overrides.items() if value is not None}
        return replace(self, **changes)
