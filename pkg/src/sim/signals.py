from dataclasses import dataclass
from typing import Dict, List, Optional
import logging
import re

from src.errors import SignalError

logger = logging.getLogger(__name__)

MAX_WIDTH = 8
_NAME_RE = re.compile(r'^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$')


@dataclass(frozen=True)
class SignalId:
    name: str
    width: int = 1

    def __post_init__(self) -> None:
        if not _NAME_RE.match(self.name):
            raise SignalError(f'invalid signal name {self.name!r}')
        if not 1 <= self.width <= MAX_WIDTH:
            raise SignalError(f'{self.name}: width must be in 1..{MAX_WIDTH}, got {self.width}')

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1

    def fits(self, value: int) -> bool:
        return 0 <= value <= self.mask


@dataclass(frozen=True)
class PendingNote:
    cycle: int
    source: str
    message: str
    level: str = 'warning'


class SignalBus:
    """Named signal values exchanged between components every cycle.

    Each signal has a single driver: the component that declared it. The kernel
    sets `driver` before each tick so writes can be checked.
    """

    def __init__(self) -> None:
        self._signals: Dict[str, SignalId] = {}
        self._values: Dict[str, int] = {}
        self._drivers: Dict[str, str] = {}
        self._order: List[str] = []
        self._notes: List[PendingNote] = []
        self.driver: Optional[str] = None
        self.cycle = 0

    def declare(self, signal: SignalId, initial: int = 0) -> SignalId:
        if signal.name in self._signals:
            raise SignalError(
                f'{signal.name} already declared by {self._drivers[signal.name]}'
            )
        if not signal.fits(initial):
            raise SignalError(f'{signal.name}: initial value {initial} exceeds width')
        owner = self.driver or 'kernel'
        self._signals[signal.name] = signal
        self._values[signal.name] = initial
        self._drivers[signal.name] = owner
        self._order.append(signal.name)
        return signal

    def has(self, name: str) -> bool:
        return name in self._signals

    def signal(self, name: str) -> SignalId:
        try:
            return self._signals[name]
        except KeyError:
            raise SignalError(f'unknown signal {name!r}') from None

    def driver_of(self, name: str) -> str:
        self.signal(name)
        return self._drivers[name]

    def read(self, name: str) -> int:
        try:
            return self._values[name]
        except KeyError:
            raise SignalError(f'unknown signal {name!r}') from None

    def write(self, name: str, value: int) -> None:
        signal = self.signal(name)
        owner = self._drivers[name]
        if self.driver is not None and owner != self.driver:
            raise SignalError(f'{self.driver} cannot drive {name} (driven by {owner})')
        value = int(value)
        if not signal.fits(value):
            raise SignalError(f'{name}: value {value} does not fit in {signal.width} bits')
        self._values[name] = value

    def note(self, message: str, level: str = 'warning') -> None:
        """Record an event (warning or info) for the current cycle and driver"""
        source = self.driver or 'kernel'
        log = logger.info if level == 'info' else logger.warning
        log(f'[{self.cycle}] {source}: {message}')
        self._notes.append(PendingNote(self.cycle, source, message, level))

    def drain_notes(self) -> List[PendingNote]:
        notes, self._notes = self._notes, []
        return notes

    @property
    def signals(self) -> List[SignalId]:
        return [self._signals[name] for name in self._order]

    def snapshot(self) -> Dict[str, int]:
        return dict(self._values)
