from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence
import logging

import pandas as pd

from src.errors import TraceError
from src.sim.signals import SignalId

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TraceEvent:
    cycle: int
    signal: str
    value: int


@dataclass(frozen=True)
class TraceNote:
    cycle: int
    source: str
    message: str
    level: str = 'warning'


@dataclass
class Trace:
    """Ordered change-only record of every declared signal"""

    signals: List[SignalId] = field(default_factory=list)
    initial: Dict[str, int] = field(default_factory=dict)
    events: List[TraceEvent] = field(default_factory=list)
    notes: List[TraceNote] = field(default_factory=list)
    cycles: int = 0

    def copy(self) -> 'Trace':
        return Trace(
            signals=list(self.signals),
            initial=dict(self.initial),
            events=list(self.events),
            notes=list(self.notes),
            cycles=self.cycles,
        )

    def signal(self, name: str) -> SignalId:
        for signal in self.signals:
            if signal.name == name:
                return signal
        raise TraceError(f'signal {name!r} not in trace')

    def has(self, name: str) -> bool:
        return any(signal.name == name for signal in self.signals)

    def changes(self, name: str) -> List[TraceEvent]:
        self.signal(name)
        return [event for event in self.events if event.signal == name]

    def value_at(self, name: str, cycle: int) -> int:
        """Value of `name` at the end of `cycle` (its initial value before any change)"""
        changes = self.changes(name)
        index = bisect_right([event.cycle for event in changes], cycle)
        if index == 0:
            return self.initial[name]
        return changes[index - 1].value

    def validate(self) -> None:
        """Raise TraceError unless ordering, width and change-only hold"""
        widths = {signal.name: signal for signal in self.signals}
        if len(widths) != len(self.signals):
            raise TraceError('duplicate signal declarations')
        last: Dict[str, int] = {}
        previous_cycle = -1
        for event in self.events:
            if event.signal not in widths:
                raise TraceError(f'event for undeclared signal {event.signal}')
            if event.cycle < previous_cycle:
                raise TraceError(f'event at cycle {event.cycle} out of order')
            if not widths[event.signal].fits(event.value):
                raise TraceError(f'{event.signal}={event.value} exceeds its width')
            if event.signal in last and last[event.signal] == event.value:
                raise TraceError(f'repeated value {event.value} for {event.signal}')
            last[event.signal] = event.value
            previous_cycle = event.cycle

    def to_frame(self, names: Optional[Sequence[str]] = None) -> pd.DataFrame:
        """Cycle-indexed table of signal values, one column per signal"""
        names = list(names) if names is not None else [s.name for s in self.signals]
        index = pd.RangeIndex(max(self.cycles, 1), name='cycle')
        frame = pd.DataFrame(index=index)
        for name in names:
            column = pd.Series(pd.NA, index=index, dtype='Int64')
            column.iloc[0] = self.initial[name]
            for event in self.changes(name):
                if event.cycle < len(index):
                    column.iloc[event.cycle] = event.value
            frame[name] = column.ffill()
        return frame
