from dataclasses import dataclass
from typing import Dict, List, Protocol
import logging

from src.errors import ConfigurationError
from src.sim.signals import SignalBus, SignalId
from src.sim.trace import Trace, TraceEvent, TraceNote

logger = logging.getLogger(__name__)

CLOCK = 'clk'


class Component(Protocol):
    name: str

    def declare(self, bus: SignalBus) -> None:
        ...

    def tick(self, cycle: int, bus: SignalBus) -> None:
        ...


@dataclass(frozen=True)
class ComponentHandle:
    name: str
    order: int


class Simulation:
    """Deterministic cycle scheduler.

    Components are ticked once per cycle in ascending `order`; after the last
    one, every declared signal is compared to its previous value and changes
    are appended to the trace.
    """

    def __init__(self, record_clock: bool = True):
        self.record_clock = record_clock
        self.bus = SignalBus()
        self._components: Dict[int, Component] = {}
        self._ordered: List[Component] = []
        self._elaborated = False
        self._cycle = 0
        self._trace = Trace()
        self._last: Dict[str, int] = {}

    @property
    def cycle(self) -> int:
        return self._cycle

    @property
    def trace(self) -> Trace:
        return self._trace

    def register_component(self, component: Component, order: int) -> ComponentHandle:
        if self._elaborated:
            raise ConfigurationError(f'cannot register {component.name} after the first run')
        if order < 0:
            raise ConfigurationError(f'order must be >= 0, got {order}')
        if order in self._components:
            taken = self._components[order].name
            raise ConfigurationError(f'order {order} already used by {taken}')
        if any(existing.name == component.name for existing in self._components.values()):
            raise ConfigurationError(f'component name {component.name!r} already registered')
        self._components[order] = component
        return ComponentHandle(component.name, order)

    def component(self, name: str) -> Component:
        for component in self._components.values():
            if component.name == name:
                return component
        raise ConfigurationError(f'no component named {name!r}')

    def _elaborate(self) -> None:
        self._ordered = [self._components[order] for order in sorted(self._components)]
        if self.record_clock:
            self.bus.driver = None
            self.bus.declare(SignalId(CLOCK, 1))
        for component in self._ordered:
            self.bus.driver = component.name
            component.declare(self.bus)
        self.bus.driver = None
        self._trace.signals = self.bus.signals
        self._trace.initial = self.bus.snapshot()
        self._last = dict(self._trace.initial)
        self._elaborated = True
        logger.debug(
            f'elaborated {len(self._ordered)} components, {len(self._trace.signals)} signals'
        )

    def run(self, cycles: int) -> Trace:
        """Advance exactly `cycles` cycles and return the accumulated trace"""
        if cycles < 0:
            raise ConfigurationError('cycle count must be >= 0')
        if not self._elaborated:
            self._elaborate()
        for _ in range(cycles):
            self._step()
        return self._trace.copy()

    def _step(self) -> None:
        cycle = self._cycle
        bus = self.bus
        bus.cycle = cycle
        if self.record_clock:
            bus.driver = None
            bus.write(CLOCK, (cycle + 1) % 2)
        try:
            for component in self._ordered:
                bus.driver = component.name
                component.tick(cycle, bus)
        finally:
            bus.driver = None
            for note in bus.drain_notes():
                self._trace.notes.append(
                    TraceNote(note.cycle, note.source, note.message, note.level)
                )
        self._capture(cycle)
        self._cycle += 1
        self._trace.cycles = self._cycle

    def _capture(self, cycle: int) -> None:
        for signal in self._trace.signals:
            value = self.bus.read(signal.name)
            if value != self._last[signal.name]:
                self._trace.events.append(TraceEvent(cycle, signal.name, value))
                self._last[signal.name] = value
