from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Deque, Dict, List, Optional, Sequence, Tuple
import logging

from src.devices.rf_link import RfLinkUnit
from src.errors import ScenarioError
from src.fsm.identification import CODE_BITS
from src.sim.signals import SignalBus, SignalId

logger = logging.getLogger(__name__)

CARD_ENABLE_CYCLES = 2


@dataclass(frozen=True)
class CardReaderPorts:
    enable: str
    data: str
    strobe: str


@dataclass(frozen=True)
class _Action:
    kind: str  # set, card, occupy, vacate, corrupt
    name: str = ''
    value: int = 0


class StimulusDriver:
    """Drives the testbench inputs from scheduled scenario actions.

    Input levels persist until the next `set`. A queued card is shifted out by
    the card reader once its enable line has been high for two consecutive
    cycles; during the feed the reader owns the data and strobe levels.
    """

    def __init__(self,
                 inputs: Sequence[SignalId],
                 card_reader: Optional[CardReaderPorts] = None,
                 rf: Optional[RfLinkUnit] = None,
                 name: str = 'stim'):
        self.name = name
        self.inputs = {signal.name: signal for signal in inputs}
        self.card_reader = card_reader
        self.rf = rf
        self.levels: Dict[str, int] = {signal.name: 0 for signal in inputs}
        self._actions: Dict[int, List[_Action]] = defaultdict(list)
        self._cards: Deque[int] = deque()
        self._feed: List[int] = []
        self._enable_run = 0
        self.cards_fed: List[Tuple[int, int]] = []

    def declare(self, bus: SignalBus) -> None:
        for signal in self.inputs.values():
            bus.declare(signal)

    def schedule_set(self, cycle: int, name: str, value: int) -> None:
        signal = self.inputs.get(name)
        if signal is None:
            known = ', '.join(sorted(self.inputs))
            raise ScenarioError(f'{name!r} is not an input of this system (inputs: {known})')
        if not signal.fits(value):
            raise ScenarioError(f'value {value} does not fit {name} ({signal.width} bits)')
        self._actions[cycle].append(_Action('set', name, value))

    def schedule_card(self, cycle: int, code: int) -> None:
        if self.card_reader is None:
            raise ScenarioError('this system has no card reader')
        if not 0 <= code < 1 << CODE_BITS:
            raise ScenarioError(f'card code {code} does not fit in {CODE_BITS} bits')
        self._actions[cycle].append(_Action('card', value=code))

    def schedule_occupancy(self, cycle: int, slot: int, occupied: bool) -> None:
        if self.rf is None:
            raise ScenarioError('this system has no IR sensors')
        if not 0 <= slot < self.rf.slot_count:
            raise ScenarioError(f'slot {slot} out of range 0..{self.rf.slot_count - 1}')
        self._actions[cycle].append(_Action('occupy' if occupied else 'vacate', value=slot))

    def schedule_corruption(self, cycle: int, position: int) -> None:
        if self.rf is None:
            raise ScenarioError('this system has no RF link')
        self._actions[cycle].append(_Action('corrupt', value=position))

    @property
    def cards_pending(self) -> int:
        return len(self._cards) + int(bool(self._feed))

    def _apply(self, cycle: int, bus: SignalBus) -> None:
        for action in self._actions.pop(cycle, []):
            if action.kind == 'set':
                self.levels[action.name] = action.value
            elif action.kind == 'card':
                self._cards.append(action.value)
            elif action.kind == 'corrupt':
                assert self.rf is not None
                self.rf.schedule_corruption(action.value, bus)
            else:
                assert self.rf is not None
                self.rf.set_occupancy(action.value, action.kind == 'occupy')

    def _card_reader(self, cycle: int, bus: SignalBus) -> Dict[str, int]:
        ports = self.card_reader
        if ports is None:
            return {}
        self._enable_run = self._enable_run + 1 if bus.read(ports.enable) else 0
        if not self._feed and self._cards and self._enable_run >= CARD_ENABLE_CYCLES:
            code = self._cards.popleft()
            self._feed = [(code >> bit) & 1 for bit in reversed(range(CODE_BITS))]
            self.cards_fed.append((cycle, code))
            logger.debug(f'[{cycle}] card 0x{code:02X} presented')
        if not self._feed:
            return {}
        return {ports.data: self._feed.pop(0), ports.strobe: 1}

    def tick(self, cycle: int, bus: SignalBus) -> None:
        self._apply(cycle, bus)
        for name, level in self.levels.items():
            bus.write(name, level)
        for name, level in self._card_reader(cycle, bus).items():
            bus.write(name, level)
