from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple
import logging
import math

from src.errors import SlotIndexError
from src.sim.signals import SignalBus, SignalId

logger = logging.getLogger(__name__)

DEFAULT_CAPACITY = 32
SLOTS_PER_BANK = 4
SLOTALLOT_WIDTH = 6
SLOTALLOT_VALID = 1 << 5
SLOTALLOT_INDEX = SLOTALLOT_VALID - 1


class SlotStatus(Enum):
    EMPTY = 'empty'
    FILLED = 'filled'
    RESERVED = 'reserved'


@dataclass(frozen=True)
class SlotTable:
    status: Tuple[SlotStatus, ...]

    def __post_init__(self) -> None:
        if len(self.status) < 1:
            raise SlotIndexError('a slot table needs at least one slot')

    @classmethod
    def empty(cls, capacity: int = DEFAULT_CAPACITY) -> 'SlotTable':
        if capacity < 1:
            raise SlotIndexError('capacity must be >= 1')
        return cls((SlotStatus.EMPTY,) * capacity)

    @property
    def capacity(self) -> int:
        return len(self.status)

    @property
    def free_count(self) -> int:
        return sum(1 for status in self.status if status is SlotStatus.EMPTY)

    @property
    def bank_count(self) -> int:
        return math.ceil(self.capacity / SLOTS_PER_BANK)

    def check_index(self, slot: int) -> None:
        if not 0 <= slot < self.capacity:
            raise SlotIndexError(f'slot {slot} out of range 0..{self.capacity - 1}')

    def with_status(self, slot: int, status: SlotStatus) -> 'SlotTable':
        self.check_index(slot)
        statuses = list(self.status)
        statuses[slot] = status
        return SlotTable(tuple(statuses))

    def render(self) -> str:
        symbols = {SlotStatus.EMPTY: '.', SlotStatus.FILLED: 'F', SlotStatus.RESERVED: 'R'}
        return ''.join(symbols[status] for status in self.status)


def ingest_sensor(table: SlotTable, bank_index: int, nibble: int) -> SlotTable:
    """
    Apply one decoded sensor nibble. An occupied sensor fills its slot; a free
    sensor empties it unless it is reserved (the car is still on its way).
    """
    if not 0 <= bank_index < table.bank_count:
        raise SlotIndexError(f'bank {bank_index} out of range 0..{table.bank_count - 1}')
    statuses = list(table.status)
    for line in range(SLOTS_PER_BANK):
        slot = bank_index * SLOTS_PER_BANK + line
        if slot >= table.capacity:
            break
        if (nibble >> line) & 1:
            statuses[slot] = SlotStatus.FILLED
        elif statuses[slot] is not SlotStatus.RESERVED:
            statuses[slot] = SlotStatus.EMPTY
    return SlotTable(tuple(statuses))


def allocate(table: SlotTable) -> Tuple[SlotTable, Optional[int]]:
    """Reserve the lowest-index empty slot; None when the lot is full"""
    for slot, status in enumerate(table.status):
        if status is SlotStatus.EMPTY:
            return table.with_status(slot, SlotStatus.RESERVED), slot
    return table, None


def query(table: SlotTable, slot: int) -> Tuple[int, int, int]:
    """(led, led_filled, led_reserv) for one slot"""
    table.check_index(slot)
    status = table.status[slot]
    return (
        int(status is SlotStatus.EMPTY),
        int(status is SlotStatus.FILLED),
        int(status is SlotStatus.RESERVED),
    )


def release(table: SlotTable, slot: int) -> SlotTable:
    return table.with_status(slot, SlotStatus.EMPTY)


def encode_slotallot(slot: Optional[int]) -> int:
    if slot is None:
        return 0
    return SLOTALLOT_VALID | (slot & SLOTALLOT_INDEX)


def decode_slotallot(word: int) -> Optional[int]:
    if not word & SLOTALLOT_VALID:
        return None
    return word & SLOTALLOT_INDEX


def table_from_presets(capacity: int, presets: Dict[int, SlotStatus]) -> SlotTable:
    table = SlotTable.empty(capacity)
    for slot, status in sorted(presets.items()):
        table = table.with_status(slot, status)
    return table


class SlotAllocatorUnit:
    """Slot table owner: ingests sensor data, allocates on request, drives the LEDs"""

    def __init__(self,
                 table: SlotTable,
                 request: str = 'w',
                 listen_rf: bool = True,
                 name: str = 'alloc'):
        self.name = name
        self.initial_table = table
        self.table = table
        self.request = request
        self.listen_rf = listen_rf
        self.query_slot = 0
        self.slotallot = 0
        self._prev_request = 0

    def declare(self, bus: SignalBus) -> None:
        bus.declare(SignalId('slotallot', SLOTALLOT_WIDTH))
        bus.declare(SignalId('led_slotallot'))
        bus.declare(SignalId('led'))
        bus.declare(SignalId('led_filled'))
        bus.declare(SignalId('led_reserv'))

    @property
    def free_count(self) -> int:
        return self.table.free_count

    def release(self, slot: int) -> None:
        self.table = release(self.table, slot)
        self.query_slot = slot
        logger.info(f'slot {slot} released')

    def _write_outputs(self, bus: SignalBus, leds: Sequence[int]) -> None:
        bus.write('slotallot', self.slotallot)
        bus.write('led_slotallot', int(bool(self.slotallot & SLOTALLOT_VALID)))
        bus.write('led', leds[0])
        bus.write('led_filled', leds[1])
        bus.write('led_reserv', leds[2])

    def tick(self, cycle: int, bus: SignalBus) -> None:
        request = bus.read(self.request)
        rising = request == 1 and self._prev_request == 0
        self._prev_request = request
        if bus.read('reset'):
            self.table = self.initial_table
            self.query_slot = 0
            self.slotallot = 0
            self._write_outputs(bus, (0, 0, 0))
            return

        if self.listen_rf and bus.read('rf_vt'):
            self.table = ingest_sensor(self.table, bus.read('rf_bank'), bus.read('rf_data'))
        if rising:
            self.table, slot = allocate(self.table)
            self.slotallot = encode_slotallot(slot)
            if slot is None:
                logger.info(f'[{cycle}] allocation request: lot full')
            else:
                self.query_slot = slot
                logger.info(f'[{cycle}] slot {slot} allotted')
        self._write_outputs(bus, query(self.table, self.query_slot))
