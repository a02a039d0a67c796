from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence, Set, Tuple
import logging
import math

import numpy as np

from src.errors import BitStreamError, SlotIndexError
from src.sim.signals import SignalBus, SignalId

logger = logging.getLogger(__name__)

ADDRESS_BITS = 8
DATA_BITS = 4
WORD_BITS = 1 + ADDRESS_BITS + DATA_BITS
SYNC_BIT = 1
SENSORS_PER_BANK = DATA_BITS
DEFAULT_THRESHOLD = 3
DEFAULT_REPETITIONS = 3

BitStream = Tuple[int, ...]


@dataclass(frozen=True)
class Ht12Frame:
    """One HT12E word: 8 address bits and 4 data lines"""

    address: int
    data: int

    def __post_init__(self) -> None:
        if not 0 <= self.address < 1 << ADDRESS_BITS:
            raise BitStreamError(f'address {self.address} does not fit in 8 bits')
        if not 0 <= self.data < 1 << DATA_BITS:
            raise BitStreamError(f'data {self.data} does not fit in 4 bits')


@dataclass(frozen=True)
class SensorBank:
    """Four IR sensors sharing one encoder; bank b covers slots 4b..4b+3"""

    bank_index: int
    address: int
    occupancy: Tuple[bool, bool, bool, bool] = (False, False, False, False)

    def __post_init__(self) -> None:
        if not 0 <= self.bank_index <= 7:
            raise SlotIndexError(f'bank index {self.bank_index} out of range 0..7')
        if not 0 <= self.address < 1 << ADDRESS_BITS:
            raise BitStreamError(f'bank address {self.address} does not fit in 8 bits')
        if len(self.occupancy) != SENSORS_PER_BANK:
            raise SlotIndexError('a sensor bank has exactly 4 sensors')

    @property
    def first_slot(self) -> int:
        return self.bank_index * SENSORS_PER_BANK

    def with_sensor(self, line: int, occupied: bool) -> 'SensorBank':
        occupancy = list(self.occupancy)
        occupancy[line] = occupied
        return replace(self, occupancy=(occupancy[0], occupancy[1], occupancy[2], occupancy[3]))


@dataclass(frozen=True)
class DecodeResult:
    data: Optional[int]
    vt: bool


def default_banks(slot_count: int = 32) -> List[SensorBank]:
    """Banks with addresses 0x00.. covering `slot_count` slots"""
    count = math.ceil(slot_count / SENSORS_PER_BANK)
    return [SensorBank(bank_index=b, address=b) for b in range(count)]


def sense(bank: SensorBank) -> int:
    """Pack the bank's occupancy into a nibble; bit i is sensor i"""
    nibble = 0
    for line, occupied in enumerate(bank.occupancy):
        if occupied:
            nibble |= 1 << line
    return nibble


def _word(frame: Ht12Frame) -> BitStream:
    address = tuple((frame.address >> bit) & 1 for bit in range(ADDRESS_BITS - 1, -1, -1))
    data = tuple((frame.data >> bit) & 1 for bit in range(DATA_BITS - 1, -1, -1))
    return (SYNC_BIT,) + address + data


def encode(frame: Ht12Frame, repetitions: int = DEFAULT_REPETITIONS) -> BitStream:
    """Serialize `frame` as `repetitions` copies of [sync, A7..A0, D3..D0]"""
    if repetitions < 1:
        raise BitStreamError('repetitions must be >= 1')
    return _word(frame) * repetitions


def corrupt(stream: Sequence[int], flip_positions: Iterable[int]) -> BitStream:
    """Return a copy of `stream` with every listed position inverted"""
    bits = list(stream)
    for position in flip_positions:
        if not 0 <= position < len(bits):
            raise BitStreamError(f'flip position {position} outside stream of {len(bits)} bits')
        bits[position] ^= 1
    return tuple(bits)


def split_words(stream: Sequence[int]) -> List[Tuple[int, int, int]]:
    """Parse whole 13-bit words into (sync, address, data); a partial tail is dropped"""
    words = []
    for start in range(0, len(stream) - WORD_BITS + 1, WORD_BITS):
        chunk = stream[start:start + WORD_BITS]
        address = 0
        for bit in chunk[1:1 + ADDRESS_BITS]:
            address = (address << 1) | bit
        data = 0
        for bit in chunk[1 + ADDRESS_BITS:]:
            data = (data << 1) | bit
        words.append((chunk[0], address, data))
    return words


def decode(stream: Sequence[int], local_address: int, k: int = DEFAULT_THRESHOLD) -> DecodeResult:
    """
    HT12D behaviour: accept data once k consecutive words carry the sync bit,
    the local address and identical data.

    Args:
        stream: Received bits, word-aligned
        local_address: The decoder's 8-bit address setting
        k: Consecutive matching words required before VT goes high

    Returns:
        DecodeResult with the data nibble and vt=True, or (None, False)
    """
    if k < 1:
        raise BitStreamError('k must be >= 1')
    run = 0
    run_data: Optional[int] = None
    for sync, address, data in split_words(stream):
        if sync != SYNC_BIT or address != local_address:
            run, run_data = 0, None
            continue
        if data == run_data:
            run += 1
        else:
            run, run_data = 1, data
        if run >= k:
            return DecodeResult(run_data, True)
    return DecodeResult(None, False)


@dataclass
class _Sweep:
    bits: BitStream
    bank_bits: int
    flips: Set[int]
    position: int = 0


class RfLinkUnit:
    """IR sensor banks, HT12E encoder, channel and HT12D decoder as one component.

    A rising edge on the sweep-request line transmits every bank in turn, one bit
    per cycle. Each decoded bank is presented on rf_vt/rf_bank/rf_data for one
    cycle; fnd1 pulses after the last bank.
    """

    def __init__(self,
                 slot_count: int = 32,
                 repetitions: int = DEFAULT_REPETITIONS,
                 k: int = DEFAULT_THRESHOLD,
                 noise_rate: float = 0.0,
                 seed: int = 0,
                 request: str = 'fnd',
                 name: str = 'rf'):
        self.name = name
        self.slot_count = slot_count
        self.repetitions = repetitions
        self.k = k
        self.noise_rate = noise_rate
        self.request = request
        self.banks = default_banks(slot_count)
        self._rng = np.random.default_rng(seed)
        self._sweep: Optional[_Sweep] = None
        self._rx: List[int] = []
        self._pending_flips: Set[int] = set()
        self._prev_request = 0
        self.sweeps_completed = 0

    def declare(self, bus: SignalBus) -> None:
        bus.declare(SignalId('rf_tx'))
        bus.declare(SignalId('rf_rx'))
        bus.declare(SignalId('rf_vt'))
        bus.declare(SignalId('rf_bank', 3))
        bus.declare(SignalId('rf_data', DATA_BITS))
        bus.declare(SignalId('fnd1'))

    def set_occupancy(self, slot: int, occupied: bool) -> None:
        """Physical change seen by an IR sensor; the slot table learns it on the next sweep"""
        if not 0 <= slot < self.slot_count:
            raise SlotIndexError(f'slot {slot} out of range 0..{self.slot_count - 1}')
        bank, line = divmod(slot, SENSORS_PER_BANK)
        self.banks[bank] = self.banks[bank].with_sensor(line, occupied)

    def occupied(self, slot: int) -> bool:
        if not 0 <= slot < self.slot_count:
            raise SlotIndexError(f'slot {slot} out of range 0..{self.slot_count - 1}')
        bank, line = divmod(slot, SENSORS_PER_BANK)
        return self.banks[bank].occupancy[line]

    @property
    def sweep_bits(self) -> int:
        return len(self.banks) * WORD_BITS * self.repetitions

    @property
    def busy(self) -> bool:
        return self._sweep is not None

    def schedule_corruption(self, position: int, bus: Optional[SignalBus] = None) -> None:
        """Flip `position` of the sweep in progress, or of the next one if already sent"""
        if not 0 <= position < self.sweep_bits:
            if bus is not None:
                bus.note(f'corrupt position {position} outside a {self.sweep_bits}-bit sweep')
            return
        if self._sweep is not None and position >= self._sweep.position:
            self._sweep.flips.add(position)
        else:
            self._pending_flips.add(position)

    def _start_sweep(self) -> None:
        bits: BitStream = ()
        for bank in self.banks:
            bits += encode(Ht12Frame(bank.address, sense(bank)), self.repetitions)
        self._sweep = _Sweep(bits, WORD_BITS * self.repetitions, self._pending_flips)
        self._pending_flips = set()
        self._rx = []
        logger.debug(f'sensor sweep started: {len(bits)} bits')

    def _idle_outputs(self, bus: SignalBus) -> None:
        for name in ('rf_tx', 'rf_rx', 'rf_vt', 'rf_bank', 'rf_data', 'fnd1'):
            bus.write(name, 0)

    def tick(self, cycle: int, bus: SignalBus) -> None:
        request = bus.read(self.request)
        rising = request == 1 and self._prev_request == 0
        self._prev_request = request
        if bus.read('reset'):
            self._sweep = None
            self._rx = []
            self._idle_outputs(bus)
            return
        if rising:
            if self._sweep is None:
                self._start_sweep()
            else:
                bus.note('sweep request ignored: sweep in progress')
        self._idle_outputs(bus)
        sweep = self._sweep
        if sweep is None:
            return

        tx = sweep.bits[sweep.position]
        rx = tx ^ (1 if sweep.position in sweep.flips else 0)
        if self.noise_rate > 0.0 and self._rng.random() < self.noise_rate:
            rx ^= 1
        bus.write('rf_tx', tx)
        bus.write('rf_rx', rx)
        self._rx.append(rx)
        sweep.position += 1

        if sweep.position % sweep.bank_bits == 0:
            bank = self.banks[sweep.position // sweep.bank_bits - 1]
            result = decode(self._rx, bank.address, self.k)
            self._rx = []
            if result.vt and result.data is not None:
                bus.write('rf_vt', 1)
                bus.write('rf_bank', bank.bank_index)
                bus.write('rf_data', result.data)
            else:
                bus.note(f'bank {bank.bank_index} rejected: no valid transmission')
        if sweep.position == len(sweep.bits):
            self._sweep = None
            self.sweeps_completed += 1
            bus.write('fnd1', 1)
