from collections import deque
from dataclasses import dataclass, replace
from typing import Deque, Iterable, List, Optional, Tuple
import logging

from src.errors import LcdTextError
from src.sim.signals import SignalBus, SignalId

logger = logging.getLogger(__name__)

ROWS = 2
COLUMNS = 16
ROW_BASES = (0x00, 0x40)
BLANK = 0x20

CMD_CLEAR = 0x01
CMD_DISPLAY_ON = 0x0C
CMD_FUNCTION_SET = 0x38
CMD_SET_DDRAM = 0x80

MSG_SPACE_AVAILABLE = 'SPACE AVAILABLE'
MSG_NO_SPACE = 'NO SPACE EXIT'


@dataclass(frozen=True)
class LcdBus:
    rs: int = 0
    rw: int = 0
    e: int = 0
    db: int = 0


@dataclass(frozen=True)
class LcdDeviceState:
    rows: Tuple[bytes, bytes] = (bytes([BLANK]) * COLUMNS, bytes([BLANK]) * COLUMNS)
    cursor: int = 0x00
    display_on: bool = False

    def row_text(self, row: int) -> str:
        return self.rows[row].decode('ascii')


def valid_ddram(address: int) -> bool:
    return any(base <= address < base + COLUMNS for base in ROW_BASES)


def _cell(address: int) -> Tuple[int, int]:
    row = 0 if address < ROW_BASES[1] else 1
    return row, address - ROW_BASES[row]


def apply(state: LcdDeviceState, bus: LcdBus) -> Tuple[LcdDeviceState, Optional[str]]:
    """
    Latch one bus transaction (called on a falling edge of E)

    Returns:
        The new device state and a warning for ignored transactions
    """
    if bus.rw:
        return state, 'read cycles are not modeled'
    if bus.rs:
        row, column = _cell(state.cursor)
        cells = bytearray(state.rows[row])
        cells[column] = bus.db & 0xFF
        rows = (bytes(cells), state.rows[1]) if row == 0 else (state.rows[0], bytes(cells))
        cursor = state.cursor + 1 if column < COLUMNS - 1 else state.cursor
        return replace(state, rows=rows, cursor=cursor), None

    command = bus.db
    if command == CMD_CLEAR:
        return replace(state, rows=LcdDeviceState().rows, cursor=0x00), None
    if command == CMD_DISPLAY_ON:
        return replace(state, display_on=True), None
    if command == CMD_FUNCTION_SET:
        return state, None
    if command & CMD_SET_DDRAM:
        address = command & 0x7F
        if not valid_ddram(address):
            return state, f'set cursor to invalid DDRAM address 0x{address:02X}'
        return replace(state, cursor=address), None
    return state, f'unsupported command 0x{command:02X}'


def _check_text(text: str) -> None:
    if len(text) > COLUMNS:
        raise LcdTextError(f'{text!r} is longer than {COLUMNS} characters')
    for char in text:
        if not 0x20 <= ord(char) <= 0x7E:
            raise LcdTextError(f'{text!r} contains non-printable {char!r}')


def command(code: int) -> LcdBus:
    return LcdBus(rs=0, rw=0, e=1, db=code)


def render_message(text: str, row: int = 0) -> List[LcdBus]:
    """Set the cursor to the start of `row`, then write one data cycle per character"""
    if row not in (0, 1):
        raise LcdTextError(f'row must be 0 or 1, got {row}')
    _check_text(text)
    transactions = [command(CMD_SET_DDRAM | ROW_BASES[row])]
    transactions.extend(LcdBus(rs=1, rw=0, e=1, db=ord(char)) for char in text)
    return transactions


def init_sequence() -> List[LcdBus]:
    return [command(CMD_FUNCTION_SET), command(CMD_DISPLAY_ON), command(CMD_CLEAR)]


def replay(transactions: Iterable[LcdBus],
           state: Optional[LcdDeviceState] = None) -> LcdDeviceState:
    """Apply transactions directly, as if each had been strobed on the bus"""
    state = state or LcdDeviceState()
    for transaction in transactions:
        state, _ = apply(state, transaction)
    return state


class LcdDevice:
    """HD44780-style device side: samples the bus and latches on E falling"""

    def __init__(self) -> None:
        self.state = LcdDeviceState()
        self._prev_e = 0

    def reset(self) -> None:
        self.state = LcdDeviceState()
        self._prev_e = 0

    def sample(self, bus: LcdBus) -> Optional[str]:
        falling = self._prev_e == 1 and bus.e == 0
        self._prev_e = bus.e
        if not falling:
            return None
        self.state, warning = apply(self.state, bus)
        return warning


class LcdUnit:
    """Character LCD driver and device.

    Each queued transaction takes two cycles: E high with RS/RW/D stable, then E
    low, on which the device latches.
    """

    def __init__(self, name: str = 'lcd'):
        self.name = name
        self.device = LcdDevice()
        self._queue: Deque[LcdBus] = deque(init_sequence())
        self._current: Optional[LcdBus] = None
        self.messages: List[Tuple[int, str]] = []

    def declare(self, bus: SignalBus) -> None:
        bus.declare(SignalId('rs'))
        bus.declare(SignalId('rw'))
        bus.declare(SignalId('E'))
        bus.declare(SignalId('D', 8))

    def show(self, text: str, row: int = 0, cycle: int = 0) -> None:
        """Clear the display and write `text` on `row`"""
        transactions = render_message(text, row)
        self._queue.append(command(CMD_CLEAR))
        self._queue.extend(transactions)
        self.messages.append((cycle, text))
        logger.info(f'LCD row {row}: {text!r}')

    @property
    def idle(self) -> bool:
        return self._current is None and not self._queue

    def row_text(self, row: int) -> str:
        return self.device.state.row_text(row)

    def tick(self, cycle: int, bus: SignalBus) -> None:
        if bus.read('reset'):
            self.device.reset()
            self._queue = deque(init_sequence())
            self._current = None
            driven = LcdBus()
        elif self._current is not None:
            driven = replace(self._current, e=0)
            self._current = None
        elif self._queue:
            self._current = self._queue.popleft()
            driven = replace(self._current, e=1)
        else:
            driven = LcdBus()

        bus.write('rs', driven.rs)
        bus.write('rw', driven.rw)
        bus.write('E', driven.e)
        bus.write('D', driven.db)
        if not bus.read('reset'):
            warning = self.device.sample(driven)
            if warning:
                bus.note(warning)
