from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple, Union
import logging
import re

from src.errors import ScenarioParseError
from src.fsm.slot_allocator import SlotStatus

logger = logging.getLogger(__name__)


class SystemKind(Enum):
    FULL = 'full'
    STEPPER = 'stepper'
    IDENTIFICATION = 'identification'
    ALLOCATOR = 'allocator'


@dataclass(frozen=True)
class SetDirective:
    at: int
    signal: str
    value: int


@dataclass(frozen=True)
class AssertDirective:
    at: int
    signal: str
    value: int
    bits: Optional[Tuple[int, int]] = None  # (msb, lsb)

    @property
    def target(self) -> str:
        if self.bits is None:
            return self.signal
        msb, lsb = self.bits
        return f'{self.signal}[{msb}]' if msb == lsb else f'{self.signal}[{msb}:{lsb}]'


@dataclass(frozen=True)
class MemberDirective:
    code: int


@dataclass(frozen=True)
class SlotDirective:
    index: int
    status: SlotStatus


@dataclass(frozen=True)
class CorruptDirective:
    at: int
    bit: int


@dataclass(frozen=True)
class CardDirective:
    at: int
    code: int


@dataclass(frozen=True)
class OccupancyDirective:
    at: int
    slot: int
    occupied: bool


@dataclass(frozen=True)
class ExpectLcdDirective:
    row: int
    text: str


@dataclass(frozen=True)
class ExpectSlotDirective:
    index: int
    status: SlotStatus


Directive = Union[
    SetDirective,
    AssertDirective,
    MemberDirective,
    SlotDirective,
    CorruptDirective,
    CardDirective,
    OccupancyDirective,
    ExpectLcdDirective,
    ExpectSlotDirective,
]


@dataclass(frozen=True)
class Scenario:
    directives: Tuple[Directive, ...]
    total: int
    system: SystemKind = SystemKind.FULL

    def of_type(self, kind: type) -> List[Directive]:
        return [directive for directive in self.directives if isinstance(directive, kind)]


_NAME = r'[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*'
_TARGET_RE = re.compile(rf'^({_NAME})(?:\[(\d+)(?::(\d+))?\])?$')
_LCD_RE = re.compile(r'^expect\s+lcd\s+(\S+)(?:\s(.*))?$')


def _number(token: str, line: int, what: str) -> int:
    try:
        value = int(token, 16) if token.lower().startswith('0x') else int(token, 10)
    except ValueError:
        raise ScenarioParseError(line, f'bad {what} {token!r}') from None
    if value < 0:
        raise ScenarioParseError(line, f'{what} must be non-negative, got {value}')
    return value


def _status(token: str, line: int) -> SlotStatus:
    try:
        return SlotStatus(token.lower())
    except ValueError:
        raise ScenarioParseError(line, f'unknown slot status {token!r}') from None


def _target(token: str, line: int) -> Tuple[str, Optional[Tuple[int, int]]]:
    match = _TARGET_RE.match(token)
    if not match:
        raise ScenarioParseError(line, f'bad signal reference {token!r}')
    name, msb, lsb = match.groups()
    if msb is None:
        return name, None
    high = int(msb)
    low = int(lsb) if lsb is not None else high
    if low > high:
        raise ScenarioParseError(line, f'bit slice [{high}:{low}] must be [msb:lsb]')
    return name, (high, low)


def _expect_arity(tokens: List[str], count: int, line: int) -> None:
    if len(tokens) != count:
        raise ScenarioParseError(line, f'{tokens[0]!r} takes {count - 1} arguments')


def _parse_at(tokens: List[str], line: int) -> Directive:
    if len(tokens) < 3:
        raise ScenarioParseError(line, 'expected "at <cycle> <action> ..."')
    at = _number(tokens[1], line, 'cycle')
    action = tokens[2]
    if action == 'set':
        if len(tokens) != 5:
            raise ScenarioParseError(line, 'expected "at <cycle> set <name> <value>"')
        name, bits = _target(tokens[3], line)
        if bits is not None:
            raise ScenarioParseError(line, 'set does not take a bit slice')
        return SetDirective(at, name, _number(tokens[4], line, 'value'))
    if action in ('corrupt', 'card', 'occupy', 'vacate'):
        if len(tokens) != 4:
            raise ScenarioParseError(line, f'expected "at <cycle> {action} <number>"')
        value = _number(tokens[3], line, action)
        if action == 'corrupt':
            return CorruptDirective(at, value)
        if action == 'card':
            return CardDirective(at, value)
        return OccupancyDirective(at, value, occupied=action == 'occupy')
    raise ScenarioParseError(line, f'unknown action {action!r}')


def parse_scenario(text: str) -> Scenario:
    """
    Parse a scenario script. Every line is a comment, a directive, or an error
    naming its line number.
    """
    directives: List[Directive] = []
    system = SystemKind.FULL
    total: Optional[int] = None
    run_line = 0
    line_count = 0

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line_count = line_no
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        if total is not None:
            raise ScenarioParseError(line_no, f'directive after "run" (line {run_line})')
        tokens = line.split()
        keyword = tokens[0]

        if keyword == 'run':
            _expect_arity(tokens, 2, line_no)
            total = _number(tokens[1], line_no, 'cycle count')
            run_line = line_no
        elif keyword == 'system':
            _expect_arity(tokens, 2, line_no)
            try:
                system = SystemKind(tokens[1])
            except ValueError:
                raise ScenarioParseError(line_no, f'unknown system {tokens[1]!r}') from None
        elif keyword == 'member':
            _expect_arity(tokens, 2, line_no)
            directives.append(MemberDirective(_number(tokens[1], line_no, 'card code')))
        elif keyword == 'slot':
            _expect_arity(tokens, 3, line_no)
            directives.append(
                SlotDirective(_number(tokens[1], line_no, 'slot'), _status(tokens[2], line_no))
            )
        elif keyword == 'at':
            directives.append(_parse_at(tokens, line_no))
        elif keyword == 'assert':
            _expect_arity(tokens, 4, line_no)
            name, bits = _target(tokens[2], line_no)
            directives.append(
                AssertDirective(
                    _number(tokens[1], line_no, 'cycle'),
                    name,
                    _number(tokens[3], line_no, 'value'),
                    bits,
                )
            )
        elif keyword == 'expect':
            directives.append(_parse_expect(line, tokens, line_no))
        else:
            raise ScenarioParseError(line_no, f'unknown directive {keyword!r}')

    if total is None:
        raise ScenarioParseError(line_count + 1, 'missing "run <cycles>" directive')
    for directive in directives:
        at = getattr(directive, 'at', None)
        if at is not None and at > total:
            raise ScenarioParseError(run_line, f'cycle {at} lies beyond run total {total}')
    return Scenario(tuple(directives), total, system)


def _parse_expect(line: str, tokens: List[str], line_no: int) -> Directive:
    if len(tokens) < 2:
        raise ScenarioParseError(line_no, 'expected "expect lcd|slot ..."')
    if tokens[1] == 'lcd':
        match = _LCD_RE.match(line)
        if not match:
            raise ScenarioParseError(line_no, 'expected "expect lcd <row> <text>"')
        row = _number(match.group(1), line_no, 'row')
        if row not in (0, 1):
            raise ScenarioParseError(line_no, f'LCD row must be 0 or 1, got {row}')
        return ExpectLcdDirective(row, (match.group(2) or '').rstrip())
    if tokens[1] == 'slot':
        if len(tokens) != 4:
            raise ScenarioParseError(line_no, 'expected "expect slot <index> <status>"')
        return ExpectSlotDirective(
            _number(tokens[2], line_no, 'slot'), _status(tokens[3], line_no)
        )
    raise ScenarioParseError(line_no, f'unknown expectation {tokens[1]!r}')


def format_directive(directive: Directive) -> str:
    if isinstance(directive, SetDirective):
        return f'at {directive.at} set {directive.signal} {directive.value}'
    if isinstance(directive, AssertDirective):
        return f'assert {directive.at} {directive.target} {directive.value}'
    if isinstance(directive, MemberDirective):
        return f'member 0x{directive.code:02X}'
    if isinstance(directive, SlotDirective):
        return f'slot {directive.index} {directive.status.value}'
    if isinstance(directive, CorruptDirective):
        return f'at {directive.at} corrupt {directive.bit}'
    if isinstance(directive, CardDirective):
        return f'at {directive.at} card 0x{directive.code:02X}'
    if isinstance(directive, OccupancyDirective):
        action = 'occupy' if directive.occupied else 'vacate'
        return f'at {directive.at} {action} {directive.slot}'
    if isinstance(directive, ExpectLcdDirective):
        return f'expect lcd {directive.row} {directive.text}'.rstrip()
    return f'expect slot {directive.index} {directive.status.value}'


def format_scenario(scenario: Scenario) -> str:
    """Pretty-print a scenario; parse_scenario is its inverse"""
    lines = []
    if scenario.system is not SystemKind.FULL:
        lines.append(f'system {scenario.system.value}')
    lines.extend(format_directive(directive) for directive in scenario.directives)
    lines.append(f'run {scenario.total}')
    return '\n'.join(lines) + '\n'
