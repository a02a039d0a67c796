from dataclasses import dataclass, replace
from enum import Enum
from typing import FrozenSet, Iterable, List, Optional, Tuple
import logging

from src.errors import CardCodeError
from src.sim.signals import SignalBus, SignalId

logger = logging.getLogger(__name__)

CODE_BITS = 8


class IdentState(Enum):
    IDLE = 0
    CAPTURE = 1
    LOOKUP = 2
    IDENTIFIED = 3
    NEW_MEMBER = 4


def _check_code(code: int) -> None:
    if not 0 <= code < 1 << CODE_BITS:
        raise CardCodeError(f'card code {code} does not fit in {CODE_BITS} bits')


@dataclass(frozen=True)
class MemberRegistry:
    member_codes: FrozenSet[int] = frozenset()
    next_temp_card: int = 1

    def __contains__(self, code: int) -> bool:
        return code in self.member_codes

    def allot_temp_card(self) -> Tuple[int, 'MemberRegistry']:
        return self.next_temp_card, replace(self, next_temp_card=self.next_temp_card + 1)


def add_member(registry: MemberRegistry, code: int) -> MemberRegistry:
    _check_code(code)
    return replace(registry, member_codes=registry.member_codes | {code})


@dataclass(frozen=True)
class IdentFsmState:
    state: IdentState = IdentState.IDLE
    captured_code: int = 0
    bits_captured: int = 0
    temp_card: Optional[int] = None


@dataclass(frozen=True)
class IdentInputs:
    w: int = 0
    w1: int = 0
    w2: int = 0
    z: int = 0


@dataclass(frozen=True)
class IdentOutputs:
    out_1: int = 0
    identified: int = 0
    new_member: int = 0
    temp_card: Optional[int] = None


def ident_step(state: IdentFsmState,
               registry: MemberRegistry,
               inputs: IdentInputs,
               reset: int = 0) -> Tuple[IdentFsmState, MemberRegistry, IdentOutputs]:
    """
    One clock of the visitor identification FSM

    Idle waits for the card-present strobe w; Capture shifts w1 in MSB first on
    every w2 strobe; Lookup resolves the code against the registry; Identified
    and NewMember hold their outputs until z acknowledges them. z during
    Capture aborts without allotting a card.
    """
    if reset:
        return IdentFsmState(), registry, IdentOutputs()

    current = state.state
    if current is IdentState.IDLE:
        if inputs.w:
            return IdentFsmState(state=IdentState.CAPTURE), registry, IdentOutputs()
        return state, registry, IdentOutputs()

    if current is IdentState.CAPTURE:
        if inputs.z:
            return IdentFsmState(), registry, IdentOutputs()
        if not inputs.w2:
            return state, registry, IdentOutputs()
        code = ((state.captured_code << 1) | (inputs.w1 & 1)) & ((1 << CODE_BITS) - 1)
        bits = state.bits_captured + 1
        next_state = IdentState.LOOKUP if bits == CODE_BITS else IdentState.CAPTURE
        return (
            IdentFsmState(state=next_state, captured_code=code, bits_captured=bits),
            registry,
            IdentOutputs(),
        )

    if current is IdentState.LOOKUP:
        if state.captured_code in registry:
            return (
                replace(state, state=IdentState.IDENTIFIED),
                registry,
                IdentOutputs(out_1=1, identified=1),
            )
        card, registry = registry.allot_temp_card()
        return (
            replace(state, state=IdentState.NEW_MEMBER, temp_card=card),
            registry,
            IdentOutputs(out_1=1, new_member=1, temp_card=card),
        )

    # Identified / NewMember hold until acknowledged
    if inputs.z:
        return IdentFsmState(), registry, IdentOutputs()
    if current is IdentState.IDENTIFIED:
        return state, registry, IdentOutputs(identified=1)
    return state, registry, IdentOutputs(new_member=1, temp_card=state.temp_card)


@dataclass(frozen=True)
class IdentPortMap:
    """Bus signals feeding the FSM's w, w1, w2 and z inputs (z lines are OR-ed)"""

    w: str = 'w'
    w1: str = 'w1'
    w2: str = 'w2'
    z: Tuple[str, ...] = ('z',)


@dataclass(frozen=True)
class Completion:
    cycle: int
    code: int
    identified: bool
    temp_card: Optional[int] = None


class IdentificationUnit:
    def __init__(self,
                 ports: IdentPortMap = IdentPortMap(),
                 members: Iterable[int] = (),
                 name: str = 'ident'):
        self.name = name
        self.ports = ports
        registry = MemberRegistry()
        for code in members:
            registry = add_member(registry, code)
        self.registry = registry
        self.state = IdentFsmState()
        self.outputs = IdentOutputs()
        self.completions: List[Completion] = []

    def declare(self, bus: SignalBus) -> None:
        bus.declare(SignalId('ident.state', 3))
        bus.declare(SignalId('ident.code', CODE_BITS))
        bus.declare(SignalId('out_1'))
        bus.declare(SignalId('identified'))
        bus.declare(SignalId('new_member'))
        bus.declare(SignalId('temp_card', 8))

    @property
    def temp_cards(self) -> List[int]:
        return [c.temp_card for c in self.completions if c.temp_card is not None]

    def tick(self, cycle: int, bus: SignalBus) -> None:
        inputs = IdentInputs(
            w=bus.read(self.ports.w),
            w1=bus.read(self.ports.w1),
            w2=bus.read(self.ports.w2),
            z=int(any(bus.read(name) for name in self.ports.z)),
        )
        self.state, self.registry, self.outputs = ident_step(
            self.state, self.registry, inputs, bus.read('reset')
        )
        outputs = self.outputs
        if outputs.out_1:
            completion = Completion(
                cycle, self.state.captured_code, bool(outputs.identified), outputs.temp_card
            )
            self.completions.append(completion)
            if completion.identified:
                logger.info(f'[{cycle}] member 0x{completion.code:02X} identified')
            else:
                bus.note(
                    f'temporary card {outputs.temp_card} allotted to code 0x{completion.code:02X}',
                    level='info',
                )

        bus.write('ident.state', self.state.state.value)
        bus.write('ident.code', self.state.captured_code)
        bus.write('out_1', outputs.out_1)
        bus.write('identified', outputs.identified)
        bus.write('new_member', outputs.new_member)
        bus.write('temp_card', (outputs.temp_card or 0) & 0xFF)
