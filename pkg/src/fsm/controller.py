from dataclasses import dataclass, replace
from enum import Enum
from typing import FrozenSet, List, Optional, Tuple
import logging

from src.devices.lcd import MSG_NO_SPACE, MSG_SPACE_AVAILABLE, LcdUnit
from src.devices.stepper import DoorAction, StepperUnit
from src.fsm.slot_allocator import (
    SlotAllocatorUnit,
    SlotStatus,
    decode_slotallot,
)
from src.sim.signals import SignalBus, SignalId

logger = logging.getLogger(__name__)

COUT_WIDTH = 6
DEFAULT_IDENT_TIMEOUT = 32


class Phase(Enum):
    IDLE = 0
    SPACE_CHECK = 1
    DISPLAY_NO_SPACE = 2
    OPEN_DOOR = 3
    IDENTIFY = 4
    SLOT_CHECK = 5
    ALLOT = 6
    CLOSE_DOOR = 7


@dataclass(frozen=True)
class ControllerState:
    phase: Phase = Phase.IDLE
    prev_car_enter: int = 0
    prev_a: int = 0
    allotted: FrozenSet[int] = frozenset()
    wait_cycles: int = 0
    alloc_pending: bool = False

    @property
    def cout(self) -> int:
        return len(self.allotted)


@dataclass(frozen=True)
class ControllerInputs:
    """Top-level ports plus what the controller observes of its sub-modules"""

    reset: int = 0
    car_enter: int = 0
    a: int = 0
    exit_slot: int = 0
    slot_status: Tuple[SlotStatus, ...] = ()
    door_busy: int = 0
    out_1: int = 0
    slotallot: int = 0

    @property
    def free_count(self) -> int:
        return sum(1 for status in self.slot_status if status is SlotStatus.EMPTY)


@dataclass(frozen=True)
class ControllerOutputs:
    door: Optional[DoorAction] = None
    message: Optional[str] = None
    ident_w: int = 0
    ident_ack: int = 0
    alloc_w: int = 0
    release: Optional[int] = None
    allotted_slot: Optional[int] = None
    cout: int = 0
    warnings: Tuple[str, ...] = ()


def handle_exit(state: ControllerState,
                slot: int,
                capacity: int) -> Tuple[ControllerState, Optional[int], Optional[str]]:
    """
    Process an exit request for `slot`

    Returns:
        The new state, the slot to release (None if invalid) and a warning
    """
    if not 0 <= slot < capacity:
        return state, None, f'exit for invalid slot {slot}'
    if slot not in state.allotted:
        return state, slot, f'exit for slot {slot} which was not allotted'
    return replace(state, allotted=state.allotted - {slot}), slot, None


def controller_step(state: ControllerState,
                    inputs: ControllerInputs,
                    ident_timeout: int = DEFAULT_IDENT_TIMEOUT
                    ) -> Tuple[ControllerState, ControllerOutputs]:
    """
    One clock of the top-level parking controller

    Entry sequence: space check, LCD message, door open, identification, slot
    check, allotment, door close. Exits are handled in every phase.
    """
    if inputs.reset:
        return (
            ControllerState(prev_car_enter=inputs.car_enter, prev_a=inputs.a),
            ControllerOutputs(),
        )

    warnings: List[str] = []
    door: Optional[DoorAction] = None
    message: Optional[str] = None
    release: Optional[int] = None
    allotted_slot: Optional[int] = None
    ident_w = ident_ack = alloc_w = 0

    # a car that left without an exit request no longer counts
    vacated = {
        slot for slot in state.allotted
        if slot < len(inputs.slot_status) and inputs.slot_status[slot] is SlotStatus.EMPTY
    }
    if vacated:
        warnings.extend(f'slot {slot} vacated without exit request' for slot in sorted(vacated))
        state = replace(state, allotted=state.allotted - vacated)

    if inputs.a and not state.prev_a:
        state, release, warning = handle_exit(
            state, inputs.exit_slot, len(inputs.slot_status)
        )
        if warning:
            warnings.append(warning)

    car_arrived = inputs.car_enter == 1 and state.prev_car_enter == 0
    phase = state.phase
    next_phase = phase
    wait_cycles = state.wait_cycles
    alloc_pending = state.alloc_pending
    allotted = state.allotted

    if car_arrived and phase is not Phase.IDLE:
        warnings.append(f'car_enter ignored in phase {phase.name}')

    if phase is Phase.IDLE:
        if car_arrived:
            next_phase = Phase.SPACE_CHECK
    elif phase is Phase.SPACE_CHECK:
        if inputs.free_count > 0:
            message = MSG_SPACE_AVAILABLE
            door = DoorAction.OPEN
            next_phase = Phase.OPEN_DOOR
        else:
            message = MSG_NO_SPACE
            next_phase = Phase.DISPLAY_NO_SPACE
    elif phase is Phase.DISPLAY_NO_SPACE:
        if not inputs.car_enter:
            next_phase = Phase.IDLE
    elif phase is Phase.OPEN_DOOR:
        if not inputs.door_busy:
            ident_w = 1
            wait_cycles = 0
            next_phase = Phase.IDENTIFY
    elif phase is Phase.IDENTIFY:
        if inputs.out_1:
            next_phase = Phase.SLOT_CHECK
        elif wait_cycles + 1 > ident_timeout:
            warnings.append(f'identification timed out after {ident_timeout} cycles')
            ident_ack = 1
            door = DoorAction.CLOSE
            next_phase = Phase.CLOSE_DOOR
        else:
            ident_w = 1
            wait_cycles += 1
    elif phase is Phase.SLOT_CHECK:
        ident_ack = 1
        next_phase = Phase.ALLOT
    elif phase is Phase.ALLOT:
        if not alloc_pending:
            alloc_w = 1
            alloc_pending = True
        else:
            alloc_pending = False
            slot = decode_slotallot(inputs.slotallot)
            if slot is None:
                warnings.append('allocation failed: lot filled since space check')
                message = MSG_NO_SPACE
            else:
                allotted = allotted | {slot}
                allotted_slot = slot
            door = DoorAction.CLOSE
            next_phase = Phase.CLOSE_DOOR
    elif phase is Phase.CLOSE_DOOR:
        # releases an identification that completed after a timeout
        ident_ack = 1
        if not inputs.door_busy:
            next_phase = Phase.IDLE

    new_state = ControllerState(
        phase=next_phase,
        prev_car_enter=inputs.car_enter,
        prev_a=inputs.a,
        allotted=allotted,
        wait_cycles=wait_cycles,
        alloc_pending=alloc_pending,
    )
    return new_state, ControllerOutputs(
        door=door,
        message=message,
        ident_w=ident_w,
        ident_ack=ident_ack,
        alloc_w=alloc_w,
        release=release,
        allotted_slot=allotted_slot,
        cout=new_state.cout,
        warnings=tuple(warnings),
    )


class ControllerUnit:
    """Owns the allocator, stepper and LCD units and applies the FSM's commands"""

    def __init__(self,
                 allocator: SlotAllocatorUnit,
                 stepper: StepperUnit,
                 lcd: LcdUnit,
                 ident_timeout: int = DEFAULT_IDENT_TIMEOUT,
                 name: str = 'ctrl'):
        self.name = name
        self.allocator = allocator
        self.stepper = stepper
        self.lcd = lcd
        self.ident_timeout = ident_timeout
        self.state = ControllerState()
        self.allotments: List[Tuple[int, int]] = []

    def declare(self, bus: SignalBus) -> None:
        bus.declare(SignalId('ctrl.state', 3))
        bus.declare(SignalId('cout', COUT_WIDTH))
        bus.declare(SignalId('ident.w'))
        bus.declare(SignalId('ident.ack'))
        bus.declare(SignalId('alloc.w'))

    @property
    def cout(self) -> int:
        return self.state.cout

    def tick(self, cycle: int, bus: SignalBus) -> None:
        inputs = ControllerInputs(
            reset=bus.read('reset'),
            car_enter=bus.read('car_enter'),
            a=bus.read('a'),
            exit_slot=bus.read('exit_slot'),
            slot_status=self.allocator.table.status,
            door_busy=bus.read('door_busy'),
            out_1=bus.read('out_1'),
            slotallot=bus.read('slotallot'),
        )
        previous = self.state.phase
        self.state, outputs = controller_step(self.state, inputs, self.ident_timeout)
        if self.state.phase is not previous:
            logger.debug(f'[{cycle}] {previous.name} -> {self.state.phase.name}')

        for warning in outputs.warnings:
            bus.note(warning)
        if outputs.release is not None:
            self.allocator.release(outputs.release)
        if outputs.message is not None:
            self.lcd.show(outputs.message, row=0, cycle=cycle)
        if outputs.door is not None:
            self.stepper.command(outputs.door)
        if outputs.allotted_slot is not None:
            self.allotments.append((cycle, outputs.allotted_slot))

        bus.write('ctrl.state', self.state.phase.value)
        bus.write('cout', outputs.cout)
        bus.write('ident.w', outputs.ident_w)
        bus.write('ident.ack', outputs.ident_ack)
        bus.write('alloc.w', outputs.alloc_w)
