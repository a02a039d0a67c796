from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple
import logging

from src.errors import ConfigurationError, StepperBusyError
from src.sim.signals import SignalBus, SignalId

logger = logging.getLogger(__name__)

# full-step, one phase on; the ULN2003 passes this word straight to the coils
PHASE_SEQUENCE = (0b1000, 0b0100, 0b0010, 0b0001)
DEFAULT_DIV = 4
DEFAULT_STEPS_PER_DOOR = 48


class Direction(Enum):
    CW = 'cw'
    CCW = 'ccw'


class DoorAction(Enum):
    OPEN = 'open'
    CLOSE = 'close'


@dataclass(frozen=True)
class StepperConfig:
    div: int = DEFAULT_DIV
    steps_per_door: int = DEFAULT_STEPS_PER_DOOR

    def __post_init__(self) -> None:
        if self.div < 1:
            raise ConfigurationError('div must be >= 1')
        if self.steps_per_door < 1:
            raise ConfigurationError('steps_per_door must be >= 1')

    @property
    def cnt_width(self) -> int:
        return max(1, (self.div - 1).bit_length())


@dataclass(frozen=True)
class StepperState:
    phase_index: int = 0
    cnt: int = 0
    steps_taken: int = 0
    direction: Direction = Direction.CW
    enabled: bool = False
    remaining: Optional[int] = None
    clkd: bool = False

    @property
    def busy(self) -> bool:
        """True while a door command is still stepping"""
        return self.remaining is not None

    @property
    def z(self) -> int:
        return PHASE_SEQUENCE[self.phase_index]


def tick(state: StepperState, config: StepperConfig = StepperConfig()) -> Tuple[StepperState, int]:
    """Advance the divider by one clock; step the motor when it wraps while enabled"""
    cnt = (state.cnt + 1) % config.div
    wrapped = cnt == 0
    if not (wrapped and state.enabled):
        new_state = replace(state, cnt=cnt, clkd=wrapped)
        return new_state, new_state.z

    delta = 1 if state.direction is Direction.CW else -1
    enabled = state.enabled
    remaining = state.remaining
    if remaining is not None:
        remaining -= 1
        if remaining == 0:
            enabled, remaining = False, None
    new_state = replace(
        state,
        cnt=cnt,
        clkd=True,
        phase_index=(state.phase_index + delta) % len(PHASE_SEQUENCE),
        steps_taken=state.steps_taken + 1,
        enabled=enabled,
        remaining=remaining,
    )
    return new_state, new_state.z


def command_door(state: StepperState,
                 action: DoorAction,
                 config: StepperConfig = StepperConfig()) -> StepperState:
    """Start a door movement of `steps_per_door` steps (cw opens, ccw closes)"""
    if state.busy:
        raise StepperBusyError(f'door command {action.value} rejected: motor busy')
    direction = Direction.CW if action is DoorAction.OPEN else Direction.CCW
    return replace(
        state, direction=direction, enabled=True, remaining=config.steps_per_door
    )


class StepperUnit:
    """Door motor driver: clock divider, phase sequencer and door commands"""

    def __init__(self, config: StepperConfig = StepperConfig(), name: str = 'stepper'):
        self.name = name
        self.config = config
        self.state = StepperState()
        self.total_steps = 0

    def declare(self, bus: SignalBus) -> None:
        bus.declare(SignalId('Z', 4), initial=self.state.z)
        bus.declare(SignalId('clkd'))
        bus.declare(SignalId('stepper.cnt', self.config.cnt_width))
        bus.declare(SignalId('door_busy'))

    def command(self, action: DoorAction) -> None:
        self.state = command_door(self.state, action, self.config)
        logger.info(f'door {action.value}: {self.config.steps_per_door} steps')

    @property
    def busy(self) -> bool:
        return self.state.busy

    def tick(self, cycle: int, bus: SignalBus) -> None:
        if bus.read('reset'):
            self.state = StepperState()
            z = self.state.z
        else:
            before = self.state.steps_taken
            self.state, z = tick(self.state, self.config)
            self.total_steps += self.state.steps_taken - before
        bus.write('Z', z)
        bus.write('clkd', int(self.state.clkd))
        bus.write('stepper.cnt', self.state.cnt)
        bus.write('door_busy', int(self.state.busy))


class StepperBench:
    """Drives the motor on its own: one door opening when reset is released"""

    def __init__(self, stepper: StepperUnit, name: str = 'bench'):
        self.name = name
        self.stepper = stepper
        self._prev_reset = 0

    def declare(self, bus: SignalBus) -> None:
        pass

    def tick(self, cycle: int, bus: SignalBus) -> None:
        reset = bus.read('reset')
        if self._prev_reset and not reset and not self.stepper.busy:
            self.stepper.command(DoorAction.OPEN)
        self._prev_reset = reset
