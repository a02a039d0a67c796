from dataclasses import replace

from hypothesis import given, strategies as st
import pytest

from src.devices.stepper import (
    PHASE_SEQUENCE,
    DoorAction,
    StepperBench,
    StepperConfig,
    StepperState,
    StepperUnit,
    command_door,
    tick,
)
from src.errors import ConfigurationError, StepperBusyError
from src.scenario.stimulus import StimulusDriver
from src.sim.kernel import Simulation
from src.sim.signals import SignalId


def free_running():
    return replace(StepperState(), enabled=True)


def run_ticks(state, config, count):
    zs = []
    for _ in range(count):
        state, z = tick(state, config)
        zs.append(z)
    return state, zs


def test_one_step_per_div_cycles():
    config = StepperConfig(div=4)
    _, zs = run_ticks(free_running(), config, 16)
    assert zs == [8, 8, 8, 4, 4, 4, 4, 2, 2, 2, 2, 1, 1, 1, 1, 8]


def test_disabled_motor_holds_phase():
    state, zs = run_ticks(StepperState(), StepperConfig(div=2), 10)
    assert set(zs) == {8}
    assert state.steps_taken == 0


@given(div=st.integers(1, 8), cycles=st.integers(0, 200))
def test_one_hot_and_step_rate(div, cycles):
    config = StepperConfig(div=div)
    state, zs = run_ticks(free_running(), config, cycles)
    assert all(z in PHASE_SEQUENCE for z in zs)
    assert state.steps_taken == cycles // div


def test_door_commands_run_fixed_steps_and_reverse():
    config = StepperConfig(div=1, steps_per_door=6)
    state = command_door(StepperState(), DoorAction.OPEN, config)
    state, zs = run_ticks(state, config, 10)
    assert zs[:6] == [4, 2, 1, 8, 4, 2]
    assert not state.busy
    assert state.steps_taken == 6

    state = command_door(state, DoorAction.CLOSE, config)
    state, zs = run_ticks(state, config, 6)
    assert zs == [4, 8, 1, 2, 4, 8]
    assert state.z == PHASE_SEQUENCE[0]


def test_busy_motor_rejects_commands():
    state = command_door(StepperState(), DoorAction.OPEN)
    with pytest.raises(StepperBusyError):
        command_door(state, DoorAction.CLOSE)


@pytest.mark.parametrize('div,width', [(1, 1), (2, 1), (4, 2), (5, 3), (256, 8)])
def test_counter_width(div, width):
    assert StepperConfig(div=div).cnt_width == width


def test_config_validation():
    with pytest.raises(ConfigurationError):
        StepperConfig(div=0)
    with pytest.raises(ConfigurationError):
        StepperConfig(steps_per_door=0)


def test_bench_opens_door_when_reset_released():
    stepper = StepperUnit(StepperConfig(div=4, steps_per_door=48))
    stim = StimulusDriver([SignalId('reset')])
    stim.schedule_set(0, 'reset', 1)
    stim.schedule_set(4, 'reset', 0)
    sim = Simulation()
    sim.register_component(stim, order=0)
    sim.register_component(StepperBench(stepper), order=4)
    sim.register_component(stepper, order=5)
    trace = sim.run(300)

    steps = [e.cycle for e in trace.changes('Z')]
    assert steps == [7 + 4 * i for i in range(48)]
    assert trace.value_at('door_busy', 194) == 1
    assert trace.value_at('door_busy', 195) == 0
    assert stepper.total_steps == 48
    assert trace.value_at('clkd', 7) == 1
