from dataclasses import replace
import random

import pytest

from src.config import MAX_IDENT_TIMEOUT, SimConfig
from src.devices.lcd import MSG_NO_SPACE, MSG_SPACE_AVAILABLE
from src.devices.stepper import DoorAction
from src.fsm.controller import (
    ControllerInputs,
    ControllerState,
    Phase,
    controller_step,
    handle_exit,
)
from src.fsm.slot_allocator import SlotStatus, encode_slotallot
from src.scenario.parser import SystemKind
from src.scenario.runner import build_system

E, F, R = SlotStatus.EMPTY, SlotStatus.FILLED, SlotStatus.RESERVED
FREE_LOT = (E, E, E, E)
FULL_LOT = (F, F, F, F)


def inputs(**overrides):
    return replace(ControllerInputs(slot_status=FREE_LOT), **overrides)


class TestControllerStep:
    def test_rising_car_enter_starts_space_check(self):
        state, out = controller_step(ControllerState(), inputs(car_enter=1))
        assert state.phase is Phase.SPACE_CHECK
        state, out = controller_step(state, inputs(car_enter=1))
        assert state.phase is Phase.OPEN_DOOR
        assert out.door is DoorAction.OPEN
        assert out.message == MSG_SPACE_AVAILABLE

    def test_held_car_enter_is_not_a_new_arrival(self):
        state = ControllerState(prev_car_enter=1)
        state, _ = controller_step(state, inputs(car_enter=1))
        assert state.phase is Phase.IDLE

    def test_full_lot_shows_message_and_keeps_door_shut(self):
        state = ControllerState(phase=Phase.SPACE_CHECK, prev_car_enter=1)
        state, out = controller_step(state, inputs(car_enter=1, slot_status=FULL_LOT))
        assert state.phase is Phase.DISPLAY_NO_SPACE
        assert out.message == MSG_NO_SPACE
        assert out.door is None
        state, _ = controller_step(state, inputs(car_enter=1, slot_status=FULL_LOT))
        assert state.phase is Phase.DISPLAY_NO_SPACE
        state, _ = controller_step(state, inputs(car_enter=0, slot_status=FULL_LOT))
        assert state.phase is Phase.IDLE

    def test_identify_waits_for_the_door(self):
        state = ControllerState(phase=Phase.OPEN_DOOR)
        state, out = controller_step(state, inputs(door_busy=1))
        assert state.phase is Phase.OPEN_DOOR and out.ident_w == 0
        state, out = controller_step(state, inputs(door_busy=0))
        assert state.phase is Phase.IDENTIFY and out.ident_w == 1

    def test_identification_leads_to_allotment(self):
        state = ControllerState(phase=Phase.IDENTIFY)
        state, out = controller_step(state, inputs(out_1=1))
        assert state.phase is Phase.SLOT_CHECK
        state, out = controller_step(state, inputs())
        assert out.ident_ack == 1 and state.phase is Phase.ALLOT
        state, out = controller_step(state, inputs())
        assert out.alloc_w == 1
        state, out = controller_step(state, inputs(slotallot=encode_slotallot(2)))
        assert out.allotted_slot == 2
        assert out.door is DoorAction.CLOSE
        assert out.cout == 1
        assert state.phase is Phase.CLOSE_DOOR
        assert state.allotted == frozenset({2})

    def test_lost_allocation_race_closes_door(self):
        state = ControllerState(phase=Phase.ALLOT, alloc_pending=True)
        state, out = controller_step(state, inputs(slotallot=0))
        assert out.allotted_slot is None
        assert out.message == MSG_NO_SPACE
        assert out.door is DoorAction.CLOSE
        assert any('allocation failed' in warning for warning in out.warnings)

    def test_identification_timeout(self):
        state = ControllerState(phase=Phase.IDENTIFY)
        for _ in range(3):
            state, out = controller_step(state, inputs(), ident_timeout=3)
            assert out.ident_w == 1
        state, out = controller_step(state, inputs(), ident_timeout=3)
        assert state.phase is Phase.CLOSE_DOOR
        assert out.door is DoorAction.CLOSE
        assert out.ident_ack == 1
        assert out.warnings

    def test_close_door_returns_to_idle(self):
        state = ControllerState(phase=Phase.CLOSE_DOOR)
        state, _ = controller_step(state, inputs(door_busy=1))
        assert state.phase is Phase.CLOSE_DOOR
        state, _ = controller_step(state, inputs(door_busy=0))
        assert state.phase is Phase.IDLE

    def test_exit_in_any_phase(self):
        state = ControllerState(phase=Phase.OPEN_DOOR, allotted=frozenset({0, 1}))
        state, out = controller_step(
            state, inputs(a=1, exit_slot=1, door_busy=1, slot_status=(R, F, E, E))
        )
        assert out.release == 1
        assert out.cout == 1
        assert state.phase is Phase.OPEN_DOOR

    def test_vacated_slot_dropped(self):
        state = ControllerState(allotted=frozenset({0}))
        state, out = controller_step(state, inputs(slot_status=(E, E, E, E)))
        assert state.allotted == frozenset()
        assert out.cout == 0
        assert out.warnings

    def test_arrival_while_busy_is_noted(self):
        state = ControllerState(phase=Phase.OPEN_DOOR)
        state, out = controller_step(state, inputs(car_enter=1, door_busy=1))
        assert state.phase is Phase.OPEN_DOOR
        assert any('ignored' in warning for warning in out.warnings)

    def test_reset(self):
        state = ControllerState(phase=Phase.ALLOT, allotted=frozenset({3}))
        state, out = controller_step(state, inputs(reset=1, car_enter=1))
        assert state.phase is Phase.IDLE
        assert state.cout == 0
        assert state.prev_car_enter == 1
        assert out.door is None


class TestHandleExit:
    def test_allotted_slot(self):
        state, slot, warning = handle_exit(ControllerState(allotted=frozenset({1})), 1, 32)
        assert (slot, warning) == (1, None)
        assert state.cout == 0

    def test_not_allotted_slot_released_with_warning(self):
        state, slot, warning = handle_exit(ControllerState(allotted=frozenset({1})), 2, 32)
        assert slot == 2
        assert warning
        assert state.cout == 1

    @pytest.mark.parametrize('slot', [32, 63])
    def test_invalid_slot(self, slot):
        state, released, warning = handle_exit(ControllerState(), slot, 32)
        assert released is None
        assert warning


def _full_system(config, card=0x2A, members=(0x2A,)):
    system = build_system(SystemKind.FULL, config, members)
    stim = system.stimulus
    stim.schedule_set(0, 'reset', 1)
    stim.schedule_set(2, 'reset', 0)
    stim.schedule_set(10, 'car_enter', 1)
    stim.schedule_set(12, 'car_enter', 0)
    if card is not None:
        stim.schedule_card(10, card)
    return system


def _idle_after(trace, cycle):
    return next(e.cycle for e in trace.changes('ctrl.state') if e.cycle > cycle and e.value == 0)


def test_entry_happens_in_order(config):
    system = _full_system(config)
    trace = system.simulation.run(500)
    steps = [e.cycle for e in trace.changes('Z')]
    message = system.lcd.messages[0][0]
    completion = system.ident.completions[0]
    allotment = system.controller.allotments[0]

    assert message == 11
    assert len(steps) == 2 * config.steps_per_door
    open_steps, close_steps = steps[:48], steps[48:]
    assert message < open_steps[0]
    assert open_steps[-1] < completion.cycle < allotment[0] < close_steps[0]
    assert completion.identified and completion.code == 0x2A
    assert allotment == (215, 0)
    assert [(e.cycle, e.value) for e in trace.changes('cout')] == [(215, 1)]
    assert _idle_after(trace, 10) - 10 <= config.liveness_bound
    assert system.lcd.row_text(0).rstrip() == MSG_SPACE_AVAILABLE


def test_visitor_without_card_times_out(config):
    system = _full_system(config, card=None)
    trace = system.simulation.run(500)
    idle = _idle_after(trace, 10)
    assert idle - 10 <= config.liveness_bound
    assert system.controller.cout == 0
    assert any('timed out' in note.message for note in trace.notes)
    assert trace.value_at('ident.state', idle) == 0


def test_new_visitor_gets_temporary_card_and_slot(config):
    system = _full_system(config, card=0x99)
    trace = system.simulation.run(500)
    assert system.ident.temp_cards == [1]
    assert system.controller.cout == 1
    assert trace.value_at('new_member', 212) == 1


def test_reset_during_identification(config):
    system = _full_system(config)
    system.stimulus.schedule_set(206, 'reset', 1)
    system.stimulus.schedule_set(208, 'reset', 0)
    trace = system.simulation.run(300)
    assert trace.value_at('ctrl.state', 206) == 0
    assert trace.value_at('Z', 206) == 8
    assert system.ident.completions == []
    assert system.controller.cout == 0
    assert trace.value_at('door_busy', 299) == 0


def test_two_cars_fill_two_slots():
    config = SimConfig(div=1, steps_per_door=4)
    system = _full_system(config)
    system.stimulus.schedule_set(100, 'car_enter', 1)
    system.stimulus.schedule_set(101, 'car_enter', 0)
    system.stimulus.schedule_card(100, 0x2A)
    system.simulation.run(200)
    assert system.controller.state.allotted == frozenset({0, 1})
    assert system.allocator.table.render()[:3] == 'RR.'


def _pulse(stim, rng, cycle, name, width=3, value=1):
    stim.schedule_set(cycle, name, value)
    stim.schedule_set(cycle + rng.randint(1, width), name, 0)


def _random_traffic(rng, config):
    """Full system under a random mix of cars, cards, sweeps, exits and aborts"""
    system = build_system(SystemKind.FULL, config, members=[0x2A, 0x31])
    stim = system.stimulus
    stim.schedule_set(0, 'reset', 1)
    stim.schedule_set(2, 'reset', 0)
    horizon = 3 * config.liveness_bound

    def when():
        return rng.randrange(4, horizon)

    for _ in range(rng.randint(1, 5)):
        _pulse(stim, rng, when(), 'car_enter', width=40)
    for _ in range(rng.randint(0, 4)):
        stim.schedule_card(when(), rng.choice([0x2A, 0x31, 0x55, rng.randrange(256)]))
    for _ in range(rng.randint(0, 2)):
        _pulse(stim, rng, when(), 'fnd', width=1)
    for _ in range(rng.randint(0, 6)):
        stim.schedule_occupancy(when(), rng.randrange(config.slots), rng.random() < 0.6)
    for _ in range(rng.randint(0, 3)):
        cycle = when()
        stim.schedule_set(cycle, 'exit_slot', rng.randrange(64))
        _pulse(stim, rng, cycle, 'a', width=2)
    for _ in range(rng.randint(0, 2)):
        _pulse(stim, rng, when(), 'w4')
    return system, horizon + 50 + config.liveness_bound


def _busy_spans(trace):
    spans, start = [], None
    for event in trace.changes('ctrl.state'):
        if event.value != 0 and start is None:
            start = event.cycle
        elif event.value == 0 and start is not None:
            spans.append((start, event.cycle))
            start = None
    return spans, start


@pytest.mark.parametrize('seed', range(40))
def test_controller_always_returns_to_idle(seed):
    rng = random.Random(seed)
    config = SimConfig(
        slots=rng.randint(1, 32),
        div=rng.choice([1, 2, 4]),
        steps_per_door=rng.choice([4, 8, 48]),
    )
    system, cycles = _random_traffic(rng, config)
    trace = system.simulation.run(cycles)

    spans, unfinished = _busy_spans(trace)
    assert unfinished is None
    car_gone = [e.cycle for e in trace.changes('car_enter') if e.value == 0]
    for start, idle in spans:
        quiet = max([start] + [cycle for cycle in car_gone if cycle <= idle])
        assert idle - quiet <= config.liveness_bound, (seed, start, idle)
    assert system.controller.cout <= config.slots


@pytest.mark.parametrize('div, steps', [(1, 4), (4, 48)])
def test_longest_card_wait_stays_within_bound(div, steps):
    config = SimConfig(div=div, steps_per_door=steps, ident_timeout=MAX_IDENT_TIMEOUT)
    system = _full_system(config, card=None)
    trace = system.simulation.run(config.liveness_bound + 50)
    assert _idle_after(trace, 10) - 10 <= config.liveness_bound
