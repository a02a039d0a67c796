from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence
import logging

from src.config import SimConfig
from src.devices.lcd import LcdUnit
from src.devices.rf_link import RfLinkUnit
from src.devices.stepper import StepperBench, StepperConfig, StepperUnit
from src.errors import InvariantViolation, ScenarioError
from src.fsm.controller import ControllerUnit
from src.fsm.identification import IdentificationUnit, IdentPortMap
from src.fsm.slot_allocator import SlotAllocatorUnit, SlotStatus, table_from_presets
from src.scenario.monitor import InvariantMonitor
from src.scenario.parser import (
    AssertDirective,
    CardDirective,
    CorruptDirective,
    ExpectLcdDirective,
    ExpectSlotDirective,
    MemberDirective,
    OccupancyDirective,
    Scenario,
    SetDirective,
    SlotDirective,
    SystemKind,
)
from src.scenario.stimulus import CardReaderPorts, StimulusDriver
from src.sim.kernel import Simulation
from src.sim.signals import SignalId
from src.sim.trace import Trace, TraceNote
from src.sim.vcd import emit_vcd

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_INVARIANT = 3

ORDER_STIMULUS = 0
ORDER_RF = 1
ORDER_IDENT = 2
ORDER_ALLOCATOR = 3
ORDER_CONTROLLER = 4
ORDER_STEPPER = 5
ORDER_LCD = 6
ORDER_MONITOR = 7

_INPUTS = {
    SystemKind.FULL: (
        'reset', 'car_enter', 'w2', 'w3', 'w4', 'fnd', 'a', ('exit_slot', 6),
    ),
    SystemKind.STEPPER: ('reset',),
    SystemKind.IDENTIFICATION: ('reset', 'w', 'w1', 'w2', 'z'),
    SystemKind.ALLOCATOR: ('reset', 'w', 'w1', 'w2', 'w3', 'fnd'),
}


def _input_signals(kind: SystemKind) -> List[SignalId]:
    signals = []
    for port in _INPUTS[kind]:
        name, width = port if isinstance(port, tuple) else (port, 1)
        signals.append(SignalId(name, width))
    return signals


@dataclass
class ParkingSystem:
    """One elaborated testbench: the kernel plus handles on every unit in it"""

    kind: SystemKind
    simulation: Simulation
    stimulus: StimulusDriver
    monitor: InvariantMonitor
    rf: Optional[RfLinkUnit] = None
    stepper: Optional[StepperUnit] = None
    lcd: Optional[LcdUnit] = None
    ident: Optional[IdentificationUnit] = None
    allocator: Optional[SlotAllocatorUnit] = None
    controller: Optional[ControllerUnit] = None


def build_system(kind: SystemKind,
                 config: SimConfig,
                 members: Sequence[int] = (),
                 presets: Optional[Dict[int, SlotStatus]] = None) -> ParkingSystem:
    """Wire the units of `kind` into a Simulation in their fixed tick order"""
    presets = presets or {}
    has_allocator = kind in (SystemKind.FULL, SystemKind.ALLOCATOR)
    if presets and not has_allocator:
        raise ScenarioError(f'slot presets need a slot table; system {kind.value} has none')
    if members and kind not in (SystemKind.FULL, SystemKind.IDENTIFICATION):
        raise ScenarioError(f'members need an identification unit; system {kind.value} has none')
    for slot in presets:
        if not 0 <= slot < config.slots:
            raise ScenarioError(f'slot {slot} out of range 0..{config.slots - 1}')

    simulation = Simulation()
    rf = stepper = lcd = ident = allocator = controller = None

    if has_allocator:
        rf = RfLinkUnit(
            slot_count=config.slots,
            repetitions=config.repetitions,
            k=config.k,
            noise_rate=config.noise_rate,
            seed=config.seed,
            request='fnd',
        )
        for slot, status in presets.items():
            if status is SlotStatus.FILLED:
                rf.set_occupancy(slot, True)
        allocator = SlotAllocatorUnit(
            table_from_presets(config.slots, presets),
            request='alloc.w' if kind is SystemKind.FULL else 'w',
        )
        simulation.register_component(rf, ORDER_RF)
        simulation.register_component(allocator, ORDER_ALLOCATOR)

    if kind in (SystemKind.FULL, SystemKind.STEPPER):
        stepper = StepperUnit(StepperConfig(config.div, config.steps_per_door))
        simulation.register_component(stepper, ORDER_STEPPER)

    card_reader = None
    if kind is SystemKind.FULL:
        ident = IdentificationUnit(
            IdentPortMap(w='ident.w', w1='w2', w2='w3', z=('w4', 'ident.ack')), members
        )
        card_reader = CardReaderPorts(enable='ident.w', data='w2', strobe='w3')
    elif kind is SystemKind.IDENTIFICATION:
        ident = IdentificationUnit(IdentPortMap(), members)
        card_reader = CardReaderPorts(enable='w', data='w1', strobe='w2')
    if ident is not None:
        simulation.register_component(ident, ORDER_IDENT)

    if kind is SystemKind.FULL:
        assert allocator is not None and stepper is not None
        lcd = LcdUnit()
        controller = ControllerUnit(allocator, stepper, lcd, config.ident_timeout)
        simulation.register_component(controller, ORDER_CONTROLLER)
        simulation.register_component(lcd, ORDER_LCD)
    elif kind is SystemKind.STEPPER:
        assert stepper is not None
        simulation.register_component(StepperBench(stepper), ORDER_CONTROLLER)

    stimulus = StimulusDriver(_input_signals(kind), card_reader, rf)
    monitor = InvariantMonitor(stepper, allocator, controller)
    simulation.register_component(stimulus, ORDER_STIMULUS)
    simulation.register_component(monitor, ORDER_MONITOR)
    return ParkingSystem(
        kind, simulation, stimulus, monitor, rf, stepper, lcd, ident, allocator, controller
    )


@dataclass(frozen=True)
class CheckResult:
    label: str
    passed: bool
    detail: str = ''

    def render(self) -> str:
        prefix = 'PASS' if self.passed else 'FAIL'
        suffix = f': {self.detail}' if self.detail and not self.passed else ''
        return f'{prefix} {self.label}{suffix}'


@dataclass
class ScenarioResult:
    system: SystemKind
    cycles: int
    trace: Trace
    checks: List[CheckResult] = field(default_factory=list)
    violation: Optional[InvariantViolation] = None
    lcd_rows: Optional[List[str]] = None
    slots: Optional[str] = None
    cout: Optional[int] = None
    temp_cards: Optional[List[int]] = None
    vcd: Optional[bytes] = None

    @property
    def notes(self) -> List[TraceNote]:
        return self.trace.notes

    @property
    def first_failure(self) -> Optional[CheckResult]:
        return next((check for check in self.checks if not check.passed), None)

    @property
    def exit_code(self) -> int:
        if self.violation is not None:
            return EXIT_INVARIANT
        if self.first_failure is not None:
            return EXIT_ASSERTION
        return EXIT_PASS

    def render_report(self, quiet: bool = False) -> str:
        lines = [f'SYSTEM {self.system.value} CYCLES {self.cycles}']
        lines.extend(check.render() for check in self.checks)
        if not quiet:
            for note in self.notes:
                level = 'INFO' if note.level == 'info' else 'WARN'
                lines.append(f'{level} [{note.cycle}] {note.source}: {note.message}')
        if self.violation is not None:
            lines.append(f'INVARIANT {self.violation}')
        if self.lcd_rows is not None:
            for row, text in enumerate(self.lcd_rows):
                lines.append(f'LCD {row} |{text}|')
        if self.slots is not None:
            lines.append(f'SLOTS {self.slots}')
        if self.cout is not None:
            lines.append(f'COUT {self.cout}')
        if self.temp_cards is not None:
            cards = ', '.join(str(card) for card in self.temp_cards) or 'none'
            lines.append(f'TEMP CARDS {cards}')
        lines.append(f'RESULT {"PASS" if self.exit_code == EXIT_PASS else "FAIL"}')
        return '\n'.join(lines) + '\n'


def _schedule(system: ParkingSystem, scenario: Scenario) -> None:
    stimulus = system.stimulus
    for directive in scenario.directives:
        if isinstance(directive, SetDirective):
            stimulus.schedule_set(directive.at, directive.signal, directive.value)
        elif isinstance(directive, CardDirective):
            stimulus.schedule_card(directive.at, directive.code)
        elif isinstance(directive, OccupancyDirective):
            stimulus.schedule_occupancy(directive.at, directive.slot, directive.occupied)
        elif isinstance(directive, CorruptDirective):
            stimulus.schedule_corruption(directive.at, directive.bit)


def _check_targets(system: ParkingSystem, scenario: Scenario) -> None:
    bus = system.simulation.bus
    for directive in scenario.directives:
        if isinstance(directive, AssertDirective):
            name = directive.signal
            if name in system.monitor.probes:
                continue
            if not bus.has(name):
                raise ScenarioError(f'assert on unknown signal {name!r}')
            if directive.bits is not None and directive.bits[0] >= bus.signal(name).width:
                raise ScenarioError(f'bit {directive.bits[0]} outside {name}')
        elif isinstance(directive, ExpectLcdDirective) and system.lcd is None:
            raise ScenarioError(f'system {system.kind.value} has no LCD')
        elif isinstance(directive, ExpectSlotDirective):
            if system.allocator is None:
                raise ScenarioError(f'system {system.kind.value} has no slot table')
            if not 0 <= directive.index < system.allocator.table.capacity:
                raise ScenarioError(f'expect slot {directive.index} outside the lot')


def _evaluate(system: ParkingSystem, scenario: Scenario, trace: Trace) -> List[CheckResult]:
    checks = []
    for directive in scenario.directives:
        if isinstance(directive, AssertDirective):
            if directive.signal in system.monitor.probes:
                actual = system.monitor.probe_at(directive.signal, directive.at)
            else:
                actual = trace.value_at(directive.signal, directive.at)
            if directive.bits is not None:
                msb, lsb = directive.bits
                actual = (actual >> lsb) & ((1 << (msb - lsb + 1)) - 1)
            passed = actual == directive.value
            checks.append(CheckResult(
                f'assert {directive.at} {directive.target} == {directive.value}',
                passed,
                f'expected {directive.value}, got {actual}',
            ))
        elif isinstance(directive, ExpectLcdDirective):
            assert system.lcd is not None
            text = system.lcd.row_text(directive.row).rstrip()
            checks.append(CheckResult(
                f'expect lcd {directive.row} {directive.text!r}',
                text == directive.text,
                f'row shows {text!r}',
            ))
        elif isinstance(directive, ExpectSlotDirective):
            assert system.allocator is not None
            status = system.allocator.table.status[directive.index]
            checks.append(CheckResult(
                f'expect slot {directive.index} {directive.status.value}',
                status is directive.status,
                f'slot is {status.value}',
            ))
    return checks


def run_scenario(scenario: Scenario,
                 config: SimConfig = SimConfig(),
                 with_vcd: bool = False) -> ScenarioResult:
    """
    Build the scenario's system, run it for the scenario's cycle count and
    evaluate every assert and expect directive

    Raises:
        ScenarioError: the scenario refers to something its system lacks
    """
    members = [d.code for d in scenario.directives if isinstance(d, MemberDirective)]
    presets = {
        d.index: d.status for d in scenario.directives if isinstance(d, SlotDirective)
    }
    system = build_system(scenario.system, config, members, presets)
    _schedule(system, scenario)
    simulation = system.simulation
    simulation.run(0)
    _check_targets(system, scenario)

    violation = None
    try:
        trace = simulation.run(scenario.total)
    except InvariantViolation as error:
        violation = error
        trace = simulation.trace.copy()
    logger.info(f'ran {trace.cycles} cycles of system {scenario.system.value}')

    result = ScenarioResult(
        system=scenario.system,
        cycles=trace.cycles,
        trace=trace,
        checks=_evaluate(system, scenario, trace),
        violation=violation,
    )
    if system.lcd is not None:
        result.lcd_rows = [system.lcd.row_text(0), system.lcd.row_text(1)]
    if system.allocator is not None:
        result.slots = system.allocator.table.render()
    if system.controller is not None:
        result.cout = system.controller.cout
    if system.ident is not None:
        result.temp_cards = system.ident.temp_cards
    if with_vcd:
        result.vcd = emit_vcd(trace, config.timescale)
    return result
