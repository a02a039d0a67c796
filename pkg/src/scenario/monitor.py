from bisect import bisect_right
from typing import Dict, List, Optional, Tuple
import logging

from src.devices.stepper import StepperUnit
from src.errors import InvariantViolation
from src.fsm.controller import ControllerUnit
from src.fsm.slot_allocator import SLOTALLOT_VALID, SlotAllocatorUnit, SlotStatus
from src.sim.signals import SignalBus

logger = logging.getLogger(__name__)

PROBES = ('steps', 'free')


class InvariantMonitor:
    """Last component in tick order: checks the cross-module invariants and
    samples the probe values that are not bus signals."""

    def __init__(self,
                 stepper: Optional[StepperUnit] = None,
                 allocator: Optional[SlotAllocatorUnit] = None,
                 controller: Optional[ControllerUnit] = None,
                 name: str = 'monitor'):
        self.name = name
        self.stepper = stepper
        self.allocator = allocator
        self.controller = controller
        self.probes: Dict[str, List[Tuple[int, int]]] = {}
        if stepper is not None:
            self.probes['steps'] = []
        if allocator is not None:
            self.probes['free'] = []

    def declare(self, bus: SignalBus) -> None:
        pass

    def probe_at(self, name: str, cycle: int) -> int:
        history = self.probes[name]
        index = bisect_right(history, (cycle, float('inf'))) - 1
        return history[index][1] if index >= 0 else 0

    def _record(self, name: str, cycle: int, value: int) -> None:
        history = self.probes[name]
        if not history or history[-1][1] != value:
            history.append((cycle, value))

    def _fail(self, cycle: int, message: str) -> None:
        logger.error(f'[{cycle}] invariant breach: {message}')
        raise InvariantViolation(cycle, message, self.name)

    def tick(self, cycle: int, bus: SignalBus) -> None:
        if bus.has('identified') and bus.read('identified') and bus.read('new_member'):
            self._fail(cycle, 'identified and new_member asserted together')

        if bus.has('Z'):
            z = bus.read('Z')
            if bin(z).count('1') != 1:
                self._fail(cycle, f'Z=0b{z:04b} is not one-hot')

        if bus.has('slotallot'):
            leds = bus.read('led') + bus.read('led_filled') + bus.read('led_reserv')
            if leds > 1:
                self._fail(cycle, f'{leds} slot LEDs lit at once')
            valid = int(bool(bus.read('slotallot') & SLOTALLOT_VALID))
            if bus.read('led_slotallot') != valid:
                self._fail(cycle, 'led_slotallot disagrees with the slotallot valid bit')

        if self.controller is not None and self.allocator is not None:
            allotted = self.controller.state.allotted
            capacity = self.allocator.table.capacity
            if bus.read('cout') != len(allotted) or len(allotted) > capacity:
                self._fail(cycle, f'cout={bus.read("cout")} but {len(allotted)} slots allotted')
            status = self.allocator.table.status
            emptied = [slot for slot in allotted if status[slot] is SlotStatus.EMPTY]
            if emptied:
                self._fail(cycle, f'allotted slots {sorted(emptied)} are empty')

        if self.stepper is not None:
            self._record('steps', cycle, self.stepper.total_steps)
        if self.allocator is not None:
            self._record('free', cycle, self.allocator.free_count)
