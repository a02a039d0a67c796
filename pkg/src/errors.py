from typing import Optional


class ParkingSimError(Exception):
    """Base class for every error raised by the simulator"""


class ConfigurationError(ParkingSimError):
    pass


class SignalError(ParkingSimError):
    pass


class TraceError(ParkingSimError):
    pass


class BitStreamError(ParkingSimError):
    pass


class StepperBusyError(ParkingSimError):
    pass


class SlotIndexError(ParkingSimError):
    pass


class LcdTextError(ParkingSimError):
    pass


class CardCodeError(ParkingSimError):
    pass


class ScenarioError(ParkingSimError):
    pass


class ScenarioParseError(ScenarioError):
    def __init__(self, line: int, message: str):
        super().__init__(f'line {line}: {message}')
        self.line = line
        self.message = message


class InvariantViolation(ParkingSimError):
    def __init__(self, cycle: int, message: str, source: Optional[str] = None):
        where = f' [{source}]' if source else ''
        super().__init__(f'cycle {cycle}{where}: {message}')
        self.cycle = cycle
        self.message = message
        self.source = source
