from typing import Dict
import io
import logging

from vcd import VCDWriter

from src.sim.trace import Trace

logger = logging.getLogger(__name__)

TOP_SCOPE = 'parking'
DEFAULT_TIMESCALE = '1 ns'


def emit_vcd(trace: Trace, timescale: str = DEFAULT_TIMESCALE) -> bytes:
    """
    Serialize a trace as a Value Change Dump

    One VCD time unit is one simulation cycle. Dotted signal names become
    nested scopes below the top scope.

    Args:
        trace: A trace satisfying the Trace invariants
        timescale: VCD timescale, e.g. '1 ns'

    Returns:
        The VCD text as ASCII bytes; identical input gives identical bytes
    """
    trace.validate()
    buffer = io.StringIO()
    # an empty $date keeps the output byte-for-byte reproducible
    with VCDWriter(buffer, timescale=timescale, date='', version='parksim') as writer:
        variables: Dict[str, object] = {}
        for signal in trace.signals:
            scope, _, leaf = signal.name.rpartition('.')
            full_scope = f'{TOP_SCOPE}.{scope}' if scope else TOP_SCOPE
            variables[signal.name] = writer.register_var(
                full_scope, leaf, 'wire', size=signal.width, init=trace.initial[signal.name]
            )
        for event in trace.events:
            writer.change(variables[event.signal], event.cycle, event.value)
    text = _fold_initial_timestamp(buffer.getvalue())
    logger.debug(f'emitted VCD: {len(trace.signals)} signals, {len(trace.events)} changes')
    return text.encode('ascii')


def _fold_initial_timestamp(text: str) -> str:
    """Move the `#0` pyvcd writes ahead of `$dumpvars` down to the first cycle-0 change"""
    lines = text.splitlines()
    try:
        start = lines.index('$dumpvars')
    except ValueError:
        return text
    if start == 0 or lines[start - 1] != '#0':
        return text
    del lines[start - 1]
    end = lines.index('$end', start - 1)
    if end + 1 < len(lines) and not lines[end + 1].startswith('#'):
        lines.insert(end + 1, '#0')
    return '\n'.join(lines) + '\n'
