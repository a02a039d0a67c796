from pathlib import Path
from typing import List, Optional
import argparse
import logging
import logging.config
import sys

from dotenv import load_dotenv

from src.config import SimConfig
from src.errors import ConfigurationError, ParkingSimError, ScenarioParseError
from src.scenario.parser import parse_scenario
from src.scenario.runner import EXIT_USAGE, run_scenario

logger = logging.getLogger(__name__)

DEFAULT_LOG_CONFIG = Path(__file__).resolve().parent.parent / 'logging.ini'


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='parksim',
        description='Cycle-accurate simulator of an FPGA car-parking controller',
    )
    parser.add_argument('--scenario', required=True, help='scenario script to run')
    parser.add_argument('--vcd', help='write the waveform as a VCD file')
    parser.add_argument('--plot', help='write the waveform as .html or a static image')
    parser.add_argument('--slots', type=int, help='parking capacity (default 32)')
    parser.add_argument('--div', type=int, help='stepper clock divider (default 4)')
    parser.add_argument('--door-steps', type=int, help='steps per door movement (default 48)')
    parser.add_argument('--k', type=int, help='consecutive matching words for VT (default 3)')
    parser.add_argument('--reps', type=int, help='encoder word repetitions (default 3)')
    parser.add_argument('--noise', type=float, help='RF channel bit-flip probability')
    parser.add_argument('--seed', type=int, help='channel noise seed (default 0)')
    parser.add_argument('--ident-timeout', type=int, help='cycles to wait for a card (32)')
    parser.add_argument('--quiet', action='store_true', help='only failures and the result')
    parser.add_argument('--log-config', help='logging INI file')
    return parser


def setup_logging(config_path: Optional[str], quiet: bool) -> None:
    path = Path(config_path) if config_path else DEFAULT_LOG_CONFIG
    if config_path and not path.exists():
        raise ConfigurationError(f'log config {config_path} not found')
    if path.exists():
        logging.config.fileConfig(path, disable_existing_loggers=False)
    else:
        logging.basicConfig(format='%(levelname)-5.5s [%(name)s] %(message)s')
    logging.disable(logging.INFO if quiet else logging.NOTSET)


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exit_request:
        return int(exit_request.code or 0)
    try:
        setup_logging(args.log_config, args.quiet)
        config = SimConfig.from_env().with_overrides(
            slots=args.slots,
            div=args.div,
            steps_per_door=args.door_steps,
            k=args.k,
            repetitions=args.reps,
            noise_rate=args.noise,
            seed=args.seed,
            ident_timeout=args.ident_timeout,
        )
    except ConfigurationError as e:
        print(f'error: {e}', file=sys.stderr)
        return EXIT_USAGE

    try:
        text = Path(args.scenario).read_text()
    except OSError as e:
        print(f'error: cannot read scenario: {e}', file=sys.stderr)
        return EXIT_USAGE

    try:
        scenario = parse_scenario(text)
        result = run_scenario(scenario, config, with_vcd=args.vcd is not None)
    except ScenarioParseError as e:
        print(f'error: {args.scenario}: {e}', file=sys.stderr)
        return EXIT_USAGE
    except ParkingSimError as e:
        print(f'error: {e}', file=sys.stderr)
        return EXIT_USAGE

    if args.vcd and result.vcd is not None:
        Path(args.vcd).write_bytes(result.vcd)
        logger.info(f'VCD written to {args.vcd}')
    if args.plot:
        from src.visualization.plotter import WaveformPlotter

        plotter = WaveformPlotter()
        plotter.save_plot(plotter.create_waveform(result.trace), args.plot)

    sys.stdout.write(result.render_report(quiet=args.quiet))
    failure = result.first_failure
    if failure is not None:
        logger.warning(f'first failure: {failure.render()}')
    return result.exit_code
