# fwmpairs/cli.py
from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Callable, Optional, Sequence

from . import __version__
from .config import EXIT_CALIBRATION, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, OUTPUT_DIR_ENV
from .errors import CalibrationError, ConfigError, CountingError, DomainError, NumericalError
from .harness import calibrate_setup, calibration_report, run_power_sweep, run_spectral_scan, run_zwm
from .selftest import failed_checks, run_selftest
from .settings import ExperimentConfig, ensure_dir
from .tables import calibration_lines, make_calibration_table, summary_lines, write_result, write_table

log = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] [%(name)s] %(message)s"
DEFAULT_OUTPUT_DIR = "results"


def _add_run_options(parser: argparse.ArgumentParser, *, analytic: bool = True) -> None:
    parser.add_argument("config", help="Path to the experiment config (key = value lines).")
    parser.add_argument("-o", "--output-dir", default=None,
                        help=f"Directory for result files (default: ${OUTPUT_DIR_ENV} or '{DEFAULT_OUTPUT_DIR}').")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Override a config key after the file is parsed. Repeatable.")
    parser.add_argument("--seed", type=int, default=None, help="Master seed; overrides run.seed.")
    parser.add_argument("--workers", type=int, default=None, help="Worker processes; overrides run.workers.")
    if analytic:
        parser.add_argument("--analytic-only", action="store_true",
                            help="Skip the Monte Carlo and write analytic expectations only.")


def create_cli_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fwm_pairs.py",
        description="Photon-pair generation by four-wave mixing in microstructure fiber.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbosity", choices=["DEBUG", "INFO", "WARNING", "ERROR"], default="WARNING",
                        help="Logging verbosity.")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_options(sub.add_parser("calibrate", help="Calibrate dispersion and source models."), analytic=False)
    _add_run_options(sub.add_parser("sweep-power", help="Rates, C/A and pair ratios vs pump power."))
    _add_run_options(sub.add_parser("scan-spectrum", help="C/A vs signal-window offset with a Gaussian fit."))
    _add_run_options(sub.add_parser("zwm-test", help="Zou-Wang-Mandel nonclassicality statistic vs pump power."))
    sub.add_parser("selftest", help="Closed-form checks at reduced scale.")
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    if args.workers is not None:
        overrides.append(f"run.workers={args.workers}")
    log.info("loading config %s with %d override(s)", args.config, len(overrides))
    return ExperimentConfig.load(args.config, overrides)


def _output_dir(args: argparse.Namespace) -> str:
    path = args.output_dir or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR
    ensure_dir(path)
    return path


def cmd_calibrate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    setup = calibrate_setup(config)
    table = make_calibration_table(calibration_report(setup))
    out = _output_dir(args)

    cfg_path = os.path.join(out, "calibrated.cfg")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        fh.write(setup.derived_config().to_text())
    write_table(table, os.path.join(out, "calibration.csv"))

    print("\n".join(calibration_lines(table)))
    print(f"wrote {cfg_path}")
    return EXIT_OK


def _driver_command(driver: Callable) -> Callable[[argparse.Namespace], int]:
    def run(args: argparse.Namespace) -> int:
        config = _load_config(args)
        result = driver(config, analytic_only=args.analytic_only)
        csv_path, json_path = write_result(result, _output_dir(args))
        print("\n".join(summary_lines(result)))
        print(f"wrote {csv_path} and {json_path}")
        return EXIT_OK
    return run


def cmd_selftest(args: argparse.Namespace) -> int:
    results = run_selftest()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    failed = failed_checks(results)
    if failed:
        raise NumericalError(f"selftest failed: {', '.join(failed)}")
    return EXIT_OK


COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {
    "calibrate": cmd_calibrate,
    "sweep-power": _driver_command(run_power_sweep),
    "scan-spectrum": _driver_command(run_spectral_scan),
    "zwm-test": _driver_command(run_zwm),
    "selftest": cmd_selftest,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = create_cli_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(level=args.verbosity, format=LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    logging.getLogger().setLevel(args.verbosity)

    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        log.critical("invalid configuration: %s", exc)
        return EXIT_CONFIG
    except CalibrationError as exc:
        log.critical("calibration failed: %s", exc)
        return EXIT_CALIBRATION
    except (NumericalError, CountingError) as exc:
        log.critical("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
