"""
Command Line
------------
heislab <suite> --config <path> [--out <dir>] [--seed <int>] [--verbose]

Exit status: 0 when every assertion passes, 1 when one fails (the failing
instances go to failures.json), 2 on invalid configuration.
"""

import logging
import sys

import click
from simple_chalk import chalk

from heislab.config import Config, load_run_config
from heislab.errors import ConfigError, DomainError, GridResolutionError
from heislab.runner.suites import SuiteOptions, run_suite

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def configure_logging(verbose: bool):
    level = logging.DEBUG if verbose else getattr(logging, str(Config.LOG_LEVEL).upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("suite", type=click.Choice(SuiteOptions.get_all_options()))
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Run configuration file (dotenv syntax). Defaults to HEISLAB_CONFIG_FILE.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Output directory for summary.json and the tables.")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Seed for every random choice.")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
def main(suite, config_path, out_dir, seed, verbose):
    """Run one verification SUITE and write its reports."""
    configure_logging(verbose)
    try:
        config = load_run_config(config_path or Config.CONFIG_FILE, seed=seed, out=out_dir)
        status = run_suite(config, suite)
    except (ConfigError, GridResolutionError, DomainError) as exc:
        logging.error("invalid configuration: %s", exc)
        click.echo(chalk.red(f"CONFIG ERROR: {exc}"), err=True)
        sys.exit(EXIT_CONFIG)
    if status == EXIT_OK:
        click.echo(chalk.green(f"{suite}: all assertions passed ({config.out})"))
    else:
        click.echo(chalk.red(f"{suite}: assertions failed, see {config.out}/failures.json"))
    sys.exit(status)
