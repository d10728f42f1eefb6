"""CLI subcommands."""

import platform
import sys

import click
import structlog
from halo import Halo

from latticewalk.__version__ import __version__
from latticewalk.cli.decorator import (
    classify_command,
    counterexample_command,
    handle_exceptions,
    simulate_command,
    verify_command,
)
from latticewalk.util import CONFIG_FILE, save_config
from latticewalk.verifiers import VERIFIERS

LOGGER = structlog.get_logger()


def spinner(text):
    """Spinner on stderr, shown only when stderr is a terminal."""
    return Halo(text=text, spinner="dots", stream=sys.stderr,
                enabled=sys.stderr.isatty())


@click.command(name="help")
@click.pass_context
def help_(context):
    """Show this message and exit."""
    click.echo(context.parent.get_help())


@simulate_command
def simulate(
    client,
    context,
    config_file,
    seed,
    jobs,
    out_dir,
    output_file,
    output_format,
    verbose,
):
    """Run full-walk simulations and write statistics.json."""
    with spinner("Simulating"):
        return client.simulate()


@classify_command
def classify(
    client,
    context,
    config_file,
    seed,
    jobs,
    out_dir,
    output_file,
    output_format,
    verbose,
):
    """Estimate Green partial sums and label the growth."""
    with spinner("Running campaign"):
        return client.classify()


@verify_command
def verify(
    client,
    context,
    config_file,
    seed,
    jobs,
    out_dir,
    output_file,
    output_format,
    verbose,
    only,
    list_only,
    faults,
):
    """Run the registered verification suites."""
    if list_only:
        return {"available": list(VERIFIERS)}

    names = [name.strip() for name in only.split(",") if name.strip()] if only else None
    with spinner("Verifying"):
        return client.verify(names, faults)


@counterexample_command
def counterexample(
    client,
    context,
    config_file,
    seed,
    jobs,
    out_dir,
    output_file,
    output_format,
    verbose,
    certificate_file,
):
    """Build, verify and replay a deterministic defect certificate."""
    with spinner("Building certificate"):
        return client.counterexample(certificate_file)


@click.command()
@click.option("-j", "--jobs", type=click.IntRange(1, None),
              help="Default number of worker processes")
@click.option("-d", "--out-dir", required=False, default="",
              help="Default output directory")
@handle_exceptions
def setup(jobs=None, out_dir=""):
    """Save user defaults."""
    config = {"jobs": str(jobs) if jobs else "", "out_dir": out_dir}
    save_config(config)
    click.echo("Configuration saved to {!r}".format(CONFIG_FILE))


@click.command()
def version():
    """Get version and OS information for your latticewalk installation."""
    click.echo(
        "latticewalk {}\n"
        "  Python {}\n"
        "  {}\n".format(__version__, platform.python_version(), platform.platform())
    )
