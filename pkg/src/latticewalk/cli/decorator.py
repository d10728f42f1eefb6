"""CLI subcommand decorators.

Decorators used to add common functionality to subcommands.

"""
import functools
import logging

import click
import structlog

from latticewalk.api import LatticeWalk, RunConfig
from latticewalk.cli.formatter import FORMATTERS, ANSI_MARKUP
from latticewalk.error import (
    BudgetExceededError,
    CertificateError,
    ConfigError,
    LatticeWalkError,
    QuadratureError,
)
from latticewalk.util import load_run_config

LOGGER = structlog.get_logger()


def echo_result(function):
    """Decorator that prints subcommand results correctly formatted.

    A result carrying an ``exit_code`` ends the command with that status
    once printed.

    :param function: Subcommand that returns a result document.
    :type function: callable
    :returns: Wrapped function that prints subcommand results
    :rtype: callable

    """

    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        result = function(*args, **kwargs)
        if result is None:
            return
        context = click.get_current_context()
        params = context.params
        exit_code = result.pop("exit_code", 0) if isinstance(result, dict) else 0

        output_format = params.get("output_format") or "txt"
        formatter = FORMATTERS[output_format]
        if isinstance(formatter, dict):
            formatter = formatter[context.command.name]

        output = formatter(result, params.get("verbose", 0)).strip("\n")
        output_file = params.get("output_file")
        click.echo(output, file=output_file or click.open_file("-", mode="w"))
        if output_file:
            click.echo(ANSI_MARKUP(
                "Output saved to <bold>{}</bold>".format(output_file.name)), err=True)

        if exit_code:
            context.exit(exit_code)

    return wrapper


def handle_exceptions(function):
    """Log library errors and exit with a nonzero status.

    :param function: Subcommand that may raise library errors.
    :type function: callable
    :returns: Wrapped function that logs errors and exits
    :rtype: callable

    """

    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        try:
            return function(*args, **kwargs)
        except ConfigError as error:
            LOGGER.error("Config error: {}".format(error))
            click.get_current_context().exit(-1)
        except CertificateError as error:
            LOGGER.error("Certificate error: {}".format(error))
            click.get_current_context().exit(-1)
        except BudgetExceededError as error:
            LOGGER.error("Budget exceeded: {}".format(error))
            click.get_current_context().exit(-1)
        except QuadratureError as error:
            LOGGER.error("Quadrature error: {}".format(error))
            click.get_current_context().exit(-1)
        except LatticeWalkError as error:
            LOGGER.error("Error: {}".format(error))
            click.get_current_context().exit(-1)

    return wrapper


def set_verbosity(verbose):
    """Lower the package log level: one flag for INFO, two for DEBUG."""
    if verbose:
        level = logging.INFO if verbose == 1 else logging.DEBUG
        logging.getLogger("latticewalk").setLevel(level)


def pass_run_client(default_seed=None):
    """Build the run client from the config options and pass it to the subcommand.

    :param default_seed: Seed used when the configuration has none.
    :returns: Decorator
    :rtype: callable

    """

    def decorator(function):

        @functools.wraps(function)
        def wrapper(*args, **kwargs):
            context = click.get_current_context()
            params = context.params
            set_verbosity(params.get("verbose", 0))

            config_file = params.get("config_file")
            document = load_run_config(config_file) if config_file else None
            if document is None and default_seed is None:
                raise ConfigError("Missing configuration file (use -c/--config)")
            run_config = RunConfig(
                document, seed=params.get("seed"), jobs=params.get("jobs"),
                out_dir=params.get("out_dir"), default_seed=default_seed)
            return function(LatticeWalk(run_config), *args, **kwargs)

        return wrapper

    return decorator


def _common_options(function):
    options = [
        click.option("-c", "--config", "config_file", type=click.File(),
                     help="Run configuration (YAML)"),
        click.option("-s", "--seed", type=click.IntRange(0, (1 << 64) - 1),
                     help="Master seed, overrides the configuration"),
        click.option("-j", "--jobs", type=click.IntRange(1, None),
                     help="Worker processes [default: saved setting or 1]"),
        click.option("--out", "out_dir", type=click.Path(file_okay=False),
                     help="Output directory for result files"),
        click.option("-o", "--output", "output_file", type=click.File(mode="w"),
                     help="Write the printed result to this file"),
        click.option("-f", "--format", "output_format",
                     type=click.Choice(["json", "txt"]), default="txt",
                     show_default=True, help="Output format"),
        click.option("-v", "--verbose", count=True, help="Verbose output"),
    ]
    for option in reversed(options):
        function = option(function)
    return function


def simulate_command(function):
    """Decorator that groups decorators common to simulate subcommand."""

    @click.command()
    @_common_options
    @click.pass_context
    @echo_result
    @handle_exceptions
    @pass_run_client()
    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        return function(*args, **kwargs)

    return wrapper


def classify_command(function):
    """Decorator that groups decorators common to classify subcommand."""

    @click.command()
    @_common_options
    @click.pass_context
    @echo_result
    @handle_exceptions
    @pass_run_client()
    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        return function(*args, **kwargs)

    return wrapper


def verify_command(function):
    """Decorator that groups decorators common to verify subcommand."""

    @click.command()
    @_common_options
    @click.option("--only", "only", help="Comma-separated verifier names")
    @click.option("--list", "list_only", is_flag=True,
                  help="List registered verifiers and exit")
    @click.option("--inject-fault", "faults", multiple=True,
                  help="Enable a negative-control fault hook (e.g. coupling)")
    @click.pass_context
    @echo_result
    @handle_exceptions
    @pass_run_client(default_seed=0)
    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        return function(*args, **kwargs)

    return wrapper


def counterexample_command(function):
    """Decorator that groups decorators common to counterexample subcommand."""

    @click.command()
    @_common_options
    @click.option("--certificate", "certificate_file", type=click.File(),
                  help="Verify and replay an existing certificate instead of building one")
    @click.pass_context
    @echo_result
    @handle_exceptions
    @pass_run_client()
    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        return function(*args, **kwargs)

    return wrapper
