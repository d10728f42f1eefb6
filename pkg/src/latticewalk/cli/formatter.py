# coding=utf-8
"""Output formatters."""

from __future__ import print_function

import functools
import json

import ansimarkup
import colorama
from jinja2 import Environment, PackageLoader

JINJA2_ENV = Environment(loader=PackageLoader("latticewalk.cli"),
                         extensions=['jinja2.ext.loopcontrols'])

colorama.init()
ANSI_MARKUP = ansimarkup.AnsiMarkup(
    tags={
        "header": ansimarkup.parse("<bold>"),
        "key": ansimarkup.parse("<cyan>"),
        "value": ansimarkup.parse("<green>"),
        "fail": ansimarkup.parse("<light-red>"),
        "success": ansimarkup.parse("<green>"),
        "unknown": ansimarkup.parse("<dim>"),
        "warning": ansimarkup.parse("<light-yellow>"),
        "label": ansimarkup.parse("<light-yellow>"),
    }
)


def colored_output(function):
    """Decorator that converts ansi markup into ansi escape sequences.

    :param function: Function that will return text using ansi markup.
    :type function: callable
    :returns: Wrapped function that converts markup into escape sequences.
    :rtype: callable

    """

    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        output = function(*args, **kwargs)
        return ANSI_MARKUP(output)

    return wrapper


def json_formatter(result, verbose=0, indent=4):
    """Format result as json."""
    return json.dumps(result, indent=indent, sort_keys=True)


@colored_output
def simulate_formatter(result, verbose):
    """Convert simulate output into human-readable text."""
    template = JINJA2_ENV.get_template("simulate.txt.j2")
    return template.render(result=result, verbose=verbose)


@colored_output
def classify_formatter(result, verbose):
    """Convert classify output into human-readable text."""
    template = JINJA2_ENV.get_template("classify.txt.j2")
    curve = list(zip(result["checkpoints"], result["median_curve"],
                     result["standard_errors"]))
    return template.render(result=result, curve=curve, verbose=verbose)


@colored_output
def verify_formatter(result, verbose):
    """Convert verify output into human-readable text."""
    template = JINJA2_ENV.get_template("verify.txt.j2")
    return template.render(result=result, verbose=verbose)


@colored_output
def counterexample_formatter(result, verbose):
    """Convert counterexample output into human-readable text."""
    template = JINJA2_ENV.get_template("counterexample.txt.j2")
    stages = list(zip(range(1, len(result["horizons"]) + 1), result["targets"],
                      result["horizons"], result["estimates"],
                      result["standard_errors"]))
    return template.render(result=result, stages=stages, verbose=verbose)


FORMATTERS = {
    "json": json_formatter,
    "txt": {
        "simulate": simulate_formatter,
        "classify": classify_formatter,
        "verify": verify_formatter,
        "counterexample": counterexample_formatter,
    },
}
