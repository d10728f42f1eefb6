"""Shared fixtures."""

import io
import textwrap

import pytest

from latticewalk.env import DefectLaw, EnvironmentSpec, OrientationField, PeriodicPattern
from latticewalk.util import load_run_config

ALPHA = 0.001


@pytest.fixture
def alternating():
    return OrientationField(EnvironmentSpec.alternating())


@pytest.fixture
def half_plane():
    return OrientationField(EnvironmentSpec.half_plane())


@pytest.fixture
def iid():
    return OrientationField(EnvironmentSpec.iid_uniform(seed=11))


@pytest.fixture
def pattern2():
    return PeriodicPattern([1, -1])


@pytest.fixture
def defect_free(pattern2):
    return OrientationField(EnvironmentSpec.explicit_defects(pattern2, ()))


@pytest.fixture
def decaying(pattern2):
    return OrientationField(
        EnvironmentSpec.periodic_with_defects(pattern2, DefectLaw(beta=2.0), seed=5))


@pytest.fixture
def yaml_block():
    """Parse a dedented YAML snippet into a ConfigBlock."""

    def parse(text):
        handle = io.StringIO(textwrap.dedent(text).lstrip("\n"))
        return load_run_config(handle)

    return parse
