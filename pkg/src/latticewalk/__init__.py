"""Random walks on horizontally directed lattices."""

from latticewalk.__version__ import (  # noqa
    __author__,
    __copyright__,
    __credits__,
    __email__,
    __license__,
    __maintainer__,
    __status__,
    __version__,
)
from latticewalk.env import EnvironmentSpec, OrientationField  # noqa
