"""Thermal-ensemble atom transport in a moving optical tweezer (C++ core)."""

from ._tweezer import *  # noqa: F401,F403
from ._tweezer import __version__  # noqa: F401
