"""Balloon-fleet guidance and Monte Carlo campaign simulation.

All quantities are SI (meters, seconds, radians) unless a name says otherwise.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
