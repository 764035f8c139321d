"""Time-domain scattering by point scatterers: simulation and inversion."""

from ptscat._core import *  # noqa: F401,F403
from ptscat._core import __doc__  # noqa: F401

__version__ = "0.1.0"
