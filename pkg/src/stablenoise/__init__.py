"""Approximation and simulation of stable random noises.

Lattice (grid) and Poisson (shot-noise) approximations of independently
scattered alpha-stable noise, filtered lattice noise with white or fractional
limits, shot-noise Levy motion on the sphere and on R^q, and the statistical
checks used to validate them.
"""
from .errors import IntegrandError, QuadratureError, TruncationError
from .rng import CounterStream
from .stable import *  # noqa: F401,F403
from .kernels import *  # noqa: F401,F403
from .parser import *  # noqa: F401,F403
from .grid import *  # noqa: F401,F403
from .spaces import *  # noqa: F401,F403
from .gridnoise import *  # noqa: F401,F403
from .fractional import *  # noqa: F401,F403
from .shotnoise import *  # noqa: F401,F403
from .levy import *  # noqa: F401,F403
from .verify import *  # noqa: F401,F403

__version__ = "0.1.0"
