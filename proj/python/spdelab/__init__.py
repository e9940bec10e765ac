"""Langevin-SPDE posterior laboratory on a spectrally truncated Hilbert space.

The heavy lifting lives in the C++ extension ``_spdelab``; this package
re-exports it.
"""

from ._spdelab import *  # noqa: F401,F403
from ._spdelab import __doc__  # noqa: F401
