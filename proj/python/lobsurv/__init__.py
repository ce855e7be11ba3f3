"""Order-flow features, probabilistic price-move model and spoofing detection."""

from ._lobsurv import *  # noqa: F401,F403
from ._lobsurv import __doc__  # noqa: F401

__version__ = "0.1.0"
