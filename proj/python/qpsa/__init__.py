"""HMM and QHMM sequence models for classifying failure scenarios."""

from ._core import *  # noqa: F401,F403
from ._core import __version__, Error, InputError  # noqa: F401
