from ._dyntok import *  # noqa: F401,F403
from ._dyntok import __version__  # noqa: F401
