from ._keyforge import *  # noqa: F401,F403
from ._keyforge import __version__, KeyforgeError  # noqa: F401
