"""
consensus-sim - command-line front end of the consensus_core library.
"""

from consensus_core import __version__

__all__ = ["__version__"]
