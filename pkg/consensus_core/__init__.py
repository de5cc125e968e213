"""
consensus-sim core library

Robust distributed optimal output consensus for uncertain linear agents:
graphs, costs, plants, controllers, tuning certificates and simulation.
No CLI dependencies - reusable in any Python application.
"""

__version__ = "0.1.0"
