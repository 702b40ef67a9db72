"""Constant-speed vehicles on an elastic membrane, and the curved spacetime
whose geodesics they follow."""
__version__ = "0.1.0"
