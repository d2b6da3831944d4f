"""Desk-scale production-style path tracer with distributed tile rendering."""
__version__ = "0.1.0"
