"""Mirandum: a virtual museum tour platform.

Ships a manifest model for 360-degree tours, a content-addressed store,
a federation layer for partner repositories, a pure bundle compiler, an
append-only interaction log with session analytics, an HTTP gateway, and
a deterministic visitor simulator. See README.md for the shape of it all.
"""

__version__ = "0.1.0"
