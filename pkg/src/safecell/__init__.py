"""Shared-workspace safety cell: camera geometry, zone masks, change
monitoring, a simulated robot cell, and an interactive session service."""

__version__ = "0.1.0"
