"""Executable toolkit for nilpotent groups, nilmanifolds and Gowers norms."""

__version__ = "0.1.0"
