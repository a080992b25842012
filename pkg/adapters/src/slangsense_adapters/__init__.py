"""Batch producers for the slang interpretation engine's input files."""

__version__ = "0.1.0"

from .jobs import TASKS, AdapterJob

__all__ = ["AdapterJob", "TASKS"]
