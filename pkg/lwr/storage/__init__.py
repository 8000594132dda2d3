"""
Storage layer for run records.

This module provides:
- run_storage: RunRecord persistence for the management commands
"""

from .run_storage import RunStorage

__all__ = ['RunStorage']
