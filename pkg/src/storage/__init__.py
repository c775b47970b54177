"""
Storage module for run artefacts.

This module provides the abstract storage interface and its local
filesystem implementation used by every artefact writer.
"""

from .base import BaseStorage
from .local import LocalStorage

__all__ = [
    "BaseStorage",
    "LocalStorage",
]
