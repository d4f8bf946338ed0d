"""Conflict-management workbench for multi-xApp RAN control."""

from ._accel import backend
from .domain import ConflictLabel, MappingTables, SnapshotRecord, SystemModel, validate_model

__version__ = "0.1.0"

__all__ = [
    "ConflictLabel",
    "MappingTables",
    "SnapshotRecord",
    "SystemModel",
    "backend",
    "validate_model",
    "__version__",
]
