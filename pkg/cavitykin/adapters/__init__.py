"""Adapter implementations for the application.

This package contains concrete implementations of port interfaces.
"""

from cavitykin.adapters.file_store import FileArtifactStore

__all__ = ["FileArtifactStore"]
