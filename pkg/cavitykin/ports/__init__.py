"""Port interfaces for the application.

This package defines abstract interfaces (ports) that adapters must implement.
"""

from cavitykin.ports.store import ArtifactStore

__all__ = ["ArtifactStore"]
