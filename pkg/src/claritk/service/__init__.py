"""HTTP facade with file-backed project persistence and background jobs."""

from .app import create_app

__all__ = ["create_app"]
