"""HTTP service wrapping the analysis pipelines."""

from .app import app, create_app

__all__ = ["app", "create_app"]
