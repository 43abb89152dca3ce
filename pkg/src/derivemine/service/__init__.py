"""HTTP service layer (FastAPI) for the curation workflow."""

from .app import create_app

__all__ = ["create_app"]
