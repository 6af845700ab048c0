"""HTTP service wrapping the core package: pydantic schemas, handler
functions, and the FastAPI app."""

from .app import app

__all__ = ["app"]
