"""Yes/no compatibility-question answering service."""

__version__ = "0.1.0"

from .app import create_app
from .config import ServiceConfig

__all__ = ["create_app", "ServiceConfig"]
