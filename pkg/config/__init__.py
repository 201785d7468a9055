"""Settings for the key-rate toolkit, read from ``QKDLAB_*`` environment variables."""

from .settings import Settings, get_settings

__all__ = ["Settings", "get_settings"]
