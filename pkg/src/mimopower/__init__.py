"""Minimum transmit power of training-based multi-antenna links under mobility."""

from .channel import ConfigError, SystemConfig

__version__ = "0.1.0"

__all__ = ["ConfigError", "SystemConfig", "__version__"]
