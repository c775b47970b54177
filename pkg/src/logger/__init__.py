"""Logging setup, decorators and the training metrics sink."""

from .logging_decorator import (
    MetricsLogger,
    log_function,
    log_with_timer,
    setup_logging,
    setup_package_logging,
)

__all__ = [
    "setup_logging",
    "setup_package_logging",
    "log_function",
    "log_with_timer",
    "MetricsLogger",
]
