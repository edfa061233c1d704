"""Centralized logging configuration with multi-level verbosity support.

This module provides setup_logging() for configuring logging based on
verbosity count from CLI arguments (-v, -vv, -vvv).
"""

import logging
import sys

PACKAGE_LOGGER = "iaas_signature_selection_tool"


def setup_logging(verbose_count: int = 0) -> None:
    """Configure logging based on verbosity level.

    Args:
        verbose_count: Number of -v flags (0-3+)
            0: WARNING level (quiet mode)
            1: INFO level (pipeline stages)
            2: DEBUG level (numeric detail)
            3+: DEBUG with thread names (parallel experiment grid)

    Example:
        >>> setup_logging(0)  # No -v flag: WARNING only
        >>> setup_logging(1)  # -v: INFO level
        >>> setup_logging(3)  # -vvv: DEBUG + worker thread names
    """
    if verbose_count <= 0:
        level = logging.WARNING
    elif verbose_count == 1:
        level = logging.INFO
    else:
        level = logging.DEBUG

    fmt = "[%(levelname)s] %(message)s"
    if verbose_count >= 3:
        fmt = "[%(levelname)s] [%(threadName)s] %(name)s: %(message)s"

    logging.basicConfig(
        level=level,
        format=fmt,
        stream=sys.stderr,
        force=True,  # Override any existing configuration
    )
    logging.getLogger(PACKAGE_LOGGER).setLevel(level)


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance for a module.

    Args:
        name: Module name (typically __name__)

    Returns:
        Logger instance

    Example:
        >>> logger = get_logger(__name__)
        >>> logger.info("Signature generated")
    """
    return logging.getLogger(name)
