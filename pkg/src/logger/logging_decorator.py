"""
Centralized Logging Utilities and Decorators

Provides the logging setup, function decorators and the CSV metrics sink used
across the pre-grasp relay project.

Usage:
    from src.logger import setup_logging, log_function

    # Setup logging for a package
    logger = setup_logging(
        logger_name="relaytrain",
        log_file="logs/pregrasp.log",
        verbose=True
    )

    # Decorate top-level operations for automatic logging
    @log_function(logger_name="datagen", log_execution_time=True)
    def collect_grasp(...):
        ...
"""

import csv
import functools
import logging
import time
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from rich.logging import RichHandler

DEFAULT_LOG_FILE = "logs/pregrasp.log"

PACKAGE_LOGGERS = (
    "scenesim",
    "cloudgen",
    "nets",
    "relaytrain",
    "datagen",
    "planner",
    "evalharness",
    "cli",
)


def setup_logging(
    logger_name: str,
    log_file: str = DEFAULT_LOG_FILE,
    verbose: bool = False,
    level: int = logging.INFO,
) -> logging.Logger:
    """
    Set up logging with a file handler and an optional rich console handler.

    Args:
        logger_name: Name for the logger (e.g., "datagen")
        log_file: Path to log file (default: "logs/pregrasp.log")
        verbose: If True, add a RichHandler console handler at DEBUG level
        level: Base logging level (default: logging.INFO)

    Returns:
        Configured logger instance

    Example:
        logger = setup_logging("relaytrain", verbose=True)
        logger.info("Phase 1 started")
    """
    logger = logging.getLogger(logger_name)

    # Avoid adding multiple handlers if already configured
    if logger.handlers:
        return logger

    logger.setLevel(logging.DEBUG if verbose else level)

    log_path = Path(log_file)
    log_path.parent.mkdir(parents=True, exist_ok=True)

    file_handler = logging.FileHandler(log_path)
    file_handler.setLevel(level)
    file_handler.setFormatter(
        logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    )
    logger.addHandler(file_handler)

    if verbose:
        console_handler = RichHandler(show_path=False, markup=False)
        console_handler.setLevel(logging.DEBUG)
        console_handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        logger.addHandler(console_handler)

    return logger


def setup_package_logging(
    log_file: str = DEFAULT_LOG_FILE, verbose: bool = False
) -> None:
    """Attach handlers to every package logger so one CLI run shares one log file."""
    for name in PACKAGE_LOGGERS:
        setup_logging(name, log_file=log_file, verbose=verbose)


def log_function(
    logger_name: Optional[str] = None,
    log_file: Optional[str] = None,
    level: int = logging.INFO,
    log_args: bool = False,
    log_result: bool = False,
    log_execution_time: bool = True,
) -> Callable:
    """
    Decorator to log function entry, exit, execution time, and exceptions.

    Args:
        logger_name: Custom logger name (if None, uses the decorated function's module name)
        log_file: Optional custom log file path (if None, uses existing logger config)
        level: Log level for entry/exit messages (default: logging.INFO)
        log_args: If True, log function arguments (default: False)
        log_result: If True, log return value (default: False)
        log_execution_time: If True, log execution duration (default: True)

    Returns:
        Decorated function with logging

    Example:
        @log_function(logger_name="planner", log_execution_time=True)
        def closed_loop(state, nets, cfg):
            ...
    """

    def decorator(func: Callable) -> Callable:
        name = logger_name or func.__module__

        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            if log_file:
                logger = setup_logging(
                    logger_name=f"{name}.{func.__name__}",
                    log_file=log_file,
                    level=level,
                )
            else:
                # Unconfigured loggers propagate to the root logger; no file is created
                logger = logging.getLogger(name)

            func_name = func.__name__
            log_msg = f"Calling {func_name}"
            if log_args and (args or kwargs):
                args_repr = [repr(a) for a in args]
                kwargs_repr = [f"{k}={v!r}" for k, v in kwargs.items()]
                log_msg += f" with args: {', '.join(args_repr + kwargs_repr)}"
            logger.log(level, log_msg)

            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                execution_time = time.perf_counter() - start_time
                logger.error(
                    f"Exception in {func_name} after {execution_time:.2f}s: {type(e).__name__}: {e}",
                    exc_info=True,
                )
                raise

            completion_msg = f"Completed {func_name}"
            if log_execution_time:
                completion_msg += f" in {time.perf_counter() - start_time:.2f}s"
            if log_result:
                completion_msg += f" with result: {result!r}"
            logger.log(level, completion_msg)
            return result

        return wrapper

    return decorator


def log_with_timer(logger_name: Optional[str] = None) -> Callable:
    """
    Simple decorator that logs function entry/exit with execution time.

    Example:
        @log_with_timer("datagen")
        def write_shards(records, directory):
            ...
    """
    return log_function(
        logger_name=logger_name,
        log_args=False,
        log_result=False,
        log_execution_time=True,
    )


class MetricsLogger:
    """
    Append-only CSV sink for per-epoch training metrics.

    The header is fixed at construction; rows missing a column are written
    with an empty cell. Each row is flushed so a crashed run keeps its curve.
    """

    def __init__(self, path: str | Path, fieldnames: Sequence[str]):
        self.path = Path(path)
        self.fieldnames = list(fieldnames)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "w", newline="")
        self._writer = csv.DictWriter(
            self._file, fieldnames=self.fieldnames, extrasaction="ignore"
        )
        self._writer.writeheader()
        self._file.flush()
        self.rows_written = 0

    def log(self, **row: Any) -> None:
        """Write one metrics row; floats are formatted with 6 significant digits."""
        formatted = {
            key: (f"{value:.6g}" if isinstance(value, float) else value)
            for key, value in row.items()
        }
        self._writer.writerow(formatted)
        self._file.flush()
        self.rows_written += 1

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()

    def __enter__(self) -> "MetricsLogger":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
