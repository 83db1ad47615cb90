"""Logging module for the cat-balance solvers."""

import logging
import sys
from logging.handlers import RotatingFileHandler


class Logger:
    """Custom logger for the solver library and the experiment harness."""

    def __init__(self, verbose: bool = False, log_file: str | None = "cat_balance.log"):
        """Initialize the logger.

        Args:
            verbose: Whether to enable verbose logging output
            log_file: Path to the log file, or None to log to the console only
        """
        self.verbose = verbose
        self.log_file = log_file
        self._setup_logging()

    def _setup_logging(self) -> None:
        """Set up the logging configuration."""
        formatter = logging.Formatter("[%(asctime)s] %(message)s", datefmt="%Y-%m-%d %H:%M:%S")

        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setFormatter(formatter)

        self._logger = logging.getLogger("cat_balance")
        self._logger.setLevel(logging.DEBUG)

        # Remove any existing handlers
        for handler in self._logger.handlers:
            handler.close()
        self._logger.handlers = []
        self._logger.addHandler(console_handler)

        if self.log_file:
            # 100KB limit, 3 backups
            file_handler = RotatingFileHandler(
                self.log_file, maxBytes=100 * 1024, backupCount=3, encoding="utf-8"
            )
            file_handler.setFormatter(formatter)
            self._logger.addHandler(file_handler)
            self._logger.info(f"Logging initialized. File logging to {self.log_file} (100KB limit)")

    def setLevel(self, level: int) -> None:
        """Set the logging level.

        Args:
            level: The logging level to set
        """
        self._logger.setLevel(level)

    def info(self, message: str) -> None:
        """Log an info message."""
        self._logger.info(message)

    def warning(self, message: str) -> None:
        """Log a warning message."""
        self._logger.warning(message)

    def error(self, message: str) -> None:
        """Log an error message."""
        self._logger.error(message)

    def debug(self, message: str) -> None:
        """Log a debug message, only in verbose mode."""
        if self.verbose:
            self._logger.debug(message)

    def isEnabledFor(self, level: int) -> bool:
        """Check if the logger is enabled for the given level.

        Args:
            level: The logging level to check

        Returns:
            True if the logger is enabled for the given level, False otherwise
        """
        return self._logger.isEnabledFor(level)

    def banner(self, message: str) -> None:
        """Log a banner message."""
        self._logger.info(message)

    def run_started(self, label: str, points: str, t_end: float) -> None:
        """Log the start of a simulation in a single line.

        Args:
            label: Scheme label such as ``wbacat4``
            points: Mesh size description
            t_end: Final time
        """
        self._logger.info(f"🚀 {label} on {points} points up to t={t_end:g}")

    def step_progress(self, step: int, t: float, dt: float) -> None:
        """Log time-loop progress in verbose mode."""
        if self.verbose:
            self._logger.info(f"⏱️  step {step}: t={t:.6g} dt={dt:.3g}")

    def stationary_fallback(self, count: int, total: int) -> None:
        """Log nodes that fell back to the plain scheme in verbose mode.

        Args:
            count: Number of nodes without a local stationary solution
            total: Number of updated nodes
        """
        if self.verbose and count:
            self._logger.info(f"⚠️  {count}/{total} nodes without stationary solution, plain update used")

    def run_finished(self, label: str, steps: int, wall_time: float) -> None:
        """Log the end of a simulation."""
        self._logger.info(f"✅ {label} finished after {steps} steps in {wall_time:.2f}s")
