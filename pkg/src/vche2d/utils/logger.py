"""
vche2d Logging Infrastructure

Structured JSON logging for simulation runs and experiment harness.
"""

import json
import logging
import logging.handlers
import sys
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, TextIO


class LogLevel(Enum):
    """Log level enumeration."""
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"

    @classmethod
    def parse(cls, value: str) -> "LogLevel":
        """Parse a case-insensitive level name."""
        try:
            return cls(str(value).upper())
        except ValueError as e:
            valid = ", ".join(level.value for level in cls)
            raise ValueError(f"Unknown log level '{value}' (valid: {valid})") from e


class StructuredFormatter(logging.Formatter):
    """Formats each record as one JSON object."""

    def format(self, record: logging.LogRecord) -> str:
        log_entry: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        if hasattr(record, "extra_fields"):
            for key, value in record.extra_fields.items():
                # fields never shadow the record keys
                log_entry[f"field_{key}" if key in log_entry else key] = value

        # numpy scalars go through .item(), anything else through repr
        return json.dumps(log_entry, default=_json_fallback)


def _json_fallback(value: Any) -> Any:
    if hasattr(value, "item"):
        try:
            return value.item()
        except (TypeError, ValueError):
            pass
    return repr(value)


class VcheLogger:
    """Thin wrapper around a stdlib logger that accepts structured fields."""

    def __init__(self, name: str = "vche2d"):
        self.name = name
        self.logger = logging.getLogger(name)
        self._configured = False

    def configure(self,
                  level: LogLevel = LogLevel.INFO,
                  log_file: Optional[str] = None,
                  max_file_size: int = 10 * 1024 * 1024,
                  backup_count: int = 5,
                  structured: bool = True,
                  stream: Optional[TextIO] = None) -> None:
        """Configure handlers for this logger.

        Args:
            level: Minimum level emitted
            log_file: Optional path of a rotating log file
            max_file_size: Rotation threshold in bytes
            backup_count: Number of rotated files kept
            structured: Emit JSON records instead of plain text
            stream: Console stream, stderr by default
        """
        if self._configured:
            return

        self.logger.setLevel(getattr(logging, level.value))
        self.logger.handlers.clear()

        formatter: logging.Formatter
        if structured:
            formatter = StructuredFormatter()
        else:
            formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")

        console_handler = logging.StreamHandler(stream or sys.stderr)
        console_handler.setFormatter(formatter)
        self.logger.addHandler(console_handler)

        if log_file:
            Path(log_file).parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.handlers.RotatingFileHandler(
                log_file,
                maxBytes=max_file_size,
                backupCount=backup_count,
            )
            file_handler.setFormatter(formatter)
            self.logger.addHandler(file_handler)

        self._configured = True

    def reset(self) -> None:
        """Drop handlers so the logger can be configured again."""
        for handler in list(self.logger.handlers):
            handler.close()
        self.logger.handlers.clear()
        self._configured = False

    def debug(self, message: str, /, **kwargs: Any) -> None:
        self._log(logging.DEBUG, message, **kwargs)

    def info(self, message: str, /, **kwargs: Any) -> None:
        self._log(logging.INFO, message, **kwargs)

    def warning(self, message: str, /, **kwargs: Any) -> None:
        self._log(logging.WARNING, message, **kwargs)

    def error(self, message: str, /, **kwargs: Any) -> None:
        self._log(logging.ERROR, message, **kwargs)

    def critical(self, message: str, /, **kwargs: Any) -> None:
        self._log(logging.CRITICAL, message, **kwargs)

    def _log(self, level: int, message: str, /, **kwargs: Any) -> None:
        extra = {"extra_fields": kwargs} if kwargs else {}
        self.logger.log(level, message, extra=extra)


# Package root logger; child loggers propagate to its handlers
logger = VcheLogger()


def get_logger(name: Optional[str] = None) -> VcheLogger:
    """Get a logger instance, the package root logger when no name is given."""
    if name:
        # modules imported through the src package still log under vche2d
        if name.startswith("src."):
            name = name[len("src."):]
        return VcheLogger(name)
    return logger


def configure_logging(level: LogLevel = LogLevel.INFO,
                      log_file: Optional[str] = None,
                      structured: bool = True) -> None:
    """Configure global logging settings."""
    logger.configure(level=level, log_file=log_file, structured=structured)
