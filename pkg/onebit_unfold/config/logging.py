"""
Logging configuration for onebit-unfold.
Supports JSON, console and key=value text output through structlog.

Handlers write to stderr: stdout is reserved for command results such as
dataset digests and final losses.
"""
import logging
import logging.config
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import structlog

_SHARED_PROCESSORS: List[Any] = [
    structlog.stdlib.add_logger_name,
    structlog.stdlib.add_log_level,
    structlog.stdlib.PositionalArgumentsFormatter(),
    structlog.processors.TimeStamper(fmt="iso"),
    structlog.processors.StackInfoRenderer(),
    structlog.processors.format_exc_info,
    structlog.processors.UnicodeDecoder(),
]


def setup_logging(level: Optional[str] = None, format_type: Optional[str] = None) -> None:
    """
    Setup application logging configuration.

    Args:
        level: Override log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        format_type: Override format type (json, text, console)
    """
    from onebit_unfold.config.settings import get_settings

    settings = get_settings()

    log_level = (level or settings.log_level).upper()
    log_format = (format_type or settings.log_format).lower()

    if settings.log_file:
        Path(settings.log_file).parent.mkdir(parents=True, exist_ok=True)

    if log_format == "json":
        renderer: Any = structlog.processors.JSONRenderer()
    elif log_format == "console":
        renderer = structlog.dev.ConsoleRenderer(colors=False)
    else:  # text
        renderer = structlog.processors.KeyValueRenderer(
            key_order=["timestamp", "level", "logger", "event"]
        )

    structlog.configure(
        processors=[structlog.stdlib.filter_by_level]
        + _SHARED_PROCESSORS
        + [structlog.stdlib.ProcessorFormatter.wrap_for_formatter],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )

    logging.config.dictConfig(_dict_config(log_level, renderer, settings.log_file))

    get_logger(__name__).debug(
        "logging_configured",
        level=log_level,
        format=log_format,
        environment=settings.environment,
        app_version=settings.app_version,
    )


def _dict_config(level: str, renderer: Any, log_file: Optional[str]) -> Dict[str, Any]:
    handlers = ["console"]
    if log_file:
        handlers.append("file")

    config: Dict[str, Any] = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "structured": {
                "()": structlog.stdlib.ProcessorFormatter,
                "processor": renderer,
                "foreign_pre_chain": _SHARED_PROCESSORS,
            }
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "level": level,
                "formatter": "structured",
                "stream": sys.stderr,
            }
        },
        "root": {
            "level": level,
            "handlers": handlers,
        },
    }

    if log_file:
        config["handlers"]["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "level": level,
            "formatter": "structured",
            "filename": log_file,
            "maxBytes": 10485760,  # 10MB
            "backupCount": 5,
        }
    return config


def get_logger(name: str) -> Any:
    """Get a structlog logger bound to the given name."""
    return structlog.get_logger(name)


class LogLevel:
    """Context manager to temporarily change log level."""

    def __init__(self, logger_name: str, level: str):
        self.logger = logging.getLogger(logger_name)
        self.original_level = self.logger.level
        self.new_level = getattr(logging, level.upper())

    def __enter__(self) -> logging.Logger:
        self.logger.setLevel(self.new_level)
        return self.logger

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        self.logger.setLevel(self.original_level)
