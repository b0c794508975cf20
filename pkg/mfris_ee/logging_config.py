"""Structured logging setup shared by the library, the CLI and the API."""

import logging
import os
import sys

import structlog

_configured = False


def configure_logging(level: str = None, json: bool = None) -> None:
    """Route structlog through stdlib logging; safe to call more than once"""
    global _configured
    level = (level or os.getenv("MFRIS_LOG_LEVEL", "INFO")).upper()
    if json is None:
        json = os.getenv("MFRIS_LOG_JSON", "false").lower() == "true"

    logging.basicConfig(level=getattr(logging, level, logging.INFO), stream=sys.stderr, format="%(message)s")
    logging.getLogger().setLevel(getattr(logging, level, logging.INFO))

    renderer = structlog.processors.JSONRenderer() if json else structlog.dev.ConsoleRenderer(colors=False)
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )
    _configured = True


def get_logger(name: str):
    if not _configured:
        configure_logging()
    return structlog.get_logger(name)
