"""
Structured event logging for the engine.

Events are short snake_case names; everything else goes in keyword fields:

    logger = get_logger(__name__)
    logger.warning("e_m_adjusted", t=4, anchor=17, e_m=496.0)
"""
import logging
from typing import Any


class ContextLogger:
    """Forwards keyword fields to the wrapped logger as record attributes."""

    def __init__(self, logger: logging.Logger) -> None:
        self._logger = logger

    def debug(self, event: str, **fields: Any) -> None:
        self._logger.debug(event, extra=fields)

    def info(self, event: str, **fields: Any) -> None:
        self._logger.info(event, extra=fields)

    def warning(self, event: str, **fields: Any) -> None:
        self._logger.warning(event, extra=fields)

    def error(self, event: str, **fields: Any) -> None:
        self._logger.error(event, extra=fields)


def get_logger(name: str) -> ContextLogger:
    return ContextLogger(logging.getLogger(name))
