"""Root logger setup; the CLI calls configure_logging() once before dispatch."""
import logging
import sys

from .formatter import JSONFormatter


def configure_logging(log_level: str = "INFO") -> None:
    """Send JSON events at `log_level` and above to stderr; stdout is kept for data."""
    level = getattr(logging, log_level.upper(), logging.INFO)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JSONFormatter())

    root = logging.getLogger()
    root.handlers.clear()
    root.addHandler(handler)
    root.setLevel(level)
