"""
Logging setup shared by the CLI and the explorer app.

Logs go to stderr; stdout is reserved for JSON reports.
"""
import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(verbose: bool = False) -> None:
    """Configure the root logger once; repeated calls only adjust the level."""
    level = logging.DEBUG if verbose else logging.WARNING
    root = logging.getLogger()
    if not any(getattr(h, "_epinet", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._epinet = True  # type: ignore[attr-defined]
        root.addHandler(handler)
    root.setLevel(level)
