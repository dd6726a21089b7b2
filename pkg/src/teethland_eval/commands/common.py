"""Helpers shared by the command handlers."""

import logging
from pathlib import Path

from ..config import AppConfig
from ..exceptions import ValidationError

logger = logging.getLogger(__name__)

CONFIG_ECHO = "config.yaml"


def require_dir(path: Path | str, what: str) -> Path:
    """Return `path` as a Path, raising ValidationError if it is not a directory."""
    path = Path(path)
    if not path.is_dir():
        raise ValidationError(f"{what} directory not found: {path}")
    return path


def prepare_output(path: Path | str, config: AppConfig) -> Path:
    """Create the output directory and echo the resolved configuration into it."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / CONFIG_ECHO).write_text(config.to_yaml())
    logger.debug(f"Echoed configuration to {path / CONFIG_ECHO}")
    return path
