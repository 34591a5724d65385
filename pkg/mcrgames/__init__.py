"""
mcrgames: multi-player min-cost reachability games and the micro-grid case study.

The package exposes the game model, the game transforms, the zero-sum
solvers, the Nash-equilibrium machinery and the micro-grid pipeline. Logging
is configured once through configure_logging; handlers go on the package
logger, never on the root logger.

Usage:
    from mcrgames import configure_logging
    from mcrgames.config import BaseConfig
    configure_logging(BaseConfig)
"""
import logging
from logging.handlers import TimedRotatingFileHandler

from rich.console import Console
from rich.logging import RichHandler

__version__ = "1.0.0"

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

_configured = False


def configure_logging(config, level=None):
    """
    Attach diagnostics handlers to the package logger.

    Args:
        config: A configuration class such as BaseConfig.
        level: Optional level name overriding config.LOG_LEVEL.

    Returns:
        logging.Logger: The configured package logger.
    """
    global _configured
    if _configured:
        if level:
            logger.setLevel(level)
        return logger

    logger.setLevel(level or config.LOG_LEVEL)

    # Console diagnostics go to standard error; standard output carries data only.
    console_handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=True,
    )
    console_handler.setFormatter(logging.Formatter('%(message)s', datefmt=config.LOG_DATEFMT))
    logger.addHandler(console_handler)

    # Optional file log with timed rotation (rotates at midnight).
    if config.LOG_FILE:
        file_handler = TimedRotatingFileHandler(
            config.LOG_FILE, when="midnight", backupCount=config.LOG_BACKUP_COUNT
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(config.LOG_FORMAT, datefmt=config.LOG_DATEFMT))
        logger.addHandler(file_handler)

    _configured = True
    logger.debug("Logging configured at level %s", logging.getLevelName(logger.level))
    return logger
