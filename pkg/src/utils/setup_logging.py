import logging
import sys
from logging.handlers import RotatingFileHandler


def setup_logging(log_level="INFO", log_file="forge.log"):
    """Configures the logging for the application."""
    log_formatter = logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")

    logger = logging.getLogger()
    if logger.hasHandlers():
        # Already configured; only the level may change between subcommands
        logger.setLevel(log_level.upper())
        return

    file_handler = RotatingFileHandler(log_file, maxBytes=5 * 1024 * 1024, backupCount=5)
    file_handler.setFormatter(log_formatter)

    # Console output goes to stdout; stderr is reserved for the one-line CLI diagnostic
    stream_handler = logging.StreamHandler(sys.stdout)
    stream_handler.setFormatter(log_formatter)

    logger.setLevel(log_level.upper())
    logger.addHandler(file_handler)
    logger.addHandler(stream_handler)

    # Suppress noisy loggers
    logging.getLogger("urllib3").setLevel(logging.WARNING)
    logging.getLogger("requests").setLevel(logging.WARNING)
