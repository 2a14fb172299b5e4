import getpass
import logging
import logging.config
import os
import tempfile

from .utils import safe_makedirs

# save .log in $HOME/.local/share/hankelmusic (if possible) else in
# /tmp/hankelmusic-user.log
if "HOME" in os.environ:
    _XDG_CACHE_HOME = os.path.join(os.environ["HOME"], ".local", "share")
else:
    _XDG_CACHE_HOME = ""


def _log_filename():
    """Pick a writable location for the log file"""

    if (
        "XDG_CACHE_HOME" in os.environ
        and os.path.isdir(os.environ["XDG_CACHE_HOME"])
        and os.access(os.environ["XDG_CACHE_HOME"], os.W_OK)
    ):
        safe_makedirs(
            os.path.join(os.environ["XDG_CACHE_HOME"], "hankelmusic")
        )
        return os.path.join(
            os.environ["XDG_CACHE_HOME"], "hankelmusic", "hankelmusic.log"
        )
    elif os.path.isdir(_XDG_CACHE_HOME) and os.access(
        _XDG_CACHE_HOME, os.W_OK
    ):
        safe_makedirs(os.path.join(_XDG_CACHE_HOME, "hankelmusic"))
        return os.path.join(_XDG_CACHE_HOME, "hankelmusic", "hankelmusic.log")
    else:
        return os.path.join(
            tempfile.gettempdir(),
            "hankelmusic-{}.log".format(getpass.getuser()),
        )


def logging_config(level: str = "WARNING", filename: str = None) -> dict:
    """Dictionary handed to `logging.config.dictConfig`

    Parameters
    ----------
    level : `string`
        Level of the console handler. The file handler always logs DEBUG.

    filename : `string`
        Log file. Default is chosen by `_log_filename`.

    Returns
    -------
    config : `dictionary`
    """

    if filename is None:
        filename = _log_filename()

    return {
        "version": 1,
        "disable_existing_loggers": False,
        "root": {"level": "DEBUG", "handlers": ["file", "console"]},
        "formatters": {
            "standard": {
                "format": "%(asctime)s -- %(levelname)s -- %(message)s"
            },
            "short": {"format": "%(levelname)s -- %(message)s"},
            "long": {
                "format": "%(asctime)s -- %(levelname)s -- %(message)s "
                "(%(funcName)s in %(filename)s)"
            },
            "free": {"format": "%(message)s"},
        },
        "handlers": {
            "file": {
                "level": "DEBUG",
                "class": "logging.handlers.RotatingFileHandler",
                "maxBytes": 1000000,
                "backupCount": 3,
                "formatter": "long",
                "filename": filename,
            },
            "console": {
                "level": level.upper(),
                "class": "logging.StreamHandler",
                "formatter": "short",
            },
        },
        "loggers": {
            "matplotlib": {"level": "WARNING"},
            "PIL": {"level": "WARNING"},
        },
    }


def set_logger(level: str = "WARNING", filename: str = None):
    """build and return a logger

    Parameters
    ----------
    level : `string`
        Console verbosity (DEBUG, INFO, WARNING, ERROR, CRITICAL).

    filename : `string`
        Optional path of the rotating log file.

    Returns
    -------
    logger : `Logger instance`
    """

    if not isinstance(level, str):
        raise TypeError("`level` must be a string")

    _logger = logging.getLogger()

    # Load the configuration
    logging.config.dictConfig(logging_config(level, filename))

    return _logger
