"""exceptions

Errors raised by the hankelmusic package
"""


class HankelMusicError(Exception):
    """Base class for every error raised on purpose by hankelmusic"""


class DomainError(HankelMusicError, ValueError):
    """A numeric argument lies outside the domain where the operation is
    defined (empty frequency set, zero-norm signal, `L` out of range, ...)
    """


class ConfigError(HankelMusicError, ValueError):
    """Invalid configuration or malformed input file"""
