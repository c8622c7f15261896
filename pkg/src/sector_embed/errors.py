"""Exception types shared across the package.

Every error carries a short machine-readable ``category`` which the command
line front end reports alongside a nonzero exit code.
"""

from __future__ import annotations


class SectorEmbedError(Exception):
    category = "error"
    exit_code = 1


class ParseError(SectorEmbedError):
    """Malformed input file. ``line`` is 1-based when known."""

    category = "parse"
    exit_code = 2

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ValidationError(SectorEmbedError):
    category = "validation"
    exit_code = 3


class ConfigurationError(SectorEmbedError):
    category = "config"
    exit_code = 4


class TrainingError(SectorEmbedError):
    category = "training"
    exit_code = 5


class UnknownTickerError(SectorEmbedError, KeyError):
    category = "unknown-ticker"
    exit_code = 6

    def __init__(self, ticker: str, suggestion: str | None = None):
        self.ticker = ticker
        self.suggestion = suggestion
        msg = f"unknown ticker {ticker!r}"
        if suggestion:
            msg += f"; did you mean {suggestion!r}?"
        super().__init__(msg)

    def __str__(self) -> str:  # KeyError would otherwise repr() the message
        return self.args[0]


class DataWarning(UserWarning):
    """Recoverable data problem: a row, ticker or document was skipped."""
