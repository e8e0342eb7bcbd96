"""Exception hierarchy shared across the package.

Two failure classes matter to callers: configuration problems (bad config
files, out-of-domain parameters) and numeric problems (non-PD matrices,
insufficient grid coverage, degenerate constructions). The CLI maps them to
exit codes 1 and 2 respectively.
"""


class BanditLabError(Exception):
    """Base class for all package errors."""


class ConfigError(BanditLabError):
    """Invalid configuration or out-of-domain parameter."""


class NumericError(BanditLabError):
    """Numeric failure: factorization, coverage, or degenerate construction."""
