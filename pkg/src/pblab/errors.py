"""Exception hierarchy shared by the library and the command line tool.

The split mirrors the process exit codes: configuration and input problems
exit with 2, violated mathematical preconditions with 3, and numerically
untrustworthy alternating sums with 4.
"""


class PblabError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PblabError, ValueError):
    """Malformed input: bad config values, unparsable files, range errors."""

    exit_code = 2


class SizeError(ValidationError):
    """A request exceeds a hard size guard (e.g. brute force beyond n=25)."""


class HypothesisError(PblabError):
    """A mathematical precondition fails (zero mean, cap below max entry, ...)."""

    exit_code = 3


class ConditioningError(PblabError):
    """An alternating sum lost too much precision to be trusted."""

    exit_code = 4
