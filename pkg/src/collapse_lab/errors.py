"""Semantic exception hierarchy shared across the lab."""


class CollapseLabError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CollapseLabError, ValueError):
    """An input is outside the mathematical domain of an operation."""


class SingularityError(CollapseLabError, ValueError):
    """A distribution support touches a non-integrable singularity (1/gamma^2 at 0)."""


class ConfigError(CollapseLabError, ValueError):
    """Invalid configuration: bad parameter combination, unknown key, malformed value."""


class UsageError(CollapseLabError, RuntimeError):
    """An API was called out of order (e.g. backward before forward)."""


class DivergenceError(CollapseLabError, RuntimeError):
    """A simulation or training run produced non-finite state.

    Carries whatever partial results were valid at abort time in
    ``partial`` so callers can inspect the last good state.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
