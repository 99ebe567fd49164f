"""Exception types shared across the package."""


class RankOneError(Exception):
    """Base class for all package-specific failures."""


class DepthTooShallow(RankOneError):
    """A tower of depth K cannot resolve the requested shift or orbit range.

    Callers should rebuild with a larger K.
    """


class OdometerCase(RankOneError):
    """Operation undefined for odometer-like parameters (the rational
    eigenvalue group is infinite, no finite order d exists)."""


class NotBounded(RankOneError):
    """Construction parameters exceed the supplied bound on the horizon."""


class ConsistencyFailure(RankOneError):
    """A cyclic factor of order d is inconsistent with the stacking order
    (some column offset is not divisible by d); signals misclassification."""


class StageUnavailable(RankOneError):
    """An explicit stage list was exhausted before the requested stage."""


class ConfigError(RankOneError):
    """Malformed run configuration (CLI exit code 2)."""
