"""Exception types shared across the package."""


class StoragetailError(Exception):
    """Base class for all package-specific failures."""


class SchemaError(StoragetailError, ValueError):
    """Config or JSON schema violation. ``key`` names the offending field."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class InvariantViolation(StoragetailError, ValueError):
    """A documented data invariant was violated (e.g. nonpositive tail value)."""


class ExtrapolationError(StoragetailError, ValueError):
    """Tabulated tail queried outside its grid hull with no extrapolation rule."""


class NumericalError(StoragetailError, RuntimeError):
    """Quadrature divergence or other numeric failure. Carries a partial value."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class DegenerateModelError(StoragetailError, ValueError):
    """Model parameters make the requested quantity degenerate (e.g. beta = -1)."""


class DegenerateProfileError(StoragetailError, RuntimeError):
    """Scale profile has no usable unique minimizer (flat valley)."""


class UnsupportedModelError(StoragetailError, ValueError):
    """Operation not defined for this model variant."""


class BudgetError(StoragetailError, RuntimeError):
    """A configured computational budget would be exceeded."""
