"""Exception hierarchy shared by every module of the package."""


class StaRabiError(Exception):
    """Base class for all package errors."""


class TruncationRisk(StaRabiError, ValueError):
    """Requested state or operator does not fit safely in the Fock truncation."""


class DegenerateCat(StaRabiError, ValueError):
    pass


class DimensionMismatch(StaRabiError, ValueError):
    pass


class ArctanhDomain(StaRabiError, ValueError):
    pass


class NonRealCoupling(StaRabiError, ValueError):
    pass


class StepFailure(StaRabiError, RuntimeError):
    """An integrator could not meet its error tolerance."""


class UnphysicalBath(StaRabiError, ValueError):
    """Squeezed-bath parameters violate |M|^2 <= N(N+1)."""


class ZeroProbability(StaRabiError, ValueError):
    pass


class DataQualityError(StaRabiError, ValueError):
    """An observable left its physical range by more than numerical slack."""


class ConfigError(StaRabiError, ValueError):
    """Invalid scenario configuration. ``location`` names the offending key."""

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class PositivityWarning(UserWarning):
    """Density matrix developed negative eigenvalues beyond truncation slack."""
