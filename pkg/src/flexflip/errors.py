"""Exception types shared across the package."""


class FlexFlipError(Exception):
    """Base class for all package errors."""


class UnreachableEndpoint(FlexFlipError):
    """Requested contact position lies outside the rod's reachable half-disk."""


class ContactInfeasible(FlexFlipError):
    """No friction coefficient can maintain the contact (force outside the cone)."""


class UnconvergedSolution(FlexFlipError):
    """An operation requiring a converged solution was given an unconverged one."""


class DegenerateFit(FlexFlipError):
    """Least-squares fit is undefined (all abscissae identical)."""


class NoSuccesses(FlexFlipError):
    """Sweep produced no successful attempts; derived quantities undefined."""


class ConfigError(FlexFlipError):
    """Run configuration file is missing, malformed, or violates an invariant."""
