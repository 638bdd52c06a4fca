"""Exception and warning types shared across the package."""


class KamrotorError(Exception):
    """Base class for errors raised by kamrotor computations."""


class ConfigError(KamrotorError):
    """Invalid parameters or run configuration."""


class SymmetryViolation(KamrotorError):
    """Momentum-translation symmetry of the one-kick operator is broken.

    Signals an odd lattice period, a non-coprime resonance fraction, or an
    implementation bug.
    """


class TruncationError(KamrotorError):
    """A truncated sum or truncated operator dropped non-negligible terms."""


class ConvergenceError(KamrotorError):
    """An eigensolver failed or produced residuals above tolerance."""


class InsufficientData(KamrotorError):
    """Not enough sample points for a requested fit."""


class NoValidConvergent(KamrotorError):
    """No rational approximation satisfying the parity and coprimality
    constraints could be found at the requested depth."""


class ComputeError(KamrotorError):
    """A computation failed for reasons other than bad configuration."""


class DegeneracyWarning(UserWarning):
    """Quasi-energy differences are degenerate within tolerance, so the
    stationary long-time average may not be reliable."""
