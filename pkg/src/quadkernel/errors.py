"""Exception hierarchy shared by every module of the package."""


class QuadKernelError(Exception):
    """Base class for all package errors."""


class ModelInvalidError(QuadKernelError):
    """The model itself is malformed (e.g. non positive-definite covariance)."""


class ConfigError(QuadKernelError):
    """A configuration document failed to parse or validate."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class UnsupportedReflectionError(QuadKernelError):
    """The requested closed form only exists for orthogonal (identity) reflection."""


class DomainError(QuadKernelError):
    """An argument lies outside the domain on which an operation is defined."""


class BranchCutError(DomainError):
    """An argument lies on a branch cut of a multivalued function."""


class PoleError(QuadKernelError):
    """Evaluation hit a pole (or a zero of a denominator)."""


class ConvergenceError(QuadKernelError):
    """An iterative solver or quadrature failed to reach its tolerance."""


class UnsupportedAngleError(QuadKernelError):
    """The asymptotic theory does not cover the requested direction."""


class BoundaryRegimeError(QuadKernelError):
    """The direction sits on a regime boundary where no single exponent applies."""
