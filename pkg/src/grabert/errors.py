"""Exception types shared across the package."""


class GrabertError(Exception):
    """Base class for all package-specific errors."""


class DomainError(GrabertError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DimensionMismatch(GrabertError, ValueError):
    """Operands have incompatible shapes."""


class DimensionError(GrabertError, ValueError):
    """Requested Hilbert-space dimension is unsupported."""


class NonFinite(GrabertError, ValueError):
    """A matrix contains NaN or Inf entries."""


class NotHermitian(GrabertError, ValueError):
    """A matrix required to be Hermitian is not, beyond tolerance."""


class ConvergenceFailure(GrabertError, RuntimeError):
    """An iterative linear-algebra routine failed to converge."""


class TraceNotZero(GrabertError, ValueError):
    """A matrix required to be trace-less has a nonzero trace."""


class DegenerateSpectrum(GrabertError, ValueError):
    """A perturbation-theory formula hit a (near-)degenerate weight pair."""

    def __init__(self, message, label=None, gap=None):
        super().__init__(message)
        self.label = label
        self.gap = gap


class StepTooLarge(GrabertError, ValueError):
    """A finite-difference step would leave the set of physical states."""


class SingularState(GrabertError, ValueError):
    """A diagnostic needing log(rho) was evaluated at a (near-)singular state."""


class PositivityBreach(GrabertError, RuntimeError):
    """Time integration produced a state with an eigenvalue below tolerance."""

    def __init__(self, message, time=None, min_eigenvalue=None, trajectory=None):
        super().__init__(message)
        self.time = time
        self.min_eigenvalue = min_eigenvalue
        self.trajectory = trajectory


class StepSizeError(GrabertError, RuntimeError):
    """The adaptive integrator could not meet its tolerance above dt_min."""


class ConfigError(GrabertError):
    """Base class for configuration-file problems."""


class ParseError(ConfigError):
    """Malformed JSON input."""

    def __init__(self, message, lineno=None, colno=None):
        super().__init__(message)
        self.lineno = lineno
        self.colno = colno


class ValidationError(ConfigError):
    """Structurally valid JSON that violates the config schema.

    ``errors`` is a list of ``(field_path, reason)`` pairs.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "; ".join(f"{path}: {reason}" for path, reason in self.errors)
        super().__init__(lines)
