"""Error types raised by spdflow.

Every error carries the structured fields named in its signature as attributes so
that callers (and the CLI) can report them without parsing messages.
"""


class SpdflowError(Exception):
    """Base class for all spdflow errors."""


class NonPositiveEigenvalue(SpdflowError, ValueError):
    """A matrix expected to be positive definite has an eigenvalue <= eps_pd."""

    def __init__(self, index, value, step=None, window=None):
        self.index = index
        self.value = value
        self.step = step
        self.window = window
        where = ""
        if step is not None:
            where = f" at simulation step {step}"
        elif window is not None:
            where = f" in window {window}"
        super().__init__(
            f"Eigenvalue {index} is {value:.3e}, not positive definite{where}."
        )


class DimensionMismatch(SpdflowError, ValueError):
    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"Dimension mismatch: expected {expected}, got {got}.")


class DimensionError(SpdflowError, ValueError):
    pass


class IndexOutOfRange(SpdflowError, IndexError):
    def __init__(self, index, m):
        self.index = index
        self.m = m
        super().__init__(f"Frame index {index} outside 1..{m}.")


class NoConvergence(SpdflowError, RuntimeError):
    def __init__(self, iterations, gradient_norm):
        self.iterations = iterations
        self.gradient_norm = gradient_norm
        super().__init__(
            f"No convergence after {iterations} iterations "
            f"(gradient norm {gradient_norm:.3e})."
        )


class NotPSD(SpdflowError, ValueError):
    def __init__(self, min_eigenvalue):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"Covariance is not positive semidefinite "
            f"(min eigenvalue {min_eigenvalue:.3e})."
        )


class ZeroTangent(SpdflowError, ValueError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"Tangent vector {index} has zero norm.")


class InsufficientData(SpdflowError, ValueError):
    pass


class SingularNormalEquations(SpdflowError, ArithmeticError):
    def __init__(self, condition_number, coordinate=None):
        self.condition_number = condition_number
        self.coordinate = coordinate
        where = f" for coordinate {coordinate}" if coordinate is not None else ""
        super().__init__(
            f"Normal equations singular{where} "
            f"(condition number {condition_number:.3e})."
        )


class SingularFisher(SpdflowError, ArithmeticError):
    pass


class ZeroVariance(SpdflowError, ValueError):
    pass


class MixedLag(SpdflowError, ValueError):
    def __init__(self, lags):
        self.lags = lags
        super().__init__(f"Fits use different lags: {sorted(set(lags))}.")


class WindowTooShort(SpdflowError, ValueError):
    def __init__(self, samples):
        self.samples = samples
        super().__init__(
            f"Window holds {samples} samples; at least 2 are required."
        )


class PlanMismatch(SpdflowError, ValueError):
    pass


class ConfigError(SpdflowError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config error in '{field}': {message}")
