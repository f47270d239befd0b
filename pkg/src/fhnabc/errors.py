"""Exception types shared across the package."""


class FhnAbcError(Exception):
    """Base class for all package-specific errors."""


class UnsupportedRegimeError(FhnAbcError):
    """The linear oscillator is not weakly damped (kappa <= 0); the
    closed-form propagation matrices implemented here do not apply."""


class SimulationBlowupError(FhnAbcError):
    """A simulated path produced a non-finite state."""

    def __init__(self, step_index: int):
        self.step_index = step_index
        super().__init__(f"non-finite state at step {step_index}")


class DegenerateDataError(FhnAbcError, ValueError):
    """Input series is constant (or otherwise has zero variance)."""


class InsufficientDataError(FhnAbcError, ValueError):
    """Input series is too short for the requested estimator."""


class NonNumericDataError(FhnAbcError, ValueError):
    """A delimited file cell could not be parsed as a number."""


class EmptyColumnError(FhnAbcError, ValueError):
    """The selected file column contains no data rows."""


class InvalidWeightsError(FhnAbcError, ValueError):
    """A weight vector violates its positivity/normalization contract."""


class EmptyTruncationError(FhnAbcError):
    """No previous-population particle survives the distance truncation."""


class DegeneratePopulationError(FhnAbcError):
    """All unnormalized particle weights are zero."""


class NumericalError(FhnAbcError):
    """A matrix factorization failed beyond repair (after jitter retries)."""


class ConfigError(FhnAbcError, ValueError):
    """Invalid or inconsistent run configuration."""
