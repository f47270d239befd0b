"""SMC-ABC inference for the stochastic FitzHugh-Nagumo model.

Simulates the model with a structure-preserving splitting scheme, summarizes
voltage traces through their invariant density and spectral density, and
recovers the four model parameters with a sequential Monte Carlo ABC sampler.
"""

from .errors import (
    ConfigError,
    DegenerateDataError,
    DegeneratePopulationError,
    EmptyColumnError,
    EmptyTruncationError,
    FhnAbcError,
    InsufficientDataError,
    InvalidWeightsError,
    NonNumericDataError,
    NumericalError,
    SimulationBlowupError,
    UnsupportedRegimeError,
)
from .model import (
    ModelParams,
    State,
    Trajectory,
    drift,
    kappa,
    linear_matrices,
    ode_flow,
    strang_path,
)

__version__ = "0.1.0"
