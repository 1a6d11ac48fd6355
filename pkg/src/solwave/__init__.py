"""solwave: ground states and dynamics of a two-component coupled NLS system.

The package computes constrained energy minimizers on a periodic grid,
integrates the time-dependent system with a Strang splitting scheme and
checks rearrangement inequalities, all against closed-form solutions.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegenerateConstraint,
    Diverged,
    InvalidArgument,
    InvalidFamily,
    NumericalBlowup,
    NumericalFailure,
    SolwaveError,
    SupportOverlap,
)
from .fieldcore import Grid, State, make_grid  # noqa: E402
from .model import Coupling, ModelParams, MultiplierPair  # noqa: E402

__all__ = [
    "__version__", "Grid", "State", "make_grid", "Coupling", "ModelParams", "MultiplierPair",
    "SolwaveError", "InvalidArgument", "DegenerateConstraint", "InvalidFamily",
    "SupportOverlap", "NumericalFailure", "Diverged", "NumericalBlowup", "ConfigError",
]
