"""Two-level atom coupled to a cavity mode through a sign-alternating coupling."""

from .core import (
    DegenerateParametersError,
    InternalConsistencyError,
    InvalidParameterError,
    PhysicalParams,
    PolarParams,
    ReducedParams,
    State2,
    reduce,
    to_polar,
)
from .transfer import emission_closed, emission_direct, table_polynomial

__version__ = "0.1.0"
