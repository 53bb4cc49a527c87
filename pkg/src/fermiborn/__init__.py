"""Born-rule probability simulation for particle number-conserving
matchgate circuits extended with controlled-phase gates."""

from .circuits import (
    BasisState,
    Circuit,
    ControlledPhase,
    ExtentReport,
    Gate,
    Matchgate,
    epsilon_from_count,
    extent,
    normalize_angle,
    parse_circuit,
    serialize_circuit,
    trajectory_count,
)
from .engine import (
    EstimateResult,
    ModeMatrix,
    SamplerTables,
    Trajectory,
    amplitude,
    batch_estimate,
    estimate,
    exact,
    mode_matrix,
    raw_estimate,
    sample_trajectory,
)
from .errors import (
    CapacityError,
    CircuitFormatError,
    InvalidCircuitError,
    PrecisionUnreachableError,
)
from .estimator import BornProbabilityEstimator
from .lucj import LucjCache, LucjStructure, build_cache, detect_lucj, fast_amplitude
from .reference import oracle_probability, oracle_support
from .rng import trajectory_stream

__version__ = "0.1.0"

__all__ = [
    "BasisState",
    "BornProbabilityEstimator",
    "CapacityError",
    "Circuit",
    "CircuitFormatError",
    "ControlledPhase",
    "EstimateResult",
    "ExtentReport",
    "Gate",
    "InvalidCircuitError",
    "LucjCache",
    "LucjStructure",
    "Matchgate",
    "ModeMatrix",
    "PrecisionUnreachableError",
    "SamplerTables",
    "Trajectory",
    "amplitude",
    "batch_estimate",
    "build_cache",
    "detect_lucj",
    "epsilon_from_count",
    "estimate",
    "exact",
    "extent",
    "fast_amplitude",
    "mode_matrix",
    "normalize_angle",
    "oracle_probability",
    "oracle_support",
    "parse_circuit",
    "raw_estimate",
    "sample_trajectory",
    "serialize_circuit",
    "trajectory_count",
    "trajectory_stream",
]
