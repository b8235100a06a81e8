"""Single-photon transport through a waveguide coupled to a hybrid atom-optomechanical cavity."""
from .model import (
    Branch,
    DressedLevel,
    Geometry,
    SystemParams,
    degenerate_limit_levels,
    dressed_levels,
    polaron_shift,
    rabi_limit_levels,
)
from .overlap import OverlapMatrix, compute_overlaps, oracle_overlaps
from .scattering import (
    AmplitudeSet,
    PoleError,
    ScatteringError,
    SolverConfig,
    TruncationError,
    analytic_reference_g0_zero,
    auto_truncate,
    solve_exact,
    solve_series,
    transmission_reflection,
)

__version__ = "0.1.0"
