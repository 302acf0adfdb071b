"""Random-walk simulation of diffusant penetration with a moving front.

The package couples a lattice random walk for the diffusion field with an
explicit-Euler update of a kinetically driven penetration front, and ships an
independent deterministic solver on a front-fixed coordinate for
cross-validation.
"""

__version__ = "0.1.0"

from .model import (
    DimensionlessProblem,
    ForcingSpec,
    PhysicalParameters,
    ProfileSpec,
    SigmaSpec,
    nondimensionalize,
    redimensionalize,
)
from .rng import RandomStream, member_stream
from .solver import (
    FrontState,
    Lattice,
    LeftBoundarySpec,
    RwmNumerics,
    WalkerField,
    build_lattice,
    front_index,
    init_walkers,
    run,
    run_ensemble,
    step,
    validate_timestep,
)
from .reference import ReferenceMesh, solve_reference, transform_problem
from .observables import compare, ensemble_stats, profile_at, total_mass
from .trace import SolutionTrace

__all__ = [
    "DimensionlessProblem",
    "ForcingSpec",
    "FrontState",
    "Lattice",
    "LeftBoundarySpec",
    "PhysicalParameters",
    "ProfileSpec",
    "RandomStream",
    "ReferenceMesh",
    "RwmNumerics",
    "SigmaSpec",
    "SolutionTrace",
    "WalkerField",
    "build_lattice",
    "compare",
    "ensemble_stats",
    "front_index",
    "init_walkers",
    "member_stream",
    "nondimensionalize",
    "profile_at",
    "redimensionalize",
    "run",
    "run_ensemble",
    "solve_reference",
    "step",
    "total_mass",
    "transform_problem",
    "validate_timestep",
]
