"""Reduced dynamics of multi-level systems coupled to non-vacuum reservoirs
in the rotating wave approximation: exact resolvent solution, weak-coupling
semigroup limit and a discrete-bath reference."""
from ._backend import name as backend
from .bvh import (
    BvhGenerator,
    build_generator,
    evolve_asymptotic,
    resolvent_asymptotic_error,
    semigroup_excited_block,
    stationary_excited_block,
)
from .kernels import correlation_kernel, memory_kernel, nonvacuum_density
from .model import (
    BlockDensityMatrix,
    FlatWindow,
    GaussianOccupation,
    InitialState,
    Lorentzian,
    SystemHamiltonian,
    Tabulated,
)
from .oracle import discretize_bath, evolve_oracle
from .reduced import evolve_exact, excitation_inflow, trace_distance
from .volterra import ResolventTrajectory, solve_amplitude, solve_resolvent

__version__ = "0.1.0"

__all__ = [
    "backend",
    "BvhGenerator",
    "build_generator",
    "evolve_asymptotic",
    "resolvent_asymptotic_error",
    "semigroup_excited_block",
    "stationary_excited_block",
    "correlation_kernel",
    "memory_kernel",
    "nonvacuum_density",
    "BlockDensityMatrix",
    "FlatWindow",
    "GaussianOccupation",
    "InitialState",
    "Lorentzian",
    "SystemHamiltonian",
    "Tabulated",
    "discretize_bath",
    "evolve_oracle",
    "evolve_exact",
    "excitation_inflow",
    "trace_distance",
    "ResolventTrajectory",
    "solve_amplitude",
    "solve_resolvent",
]
