"""Solvers: exact propagation, Lindblad, TCL2/TCL4, NZ2 and the generalized Lindblad equation."""

from .correlation import MarkovTimescales, decay_time, env_correlation, markov_timescales
from .exact import evolve_exact
from .generalized import (ExtendedState, GeneralizedLindbladGenerator, block_diagonal_state,
                          embed_extended, evolve_generalized_lindblad, extract_blocks,
                          offdiagonal_max)
from .grid import SolverAbort, TimeGrid, Trajectory
from .lindblad import LindbladGenerator, amplitude_damping, dynamical_map, evolve_lindblad
from .nz import evolve_nz2
from .tcl import (OddMomentReport, QuadratureError, evolve_tcl, odd_moment_check,
                  tcl2_generator, tcl4_generator)

__all__ = [
    "ExtendedState", "GeneralizedLindbladGenerator", "LindbladGenerator", "MarkovTimescales",
    "OddMomentReport", "QuadratureError", "SolverAbort", "TimeGrid", "Trajectory",
    "amplitude_damping", "block_diagonal_state", "decay_time", "dynamical_map",
    "embed_extended", "env_correlation", "evolve_exact", "evolve_generalized_lindblad",
    "evolve_lindblad", "evolve_nz2", "evolve_tcl", "extract_blocks", "markov_timescales",
    "odd_moment_check", "offdiagonal_max", "tcl2_generator", "tcl4_generator",
]
