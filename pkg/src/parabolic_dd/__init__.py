"""Finite-element solver and stability lab for overlapping
domain-decomposition time stepping on second-order parabolic problems."""

from .assembly import (AssemblyError, Coefficients, assemble_load,
                       assemble_mass, assemble_stiffness, l2_norm, lump_mass,
                       lumped_mass_interior)
from .decomposition import (DecompositionReport, StripDecomposition,
                            WeightField, chi_fields, decomposition_report,
                            eta_fields, unit_weights)
from .linalg import (SolverError, csr_from_triplets, dense_multiply,
                     dense_solve, dense_spectral_norm, matvec, solve_spd,
                     to_dense)
from .mesh import (InteriorMap, Mesh, build_unit_square_mesh, dump_mesh,
                   interior_index_map)
from .schemes import (SchemeConfig, SchemeState, StepError, Trajectory,
                      build_operators, factorized_pu_step, indicator_dd_step,
                      run, theta_step)
from .stability import (StabilityReport, build_q_operator, certify_estimate,
                        coercivity_delta_h, transition_factorized,
                        transition_indicator, transition_theta,
                        weighted_operator_norm)

__version__ = "0.1.0"
