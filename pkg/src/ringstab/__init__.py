"""Symmetry-adapted stability analysis of rotating ring systems.

Point-mass relative equilibria (homogeneous potentials) and point-vortex
relative equilibria built from concentric regular and semiregular polygons
share a dihedral symmetry; this package block-diagonalizes their
linearizations along the isotypic decomposition of displacement space and
factors the characteristic polynomial accordingly.
"""

from .dihedral import (ALPHA, PHI, PSI, TAU, DihedralElement, IrrepLabel,
                       full_group, identity, irrep_list, irrep_matrix,
                       is_standard, planar_action, reflection, rho, rotation,
                       standard_rep)
from .config import ConfigError, JobConfig, parse_config, parse_config_text
from .dynamics import (Potential, ReleqSolution, StabilityOperator, apply_j,
                       equivariance_residual, gradient, hessian, hessian_fd,
                       hessian_fd_residual, homogeneous, j_matrix, newtonian,
                       potential_value, releq_residual, solve_releq,
                       stability_operator, translation_kernel_residual, vortex)
from .geometry import RingSpec, RingSystem, build, center, regular, ring_positions, semiregular
from .stability import (BlockReport, FactorizationReport, PolyFactor,
                        classical_checks, dense_oracle, expected_degree_profile,
                        factorize, transform)
from .svg import emit_svg, render_svg
from .symbasis import (IsotypicComponent, ResidualReport, SymBasis,
                       assemble_global_basis, averaging_operator, gram_residual,
                       isotypic_decomposition, j_relations_check, m_inner,
                       multiplicities, omega_form, orbit_basis, projector,
                       projector_algebra_check, symplectic_residuals, transfer,
                       translation_field)

__version__ = "0.1.0"
