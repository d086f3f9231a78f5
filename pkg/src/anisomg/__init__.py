"""Spectral multiscale coarse spaces and two-grid preconditioning for
extremely anisotropic heat flow on the unit square.

Typical use: build conforming grids, assemble the anisotropic operators,
solve the local spectral problems into a prolongation, then either step
the reduced-order model or precondition fine-grid PCG with the two-grid
cycle.  See the README for the CLI entry points.
"""

from .analysis import (GlobalInterpolation, NormContext, check_global_estimates,
                       check_local_estimates, check_transient_estimate,
                       lambda_next_min, local_projection, measure_ktg,
                       relative_l2_error)
from .field import AnisotropySweep, FieldSpec, builtin_fields, eval_b
from .fem import (TransientProblem, apply_dirichlet, assemble_mass,
                  assemble_source, assemble_stiffness, backward_euler_step,
                  heat_problem, transient_solve)
from .mesh import build_grids, partition_of_unity, subdomains
from .msbasis import (MultiscaleBasis, Prolongation, assemble_prolongation,
                      build_multiscale_basis, galerkin_project, local_operator,
                      solve_local_eig)
from .solver import (CoarseFactor, Smoother, SolveReport, TwoGridPreconditioner,
                     coarse_direct_solve, multiscale_transient_solve, pcg,
                     smooth, transient_pcg_solve)

__version__ = "0.1.0"
