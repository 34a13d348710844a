"""Travelling-wave ground states of the nonlinear Maxwell equations in a cylindrical medium.

The profile u = (U, U~) of E = U cos(kz + wt) + U~ sin(kz + wt) solves the
strongly indefinite elliptic system L u - V u = f(x, u) on a periodic
cross-section; see :mod:`nlmaxwell.solver` for the ground-state method.
"""
from .energy import EnergyBreakdown, evaluate_J, gradient_I_kernel, gradient_J, residual_norms
from .fields import FieldSnapshot, energy_bound, maxwell_residuals, reconstruct, total_energy
from .grid import Field6, GridSpec, SpectralField6, dealiased_product, forward_transform, inverse_transform
from .material import Coefficient, MaterialParams, validate_hypotheses
from .operators import (
    apply_curl_circ,
    apply_grad_circ,
    apply_L,
    assemble_symbol,
    b_L,
    divergence_constraints,
    helmholtz_decompose,
    projectors,
    v_norm_squared,
)
from .radial import RadialProblem, embed_radial, radial_solve
from .solver import (
    InnerSolveConfig,
    SolverConfig,
    SolveResult,
    default_initial,
    ground_state_solve,
    inner_minimize,
    manifold_map,
    ray_maximize,
    reduced_functional,
    reduced_gradient,
)

__version__ = "0.1.0"
