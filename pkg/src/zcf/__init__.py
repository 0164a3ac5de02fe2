"""Zero-curvature pencils, fundamental solutions, mKdV Weyl functions, GBDT."""
from . import errors
from .gbdt import (GBDTField, SNode, build_field, darboux_inverse, darboux_matrix,
                   darboux_weyl_function, flow_t, flow_x, kronecker_compat_check, mkdv_soliton,
                   skew_reduction_node, transformed_coeffs, transformed_pencil,
                   transformed_pencils, verify_darboux_ode, verify_transformed_zero_curvature)
from .inverse import (build_Sl, fourier_s, recover_omega1, recover_omega2, recover_potential,
                      recover_v)
from .mkdv import (MkdvPotential, PropertyJPair, WeylFunction, build_mkdv_pair,
                   check_R_conjugate_inverse, check_R_j_contractive, check_W_j_expansive,
                   mkdv_residual, weyl_direct, weyl_evolve, zero_potential)
from .pencil import Domain2D, SpectralPencil, zero_curvature_residual
from .propagator import (factorization_residual, integrate_t, integrate_x,
                         mixed_derivative_residual, wave_function)

__version__ = "0.1.0"
