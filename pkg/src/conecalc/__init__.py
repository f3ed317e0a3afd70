"""conecalc: Fuchs-type cone operators made computable.

Symbol and closed-extension analysis for operators diagonal over a
cross-section eigenbasis, weighted Sobolev norms and Mellin data on
log-radial grids, exponent bookkeeping for quasilinear well-posedness,
and implicit solvers for linear and quasilinear parabolic flows on the
truncated 2-D cone.
"""

from .admissibility import (AdmissibilityQuery, AdmissibilityReport,
                            alpha_star, embed_tip, interpolation_params,
                            lipschitz_alpha_bound, mr_condition,
                            quasilinear_witness, unique_closure_pq)
from .extensions import (ConormalPole, ExtensionReport, LaurentData,
                         MinDomainDescriptor, SingularTerm,
                         bounded_tip_basis_cone2d, elliptic_wrt_weight,
                         extension_basis, laurent_coefficients,
                         min_domain_description, nonbijectivity_points,
                         singular_space_dim, unique_closure)
from .fuchs import (CrossSectionSpectrum, EigenvalueFamily, FuchsOperator,
                    SectorReport, WarpedMetricSpec, build_laplacian,
                    conormal_invertible_on_line, conormal_symbol_value,
                    rescaled_symbol_value, sector_clear)
from .presets import (circle_spectrum, cone2d_laplacian, cone2d_metric,
                      cone_sphere_laplacian, cone_sphere_metric,
                      sphere_spectrum)
from .solver import (Diffusion, ModeOperator, MRReport, NonlinearityTerm,
                     ResolventReport, SolverConfig, TipAsymptotics, Trajectory,
                     discretize_mode, discretize_operator,
                     extract_tip_asymptotics, ginzburg_landau_terms,
                     mr_functional, resolvent_scan, solve_linear,
                     solve_quasilinear)
from .spaces import (AsymptoticCoefficients, GridFunction, LogRadialGrid,
                     asymptotic_coefficients, gamma_p, mellin_derivative,
                     mellin_transform, reference_cutoff, s_gamma_transform,
                     sobolev_embedding_cb, weighted_norm)

__version__ = "0.1.0"
