"""Numerical construction and verification of flat surfaces in R^4 with
flat normal bundle: quaternionic flat maps, Hopf tori, the representation
formula f = alpha N + beta Nhat + alpha_u N_u + beta_u Nhat_u, and the
perturbed-Hopf flat tori and complete flat cylinders built from it.
"""

from .curve import (ClosureReport, CurvatureProfile, QuasiPeriodicProfile,
                    S2Curve, S3Curve, asymptotic_lift, detect_closure,
                    frenet_s3, helix, helix_curvature, integrate_s2_curve)
from .errors import (ClosureFailure, DegenerateMetric, EqualSpeeds,
                     FlatSurfaceError, GridMismatch, IntegrationFailure,
                     NoClosure, NoLambdaFound, NonConstantAngle, NoSignChange,
                     NotOnSphere, PathDependence, PoleOnSurface,
                     PreconditionViolated, SingularAfterRescale)
from .flatmap import (AngleFunction, FlatMapGrid, bianchi_spivak_product,
                      clifford_flat_map, constant_angle, helix_product_map,
                      hopf_flat_map, linear_angle, normal_shape_check,
                      polar_dual, profile_angle, read_flatmap_csv,
                      sampled_angle, verify_flat_map, write_flatmap_csv)
from .hypsys import (GridSpec, SmoothFn, SolutionGrid, constant_solution,
                     exponential_solution, geometric_solution,
                     helical_angle_solution, quadrature_transform,
                     solve_numeric, stretched_solution, system_residual,
                     wave_solution, zero_solution)
from .immersion import (ImmersionGrid, SphereFit, assemble, auto_lambda,
                        brioschi_curvature, derived_solution, flatness_check,
                        lambda_rescale, metric_identity_check, sphere_fit,
                        tangency_check, verify_frame, write_immersion_csv)
from .quat import (QI, QJ, QK, QONE, ad, fiber_circle, hopf, qconj, qexp_pure,
                   qinv, qmul, qnorm, qnormalize, quat, s2_point,
                   unit_quaternion)
from .torusearch import (HolonomyResult, SearchOutcome, a_n,
                         build_perturbed_cylinder, build_perturbed_torus,
                         holonomy, holonomy_closure_residual,
                         lift_closure_multiple, rationalize, search_rational,
                         single_harmonic_family, stretch_profile)

__version__ = "0.1.0"
