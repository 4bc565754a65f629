"""Developable isometric immersions of flat convex domains into one dimension higher.

The package builds immersions ``u = gamma~ + sum s_i v_i`` from a leading
curve and its curvature profile, verifies their structure, smooths nonsmooth
profiles into a sequence ``u_m -> u`` in ``W^{2,2}``, glues arms along affine
interfaces and analyzes sampled maps for flat bodies and rulings.
"""

from .analyzer import (SampledMap, cone_map, detect_rulings, estimate_fields, isometry_residual,
                       normal_field, second_form_field, sharpness_probe)
from .domain import ConvexDomain
from .errors import (ConfigError, DegenerateGeometry, DevelopableError, InconsistentImmersion,
                     InsufficientResolution, InvalidInput, InvalidTopology, MarginViolation,
                     NotCovered, NotGlueable, PreconditionViolation, StageFailure, StepTooCoarse,
                     WindowCollapsed)
from .frames import FramedCurve, integrate_darboux_frame, integrate_domain_frame, skew_exp
from .gluing import AffinePiece, RigidMotion, glue_arms, matching_motion
from .immersion import DevelopableImmersion
from .profile import (Constant, CurvatureProfile, Function, PiecewiseConstant, PiecewiseLinear,
                      psi1, psi2)
from .smoothing import (SmoothingConfig, convergence_report, margin_check, run_pipeline,
                        run_stage)

__version__ = "0.1.0"

__all__ = [
    "AffinePiece", "ConfigError", "Constant", "ConvexDomain", "CurvatureProfile",
    "DegenerateGeometry", "DevelopableError", "DevelopableImmersion", "FramedCurve", "Function",
    "InconsistentImmersion", "InsufficientResolution", "InvalidInput", "InvalidTopology",
    "MarginViolation", "NotCovered", "NotGlueable", "PiecewiseConstant", "PiecewiseLinear",
    "PreconditionViolation", "RigidMotion", "SampledMap", "SmoothingConfig", "StageFailure",
    "StepTooCoarse", "WindowCollapsed", "cone_map", "convergence_report", "detect_rulings",
    "estimate_fields", "glue_arms", "integrate_darboux_frame", "integrate_domain_frame",
    "isometry_residual", "margin_check", "matching_motion", "normal_field", "psi1", "psi2", "run_pipeline",
    "run_stage", "second_form_field", "sharpness_probe", "skew_exp",
]
