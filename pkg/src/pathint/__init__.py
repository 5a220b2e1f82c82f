"""Pathwise integrals of rough integrands against Hölder paths via fractional calculus."""

from __future__ import annotations

from .convexbv import BVFunction, Mollifier, RadonMeasure, mollify, truncate_to_compact
from .errors import (AssumptionViolated, ConfigError, GenerationError, NumericError, PathintError,
                     RegimeError, SizeError, ValidationError)
from .fracops import (FracOrder, Reconstruction, besov_norm_w1, besov_norm_w2, frac_deriv_left,
                      frac_deriv_right, frac_integral_left, grr_check)
from .glsint import (GlsConfig, IntegralResult, gls_integral, integration_by_parts_residual,
                     mixed_integral, multidim_rs_sum, rs_sum)
from .paths import ProcessSpec, SampledPath, generate, generate_components, holder_estimate
from .variation import TaggedPartition, VariationReport, p_variation, quadratic_variation, sup_p_variation

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolated", "BVFunction", "ConfigError", "FracOrder", "GenerationError", "GlsConfig",
    "IntegralResult", "Mollifier", "NumericError", "PathintError", "ProcessSpec", "RadonMeasure",
    "Reconstruction", "RegimeError", "SampledPath", "SizeError", "TaggedPartition", "ValidationError",
    "VariationReport", "besov_norm_w1", "besov_norm_w2", "frac_deriv_left", "frac_deriv_right",
    "frac_integral_left", "generate", "generate_components", "gls_integral", "grr_check",
    "holder_estimate", "integration_by_parts_residual", "mixed_integral", "mollify",
    "multidim_rs_sum", "p_variation", "quadratic_variation", "rs_sum", "sup_p_variation",
    "truncate_to_compact",
]
