"""Chern-connection geometry of Hermitian manifolds and numerical checks of
Bochner-type integral identities on balanced manifolds."""

from .expr import (ExprDomainError, ExprSyntaxError, FiniteDifference, UnboundParameterError,
                   eval_expr, parse_expr, to_text, wirtinger_diff)
from .fields import (FieldData, FieldSpec, analytic_residual, coframe_form, covariant_deriv,
                     frame_field, harmonic_residual, killing_residual, lie_connection_residual,
                     one_form, random_trig_field, vector_field)
from .geometry import (Geometry, christoffel, curvature, frame_at, is_balanced, lee_form,
                       tensor_H, torsion_quadratic)
from .identities import (CASES, Tolerances, Verifier, definiteness_scan, laplacians,
                         theorem_report, verify)
from .manifold import (ManifoldConfigError, ManifoldModel, MetricError, build_manifold,
                       conformal_torus, flat_torus, integrate, iwasawa, metric_at,
                       quadrature_grid)

__version__ = "0.1.0"

__all__ = [
    "ExprDomainError", "ExprSyntaxError", "FiniteDifference", "UnboundParameterError",
    "eval_expr", "parse_expr", "to_text", "wirtinger_diff",
    "FieldData", "FieldSpec", "analytic_residual", "coframe_form", "covariant_deriv",
    "frame_field", "harmonic_residual", "killing_residual", "lie_connection_residual",
    "one_form", "random_trig_field", "vector_field",
    "Geometry", "christoffel", "curvature", "frame_at", "is_balanced", "lee_form", "tensor_H",
    "torsion_quadratic",
    "CASES", "Tolerances", "Verifier", "definiteness_scan", "laplacians", "theorem_report",
    "verify",
    "ManifoldConfigError", "ManifoldModel", "MetricError", "build_manifold", "conformal_torus",
    "flat_torus", "integrate", "iwasawa", "metric_at", "quadrature_grid",
]
