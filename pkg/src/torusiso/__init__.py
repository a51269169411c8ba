"""Constant-curvature curves, stability and isoperimetric profiles on tori of revolution."""

from .surface import (
    SphereHyperbolicParams,
    StandardTorusParams,
    SurfaceProfile,
    build_custom,
    build_sphere_hyperbolic,
    build_standard_torus,
    critical_points,
    metric_eval,
    total_area,
)

__all__ = [
    "SphereHyperbolicParams",
    "StandardTorusParams",
    "SurfaceProfile",
    "build_custom",
    "build_sphere_hyperbolic",
    "build_standard_torus",
    "critical_points",
    "metric_eval",
    "total_area",
]
