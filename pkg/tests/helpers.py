"""Shared, cached surfaces and profiles for the test suite."""

import functools
import math
import time

from torusiso import (
    SphereHyperbolicParams,
    StandardTorusParams,
    build_sphere_hyperbolic,
    build_standard_torus,
)
from torusiso import closed, isoperimetric

EXAMPLE_B = 0.578
EXAMPLE_T_STAR = math.pi / 6


@functools.lru_cache(maxsize=None)
def torus(a=1.0, r=0.4):
    return build_standard_torus(StandardTorusParams(a, r))


@functools.lru_cache(maxsize=None)
def sphere_hyperbolic(a=1.0, t_star=EXAMPLE_T_STAR, b=EXAMPLE_B):
    return build_sphere_hyperbolic(SphereHyperbolicParams(a, t_star, b))


@functools.lru_cache(maxsize=None)
def torus_profile(r, n_areas=200):
    """``(profile, seconds)`` for the standard torus ``(1, r)``."""
    s = torus(1.0, r)
    t0 = time.perf_counter()
    prof = isoperimetric.profile(s, n_areas)
    return prof, time.perf_counter() - t0


@functools.lru_cache(maxsize=None)
def example_profile(n_areas=200):
    s = sphere_hyperbolic()
    return isoperimetric.profile(s, n_areas)


@functools.lru_cache(maxsize=None)
def unduloid_branch(r=0.4, lo=-0.08, hi=0.12):
    s = torus(1.0, r)
    tt = s.critical_points().t_tilde
    return closed.trace_unduloid_branch(s, (tt + lo, tt + hi))
