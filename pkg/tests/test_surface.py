import math

import numpy as np
import pytest
from scipy import integrate

from helpers import EXAMPLE_B, sphere_hyperbolic, torus
from torusiso import (
    SphereHyperbolicParams,
    StandardTorusParams,
    build_custom,
    build_sphere_hyperbolic,
    build_standard_torus,
)
from torusiso.surface import SurfaceError


@pytest.mark.parametrize("r", [0.3, 0.4, 0.5, 0.77, 0.9])
def test_standard_torus_closed_forms(r):
    s = torus(1.0, r)
    cp = s.critical_points()
    assert s.t0 == pytest.approx(math.pi * r, abs=1e-15)
    assert cp.t_tilde == pytest.approx(math.pi * r / 2, abs=1e-10)
    assert cp.t_c == pytest.approx(r * math.acos(-r), abs=1e-9)
    assert s.total_area() == pytest.approx(4 * math.pi**2 * r, rel=1e-10)


def test_pointwise_quantities_match_formulas():
    a, r = 1.0, 0.4
    s = torus(a, r)
    for t in np.linspace(-s.t0, s.t0, 17):
        c, sn = math.cos(t / r), math.sin(t / r)
        f = a + r * c
        assert s.f(t) == pytest.approx(f, abs=1e-14)
        assert s.K(t) == pytest.approx(c / (r * f), abs=1e-12)
        assert s.h(t) == pytest.approx(-sn / f, abs=1e-12)
        assert s.D(t) == pytest.approx(sn**2 + c * f / r, abs=1e-12)
        assert s.L(t) == pytest.approx(2 * math.pi * f, abs=1e-12)


def test_lifted_primitive_is_quasi_periodic():
    s = torus()
    half = s.total_area() / (2 * math.pi)
    for t in (-0.3, 0.1, 0.9):
        assert s.F(t + 2 * s.t0) - s.F(t) == pytest.approx(half, rel=1e-12)
        ref, _ = integrate.quad(s.f, 0.0, t, epsabs=1e-14)
        assert s.F(t) == pytest.approx(ref, abs=1e-12)


def test_curvature_derivatives_closed_form_vs_differences():
    s = torus()
    for t in (0.2, 0.5, 0.9):
        exact = s.K_derivatives(t)
        fd = s.K_derivatives(t, closed_form=False)
        assert fd[1] == pytest.approx(exact[1], rel=1e-7)
        assert fd[2] == pytest.approx(exact[2], rel=1e-5)


def test_example_surface_constants():
    s = sphere_hyperbolic()
    p = s.params
    assert p["c"] == pytest.approx(0.0410512, abs=1e-6)
    assert s.f(p["t_star"]) == pytest.approx(math.cos(math.pi / 6), abs=1e-12)
    cp = s.critical_points()
    # the sphere piece has D = 1 identically; t_c sits at the joint
    assert s.D(0.2) == pytest.approx(1.0, abs=1e-12)
    assert cp.t_c == pytest.approx(p["t_star"], abs=1e-12)
    assert s.K(0.1) == pytest.approx(1.0, abs=1e-12)
    assert s.K(1.0) == pytest.approx(-EXAMPLE_B**2, abs=1e-12)


def test_joint_is_c1():
    s = sphere_hyperbolic()
    ts = s.params["t_star"]
    for g in (s.f, s.fp):
        assert g(ts - 1e-13) == pytest.approx(g(ts + 1e-13), abs=1e-10)


@pytest.mark.parametrize("bad", [(1.0, 1.0), (1.0, 1.5), (1.0, -0.1)])
def test_rejects_invalid_standard_parameters(bad):
    with pytest.raises(SurfaceError):
        build_standard_torus(StandardTorusParams(*bad))


def test_rejects_invalid_example_parameters():
    with pytest.raises(SurfaceError):
        build_sphere_hyperbolic(SphereHyperbolicParams(1.0, 2.0, 0.578))


def test_custom_profile_matches_standard():
    r = 0.4
    half = math.pi * r
    s = build_custom([(0.0, half, f"1 + {r}*cos(t/{r})")])
    ref = torus(1.0, r)
    for t in (-1.0, -0.2, 0.0, 0.7):
        assert s.f(t) == pytest.approx(ref.f(t), abs=1e-13)
        assert s.K(t) == pytest.approx(ref.K(t), abs=1e-10)
    assert s.total_area() == pytest.approx(ref.total_area(), rel=1e-10)


def test_custom_rejects_increasing_warp():
    with pytest.raises(SurfaceError):
        build_custom([(0.0, 1.0, "2 - cos(pi*t)")])


def test_metric_eval_outside_domain():
    s = torus()
    with pytest.raises(SurfaceError):
        s.metric_eval(2 * s.t0)
    m = s.metric_eval(0.3)
    assert m.L == pytest.approx(s.L(0.3))
