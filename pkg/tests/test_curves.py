import math

import numpy as np
import pytest

from helpers import sphere_hyperbolic, torus
from torusiso.curves import (
    CurveState,
    GraphFormBreakdown,
    InsufficientArc,
    classify_curve,
    first_integral,
    half_period,
    integrate_arclength,
    integrate_graph,
)


def test_parallel_stays_put_and_closes():
    s = torus()
    t = 0.3
    tr = integrate_arclength(s, CurveState(0.0, t, math.pi / 2), s.h(t), s.L(t), 1e-12)
    assert np.max(np.abs(tr.t - t)) < 1e-10
    assert tr.theta[-1] == pytest.approx(2 * math.pi, abs=1e-9)
    assert tr.area[-1] == pytest.approx(2 * math.pi * s.F(t), abs=1e-9)
    assert classify_curve(tr).kind == "circle"


def test_vertical_geodesic():
    s = torus()
    tr = integrate_arclength(s, CurveState(1.0, 0.0, 0.0), 0.0, 2 * s.t0, 1e-12)
    assert np.ptp(tr.theta) < 1e-12
    assert tr.t[-1] == pytest.approx(2 * s.t0, abs=1e-9)
    assert classify_curve(tr).kind == "vertical_geodesic"


@pytest.mark.parametrize("h,sigma", [(0.7, 0.3), (-1.2, 1.9), (2.5, 4.0)])
def test_first_integral_conserved(h, sigma):
    s = torus()
    init = CurveState(0.0, 0.2, sigma)
    tr = integrate_arclength(s, init, h, 15.0, 1e-11)
    vals = tr.first_integral_values()
    assert vals[0] == pytest.approx(first_integral(s, init, h), abs=1e-14)
    assert np.ptp(vals) < 1e-9


def test_first_integral_across_segment_joints():
    s = sphere_hyperbolic()
    tr = integrate_arclength(s, CurveState(0.0, 0.0, 0.4), 0.3, 30.0, 1e-11)
    assert tr.events_of("segment-joint")
    assert np.ptp(tr.first_integral_values()) < 1e-9


def test_graph_and_arclength_agree():
    s = torus()
    T, h = 0.65, -0.99
    g = integrate_graph(s, T, h, 2 * math.pi, 1e-12)
    a = integrate_arclength(s, CurveState(0.0, T, math.pi / 2), h, g.s[-1], 1e-12)
    for x in np.linspace(0.0, g.s[-1], 9):
        th, t, *_ = a.at(x)
        assert g.at(th)[1] == pytest.approx(t, abs=1e-8)


def test_classification_by_sign_after_maximum():
    s = torus()
    und = integrate_graph(s, 0.65, -1.0, 4 * math.pi, 1e-11)
    assert classify_curve(und).kind == "unduloid"
    nod = integrate_arclength(s, CurveState(0.0, 0.3, math.pi / 2), 3.16, 3.0, 1e-11)
    assert classify_curve(nod).kind == "nodoid"
    kinds = {e.kind for e in nod.events}
    assert {"t-min", "vertical-tangent"} <= kinds


def test_short_arc_is_not_classified():
    s = torus()
    tr = integrate_arclength(s, CurveState(0.0, 0.3, 0.2), 1.0, 0.05, 1e-11)
    with pytest.raises(InsufficientArc):
        classify_curve(tr)


@pytest.mark.parametrize("t", [0.5, 0.63, 0.7])
def test_linearized_half_period(t):
    # small oscillations about a parallel advance theta by pi / sqrt(D)
    s = torus()
    th, _ = half_period(s, t + 1e-4, s.h(t), 1e-12)
    assert th == pytest.approx(math.pi / math.sqrt(s.D(t)), rel=2e-3)


def test_input_guards():
    s = torus()
    with pytest.raises(ValueError):
        integrate_arclength(s, CurveState(0.0, 0.0, 0.0), 0.0, 1.0, 0.0)
    with pytest.raises(GraphFormBreakdown):
        integrate_graph(s, 0.2, 1.0, 1.0, 1e-10, sigma0=0.0)
