import math

import pytest

from helpers import EXAMPLE_B, sphere_hyperbolic, torus, unduloid_branch
from torusiso import closed, stability
from torusiso.stability import CandidateRegion, Parallel, VerticalLine


def cap_annulus_margin(a, b, c, h):
    return (b * b - h * h) ** 1.5 / (4 * math.pi * b * c) - (a * a + h * h) ** 1.5 / (2 * math.pi)


def test_parallels():
    s = torus()
    cp = s.critical_points()
    assert stability.circle_stable(s, 0.0).stable == "no"
    assert stability.circle_stable(s, 0.0).margin == pytest.approx(1 - s.D(0.0))
    assert stability.circle_stable(s, cp.t_tilde).stable == "boundary-case"
    assert stability.circle_stable(s, s.t0).stable == "yes"


def test_symmetric_annulus_window():
    s = torus()
    t_c = s.critical_points().t_c
    assert stability.symmetric_annulus_stable(s, t_c + 0.05).stable == "yes"
    assert stability.symmetric_annulus_stable(s, t_c - 0.05).stable == "no"
    with pytest.raises(ValueError):
        stability.symmetric_annulus_stable(s, 0.0)


def test_partner_parallel_matches_curvature():
    s = torus()
    t2, v = stability.nonsymmetric_annulus_pair(s, -0.7)
    assert t2 == pytest.approx(0.8773279, abs=1e-7)
    assert s.h(t2) == pytest.approx(s.h(0.7), abs=1e-12)
    ref = -sum(s.D(t) / (2 * math.pi * s.f(t) ** 3) for t in (-0.7, t2))
    assert v.stable == "yes"
    assert v.margin == pytest.approx(min(ref, 1 - s.D(0.7), 1 - s.D(t2)), rel=1e-12)


def test_partner_of_longest_parallel():
    s = torus()
    assert stability.partner_parallel(s, 0.0) == pytest.approx(s.t0)
    with pytest.raises(stability.NoPartner):
        stability.partner_parallel(s, 1.0)


def test_cap_plus_hyperbolic_annulus_instance():
    s = sphere_hyperbolic()
    c = s.params["c"]
    v = stability.disk_plus_annulus_stable(1.0, EXAMPLE_B, c, 0.4)
    assert v.stable == "yes"
    assert v.margin == pytest.approx(cap_annulus_margin(1.0, EXAMPLE_B, 0.0410512, 0.4), abs=1e-6)
    assert v.margin == pytest.approx(0.045, abs=0.005)
    with pytest.raises(ValueError):
        stability.disk_plus_annulus_stable(1.0, EXAMPLE_B, c, 0.6)


def test_vertical_annuli():
    assert stability.vertical_annuli_stable([1.0, 0.5], [0.0, 2.0]).stable == "yes"
    with pytest.raises(stability.MalformedRegion):
        stability.vertical_annuli_stable([1.0, 0.5], [0.0, 0.5])
    with pytest.raises(stability.MalformedRegion):
        stability.vertical_annuli_stable([2 * math.pi])


def test_classify_region_and_complement():
    s = torus()
    t2 = stability.partner_parallel(s, -0.7)
    # band through the shortest parallel: above t2 and below -0.7
    rg = CandidateRegion("nonsymmetric_annulus", (Parallel(t2, +1), Parallel(-0.7, -1)))
    v = stability.classify_region(s, rg)
    w = stability.classify_region(s, rg.complemented())
    assert v.stable == w.stable == "yes"
    assert v.margin == pytest.approx(w.margin)


def test_classify_rejects_malformed():
    s = torus()
    three = CandidateRegion("symmetric_annulus",
                            (Parallel(0.9), Parallel(-0.9, 1), Parallel(1.0)))
    assert stability.classify_region(s, three).stable == "no"
    with pytest.raises(stability.MalformedRegion):
        stability.classify_region(s, CandidateRegion("symmetric_annulus",
                                                     (Parallel(0.9, +1), Parallel(-0.5, -1))))
    with pytest.raises(stability.MalformedRegion):
        stability.classify_region(s, CandidateRegion("torus", (VerticalLine(0.0),)))


def test_disk_bounded_by_nodoid_is_stable():
    s = torus()
    c = closed.find_symmetric_nodoid(s, 0.3)
    v = stability.classify_region(s, CandidateRegion("disk", (c,)))
    assert v.stable == "yes"


def test_unduloid_region_below_branch():
    s = torus()
    br = unduloid_branch()
    v = stability.unduloid_region_stable(s, br, br.t_tilde + 0.05)
    assert v.stable == "yes"
