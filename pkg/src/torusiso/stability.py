"""Stability criteria for regions bounded by constant-curvature curves.

Boundary curvatures are always compared w.r.t. the region's inner normal.
A parallel ``S^1 x {t}`` has curvature ``h(t) = f'/f`` w.r.t. ``-d/dt``; it
flips sign when the region lies above it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from . import jacobi
from .closed import (
    ClosedCurve,
    UnduloidBranch,
    _sample_closed_unduloid,
    closed_unduloid,
    parallel_curve,
)
from .surface import SurfaceProfile

BOUNDARY_TOL = 1e-9
CURVATURE_TOL = 1e-8

KINDS = (
    "disk",
    "symmetric_annulus",
    "nonsymmetric_annulus",
    "vertical_annuli",
    "unduloid_circle_annulus",
    "disk_plus_symmetric_annulus",
)


class MalformedRegion(ValueError):
    pass


class NoPartner(ValueError):
    pass


@dataclass(frozen=True)
class StabilityVerdict:
    stable: str  # yes | no | boundary-case | inapplicable
    criterion: str
    margin: float

    @property
    def ok(self) -> bool:
        """Stable in the non-strict sense (boundary cases count)."""
        return self.stable in ("yes", "boundary-case")


def verdict(margin: float, criterion: str) -> StabilityVerdict:
    if abs(margin) <= BOUNDARY_TOL:
        return StabilityVerdict("boundary-case", criterion, float(margin))
    return StabilityVerdict("yes" if margin > 0 else "no", criterion, float(margin))


def _combine(parts, criterion):
    """All parts must hold; the reported margin is the tightest one."""
    worst = min(parts, key=lambda v: (v.ok, v.margin if math.isfinite(v.margin) else math.inf))
    if not worst.ok:
        return StabilityVerdict("no", worst.criterion, worst.margin)
    return StabilityVerdict(worst.stable, criterion, worst.margin)


# -- boundary components ---------------------------------------------------------

@dataclass(frozen=True)
class Parallel:
    """``S^1 x {t}``; ``inner = +1`` when the region lies on the ``+d/dt`` side."""

    t: float
    inner: int = -1

    def curvature(self, s: SurfaceProfile) -> float:
        return -s.h(self.t) if self.inner > 0 else s.h(self.t)

    def length(self, s: SurfaceProfile) -> float:
        return s.L(self.t)


@dataclass(frozen=True)
class VerticalLine:
    theta: float

    def curvature(self, s: SurfaceProfile) -> float:
        return 0.0

    def length(self, s: SurfaceProfile) -> float:
        return 2 * s.t0


def _curvature(s, b) -> float:
    return b.h if isinstance(b, ClosedCurve) else b.curvature(s)


@dataclass
class CandidateRegion:
    kind: str
    boundary: tuple
    h: Optional[float] = None
    area: Optional[float] = None
    perimeter: Optional[float] = None
    complement: bool = False
    params: dict = field(default_factory=dict)

    def complemented(self) -> "CandidateRegion":
        flip = tuple(Parallel(b.t, -b.inner) if isinstance(b, Parallel) else b
                     for b in self.boundary)
        return CandidateRegion(self.kind, flip, None if self.h is None else -self.h, None,
                               self.perimeter, not self.complement, dict(self.params))


# -- individual criteria ---------------------------------------------------------

def circle_stable(s: SurfaceProfile, t: float) -> StabilityVerdict:
    """A parallel bounds a stable region iff ``D(t) <= 1``."""
    return verdict(1.0 - s.D(t), "parallel: D <= 1")


def symmetric_annulus_stable(s: SurfaceProfile, t: float) -> StabilityVerdict:
    """Band around the shortest parallel bounded by ``S^1 x {+-t}``: stable iff ``D(t) <= 0``."""
    if not 0 < abs(t) < s.t0:
        raise ValueError("need 0 < |t| < t0")
    return verdict(-s.D(t), "symmetric annulus: D <= 0")


def _nosim_sum(s, t1, t2):
    g = lambda t: s.D(t) / (2 * math.pi * s.f(t) ** 3)
    return g(t1) + g(t2)


def annulus_stable(s: SurfaceProfile, t1: float, t2: float) -> StabilityVerdict:
    """Two parallels bounding a band: both circles stable and
    ``(K + h^2)/L (t1) + (K + h^2)/L (t2) <= 0``."""
    parts = [circle_stable(s, t1), circle_stable(s, t2),
             verdict(-_nosim_sum(s, t1, t2), "annulus: sum of (K+h^2)/L <= 0")]
    return _combine(parts, "annulus: sum of (K+h^2)/L <= 0")


def partner_parallel(s: SurfaceProfile, t_prime: float) -> float:
    """Signed ``t''`` on the far side of the shortest parallel with ``h(t') + h(t'') = 0``."""
    p = abs(t_prime)
    cp = s.critical_points()
    if cp.t_c is None or not 0 <= p < cp.t_c:
        raise NoPartner(f"|t'|={p:.12g} outside [0, t_c); no partner parallel")
    if p == 0:
        # h vanishes on the longest and the shortest parallel
        return s.t0
    target = s.h(p)
    q = optimize.brentq(lambda x: s.h(x) - target, cp.t_c, s.t0, xtol=1e-15,
                        rtol=4 * np.finfo(float).eps)
    return -math.copysign(q, t_prime)


def nonsymmetric_annulus_pair(s: SurfaceProfile, t_prime: float):
    """Partner abscissa and verdict for the band through the shortest parallel."""
    t2 = partner_parallel(s, t_prime)
    return t2, annulus_stable(s, t_prime, t2)


def vertical_annuli_stable(widths, starts=None) -> StabilityVerdict:
    """Disjoint vertical annuli are always stable."""
    w = np.asarray(widths, float)
    if w.size == 0 or np.any(w <= 0):
        raise MalformedRegion("annulus widths must be positive")
    if w.sum() >= 2 * math.pi - 1e-12:
        raise MalformedRegion("annuli cover the whole torus; not a proper region")
    if starts is not None:
        a = np.mod(np.asarray(starts, float), 2 * math.pi)
        order = np.argsort(a)
        a, ww = a[order], w[order]
        gaps = np.diff(np.append(a, a[0] + 2 * math.pi)) - ww
        if np.any(gaps <= 0):
            raise MalformedRegion("vertical annuli overlap")
    return StabilityVerdict("yes", "vertical annuli: calibration", math.inf)


def disk_plus_annulus_stable(a: float, b: float, c: float, h: float) -> StabilityVerdict:
    """Spherical cap plus symmetric hyperbolic annulus with common curvature ``h``."""
    if not 0 <= h < b:
        raise ValueError(f"need 0 <= h < b, got h={h}, b={b}")
    expr = (a**2 + h**2) ** 1.5 / (2 * math.pi) - (b**2 - h**2) ** 1.5 / (4 * math.pi * b * c)
    return verdict(-expr, "cap + hyperbolic annulus inequality")


def straddles_level(s: SurfaceProfile, c: ClosedCurve, n: int = 512) -> bool:
    """Whether ``D`` takes values on both sides of 1 along the curve."""
    tr = c.trajectory
    D = np.array([s.D(float(tr.at(x)[1])) for x in np.linspace(0, c.length, n)])
    return bool(D.max() > 1 and D.min() < 1)


def unduloid_region_stable(s: SurfaceProfile, branch: UnduloidBranch, T: float,
                           step: float = 1e-3, grid: int = 1024) -> StabilityVerdict:
    """Sign test ``dh_o/dT * da/dT < 0`` for the region below a closed unduloid
    with maximum height ``T``; needs ``lambda_1 < 0 <= lambda_2``."""
    h = branch.h_at(T)
    c = closed_unduloid(s, T, h)
    sp = jacobi.spectrum(jacobi.potential_along(s, c), "periodic", 3, grid)
    if not (sp[0] < 0 and sp[1] >= -1e-6):
        return StabilityVerdict("inapplicable", "eigenvalue hypothesis violated", float("nan"))
    hp, hm = branch.h_at(T + step), branch.h_at(T - step)
    ap = _sample_closed_unduloid(s, T + step, hp).area
    am = _sample_closed_unduloid(s, T - step, hm).area
    product = (hp - hm) / (2 * step) * (ap - am) / (2 * step)
    return verdict(-product, "unduloid: dh/dT * da/dT < 0")


def constrained_union_stable(s: SurfaceProfile, curves, grid: int = 256) -> StabilityVerdict:
    """Direct test: the index form is nonnegative on mean-zero functions."""
    profiles = [jacobi.potential_along(s, c) for c in curves]
    mu = jacobi.constrained_min_eigenvalue(profiles, grid)
    return verdict(mu, "constrained index form")


def constant_mode_sum(s: SurfaceProfile, c: ClosedCurve, t_circle: float, n: int = 1024) -> float:
    """``int_c q / L_c^2 + q(t)/L(t)``; must be ``<= 0`` for the union to be stable."""
    tr = c.trajectory
    xs = np.linspace(0, c.length, n + 1)
    q = np.array([s.K(float(tr.at(x)[1])) for x in xs]) + c.h**2
    integral = float(np.trapezoid(q, xs))
    return integral / c.length**2 + s.D(t_circle) / (2 * math.pi * s.f(t_circle) ** 3)


# -- dispatch ----------------------------------------------------------------------

def _check_curvatures(s, rg):
    ks = [_curvature(s, b) for b in rg.boundary]
    if not ks:
        raise MalformedRegion("region without boundary")
    if max(ks) - min(ks) > CURVATURE_TOL * max(1.0, max(abs(k) for k in ks)):
        raise MalformedRegion(f"boundary curvatures differ: {ks}")
    if rg.h is not None and abs(rg.h - ks[0]) > CURVATURE_TOL * max(1.0, abs(ks[0])):
        raise MalformedRegion(f"declared h={rg.h} does not match boundary {ks[0]}")
    return ks[0]


def classify_region(s: SurfaceProfile, rg: CandidateRegion) -> StabilityVerdict:
    """Decide stability of ``rg``; a region and its complement get the same verdict."""
    if rg.kind not in KINDS:
        raise MalformedRegion(f"unknown region kind {rg.kind!r}")
    parallels = [b for b in rg.boundary if isinstance(b, Parallel)]
    curves = [b for b in rg.boundary if isinstance(b, ClosedCurve)]
    verticals = [b for b in rg.boundary if isinstance(b, VerticalLine)]
    if len(parallels) >= 3:
        return StabilityVerdict("no", "at most two parallels", -math.inf)
    h = _check_curvatures(s, rg)

    if rg.kind == "vertical_annuli":
        if len(verticals) % 2 or parallels or curves:
            raise MalformedRegion("vertical annuli are bounded by pairs of vertical lines")
        th = sorted(float(np.mod(v.theta, 2 * math.pi)) for v in verticals)
        widths = rg.params.get("widths") or [th[i + 1] - th[i] for i in range(0, len(th), 2)]
        starts = rg.params.get("starts") or th[0::2]
        return vertical_annuli_stable(widths, starts)

    if rg.kind in ("symmetric_annulus", "nonsymmetric_annulus"):
        if len(parallels) != 2 or curves or verticals:
            raise MalformedRegion("an annulus is bounded by two parallels")
        t1, t2 = parallels[0].t, parallels[1].t
        if rg.kind == "symmetric_annulus" and abs(abs(t1) - abs(t2)) < 1e-12:
            return symmetric_annulus_stable(s, abs(t1))
        return annulus_stable(s, t1, t2)

    if rg.kind == "disk":
        if len(curves) != 1 or parallels or verticals:
            raise MalformedRegion("a disk is bounded by one closed curve")
        return constrained_union_stable(s, curves)

    if rg.kind == "unduloid_circle_annulus":
        if len(curves) != 1 or len(parallels) != 1 or curves[0].kind != "unduloid":
            raise MalformedRegion("expected one unduloid and one parallel")
        c, tp = curves[0], parallels[0].t
        parts = [verdict(-s.D(tp), "circle inside D < 0")]
        if not straddles_level(s, c):
            parts.append(StabilityVerdict("no", "unduloid straddles D = 1", -math.inf))
        parts.append(verdict(-constant_mode_sum(s, c, tp), "constant test function"))
        branch = rg.params.get("branch")
        if branch is not None:
            parts.append(unduloid_region_stable(s, branch, c.t_max))
        pre = _combine(parts, "necessary conditions")
        if not pre.ok:
            return pre
        return _combine([pre, constrained_union_stable(s, [c, parallel_curve(s, tp)])],
                        "constrained index form")

    # disk_plus_symmetric_annulus
    if len(curves) != 1 or len(parallels) != 2:
        raise MalformedRegion("expected one disk boundary and two parallels")
    ta = abs(parallels[0].t)
    parts = [symmetric_annulus_stable(s, ta)]
    if s.params.get("family") == "sphere_hyperbolic":
        p = s.params
        parts.append(disk_plus_annulus_stable(p["a"], p["b"], p["c"], abs(h)))
        return _combine(parts, "cap + hyperbolic annulus inequality")
    parts.append(constrained_union_stable(s, [curves[0], parallel_curve(s, ta),
                                              parallel_curve(s, -ta)]))
    return _combine(parts, "constrained index form")
