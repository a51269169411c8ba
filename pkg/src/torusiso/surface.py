"""Warped-product tori ``ds^2 = dt^2 + f(t)^2 dtheta^2`` on S^1 x [-t0, t0].

A surface is described by a piecewise closed-form warp function ``f``.  The
two boundary parallels ``t = -t0`` and ``t = t0`` are identified, so every
evaluator here accepts any real ``t`` and reduces it periodically.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import chebyshev
from scipy import integrate, optimize

Scalar = Callable[[float], float]

# standing-hypothesis checks
_VALIDATION_GRID = 4096
_VALIDATION_TOL = 1e-8
# root isolation
_SCAN_SAMPLES = 512
_LEVEL_TOL = 1e-12


class SurfaceError(ValueError):
    """Raised for parameters or profiles violating the standing hypotheses."""


@dataclass(frozen=True)
class Segment:
    """One closed-form piece of the warp function on ``[t_lo, t_hi]``.

    ``f3``/``f4`` (third and fourth derivatives) and ``antideriv`` are
    optional; without them curvature derivatives fall back to finite
    differences and the antiderivative to a Chebyshev fit.
    """

    t_lo: float
    t_hi: float
    f: Scalar
    fp: Scalar
    fpp: Scalar
    f3: Optional[Scalar] = None
    f4: Optional[Scalar] = None
    antideriv: Optional[Scalar] = None

    def __post_init__(self):
        if not self.t_lo < self.t_hi:
            raise SurfaceError(f"segment bounds out of order: [{self.t_lo}, {self.t_hi}]")

    def mirrored(self) -> "Segment":
        """The reflection ``t -> -t`` of this piece (keeps f even)."""
        s = self
        return Segment(
            -s.t_hi,
            -s.t_lo,
            lambda t: s.f(-t),
            lambda t: -s.fp(-t),
            lambda t: s.fpp(-t),
            None if s.f3 is None else (lambda t: -s.f3(-t)),
            None if s.f4 is None else (lambda t: s.f4(-t)),
            None if s.antideriv is None else (lambda t: -s.antideriv(-t)),
        )


@dataclass(frozen=True)
class MetricSample:
    t: float
    f: float
    fp: float
    fpp: float
    K: float
    h: float
    L: float
    D: float


@dataclass(frozen=True)
class CriticalPoints:
    """Positive abscissae delimiting the stability windows of parallels.

    ``t_c``     first ``t >= 0`` where ``D = (f')^2 - f f'' <= 0``.
    ``t_tilde`` last ``t`` in ``[0, t_c]`` with ``D >= 1``; ``None`` when ``D < 1``
                everywhere.
    ``t_stable`` first ``t >= 0`` with ``D <= 1``; parallels beyond it are stable.
    """

    t_c: float
    t_tilde: Optional[float]
    t_stable: float
    t0: float


@dataclass(frozen=True)
class StandardTorusParams:
    a: float
    r: float


@dataclass(frozen=True)
class SphereHyperbolicParams:
    a: float
    t_star: float
    b: float

    @property
    def c(self) -> float:
        a, ts, b = self.a, self.t_star, self.b
        return math.sqrt(math.cos(a * ts) ** 2 / a**2 - math.sin(a * ts) ** 2 / b**2)

    @property
    def d(self) -> float:
        a, ts, b = self.a, self.t_star, self.b
        return b * ts + math.acosh(math.cos(a * ts) / (a * self.c))


@dataclass(frozen=True, eq=False)
class SurfaceProfile:
    """Immutable warped-product torus built from ordered segments."""

    segments: tuple
    t0: float
    name: str = ""
    params: dict = field(default_factory=dict)
    validate: bool = True

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise SurfaceError("profile needs at least one segment")
        if self.t0 <= 0:
            raise SurfaceError("t0 must be positive")
        for left, right in zip(segs, segs[1:]):
            if abs(left.t_hi - right.t_lo) > 1e-12:
                raise SurfaceError("segments must tile [-t0, t0] without gaps")
        if abs(segs[0].t_lo + self.t0) > 1e-12 or abs(segs[-1].t_hi - self.t0) > 1e-12:
            raise SurfaceError("segments must span exactly [-t0, t0]")
        edges = [s.t_lo for s in segs] + [segs[-1].t_hi]
        object.__setattr__(self, "_edges", edges)
        object.__setattr__(self, "_prims", self._build_primitives())
        if self.validate:
            self._check_hypotheses()

    # -- evaluation -----------------------------------------------------
    def _reduce(self, t: float):
        t0 = self.t0
        if -t0 <= t <= t0:
            return t, 0
        k = math.floor((t + t0) / (2.0 * t0))
        tr = t - 2.0 * k * t0
        # floor can land on the wrong side by one ulp
        if tr > t0:
            tr -= 2.0 * t0
            k += 1
        return tr, k

    def segment_index(self, t: float) -> int:
        """Index of the segment owning ``t``; joints belong to the side toward 0."""
        e = self._edges
        if t > 0:
            i = bisect.bisect_left(e, t) - 1
        else:
            i = bisect.bisect_right(e, t) - 1
        return min(max(i, 0), len(self.segments) - 1)

    def _seg(self, t):
        tr, _ = self._reduce(t)
        return self.segments[self.segment_index(tr)], tr

    def f(self, t: float) -> float:
        s, tr = self._seg(t)
        return s.f(tr)

    def fp(self, t: float) -> float:
        s, tr = self._seg(t)
        return s.fp(tr)

    def fpp(self, t: float) -> float:
        s, tr = self._seg(t)
        return s.fpp(tr)

    def f_fp(self, t: float):
        s, tr = self._seg(t)
        return s.f(tr), s.fp(tr)

    def K(self, t: float) -> float:
        s, tr = self._seg(t)
        return -s.fpp(tr) / s.f(tr)

    def h(self, t: float) -> float:
        """Geodesic curvature of the parallel at ``t`` w.r.t. ``-d/dt``."""
        s, tr = self._seg(t)
        return s.fp(tr) / s.f(tr)

    def D(self, t: float) -> float:
        s, tr = self._seg(t)
        return s.fp(tr) ** 2 - s.f(tr) * s.fpp(tr)

    def L(self, t: float) -> float:
        return 2.0 * math.pi * self.f(t)

    def F(self, t: float) -> float:
        """``int_0^t f`` continued to all real ``t`` (quasi-periodic)."""
        tr, k = self._reduce(t)
        i = self.segment_index(tr)
        prim, offset = self._prims[i]
        return prim(tr) + offset + k * self._half_area

    def metric_eval(self, t: float) -> MetricSample:
        if not -self.t0 - 1e-12 <= t <= self.t0 + 1e-12:
            raise SurfaceError(f"t={t} outside [-t0, t0] = [{-self.t0}, {self.t0}]")
        s, tr = self._seg(t)
        f, fp, fpp = s.f(tr), s.fp(tr), s.fpp(tr)
        return MetricSample(
            t=t, f=f, fp=fp, fpp=fpp, K=-fpp / f, h=fp / f,
            L=2.0 * math.pi * f, D=fp * fp - f * fpp,
        )

    # -- curvature derivatives ------------------------------------------
    def K_derivatives(self, t: float, *, closed_form: bool = True):
        """``(K, K', K'')`` at ``t`` from closed forms or 7-point differences.

        The finite-difference stencil stays inside the owning segment.
        """
        s, tr = self._seg(t)
        f, f1, f2 = s.f(tr), s.fp(tr), s.fpp(tr)
        K = -f2 / f
        if closed_form and s.f3 is not None and s.f4 is not None:
            f3, f4 = s.f3(tr), s.f4(tr)
            g1 = f3 / f - f2 * f1 / f**2
            g2 = f4 / f - 2 * f3 * f1 / f**2 - f2**2 / f**2 + 2 * f2 * f1**2 / f**3
            return K, -g1, -g2
        step = min(1e-2, (s.t_hi - s.t_lo) / 8)
        if tr - 3 * step < s.t_lo or tr + 3 * step > s.t_hi:
            raise SurfaceError(f"t={t} too close to a segment joint for K derivatives")
        Kv = [-s.fpp(tr + j * step) / s.f(tr + j * step) for j in range(-3, 4)]
        d1 = (-Kv[0] + 9 * Kv[1] - 45 * Kv[2] + 45 * Kv[4] - 9 * Kv[5] + Kv[6]) / (60 * step)
        d2 = (2 * Kv[0] - 27 * Kv[1] + 270 * Kv[2] - 490 * Kv[3]
              + 270 * Kv[4] - 27 * Kv[5] + 2 * Kv[6]) / (180 * step**2)
        return K, d1, d2

    # -- global quantities ----------------------------------------------
    def total_area(self) -> float:
        """Total area ``2 pi int f`` by adaptive quadrature per segment."""
        tot = 0.0
        for s in self.segments:
            val, _ = integrate.quad(s.f, s.t_lo, s.t_hi, epsabs=0.0, epsrel=1e-13, limit=200)
            tot += val
        return 2.0 * math.pi * tot

    @property
    def joints(self) -> list:
        """Interior segment joints (excluding the identified ends)."""
        return list(self._edges[1:-1])

    def critical_points(self) -> CriticalPoints:
        t_c = self._first_crossing(lambda d: d <= 0.0, 0.0)
        t_stable = self._first_crossing(lambda d: d <= 1.0 + _LEVEL_TOL, 1.0)
        below_one = self._first_crossing(lambda d: d < 1.0 - _LEVEL_TOL, 1.0)
        t_tilde = None if self.D(0.0) < 1.0 - _LEVEL_TOL else min(below_one, t_c)
        return CriticalPoints(t_c=t_c, t_tilde=t_tilde, t_stable=t_stable, t0=self.t0)

    def _first_crossing(self, pred, level):
        """Smallest ``t`` in ``[0, t0]`` where ``pred(D)`` first holds."""
        for s in self.segments:
            if s.t_hi <= 0:
                continue
            lo = max(s.t_lo, 0.0)
            ts = np.linspace(lo, s.t_hi, _SCAN_SAMPLES + 1)
            Ds = [s.fp(x) ** 2 - s.f(x) * s.fpp(x) for x in ts]
            for i, d in enumerate(Ds):
                if not pred(d):
                    continue
                if i == 0:
                    return float(lo)
                g = lambda x: s.fp(x) ** 2 - s.f(x) * s.fpp(x) - level
                a, b = ts[i - 1], ts[i]
                ga, gb = g(a), g(b)
                if ga * gb > 0:
                    return float(b)
                if gb == 0.0:
                    return float(b)
                root = optimize.brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
                return float(root)
        return float(self.t0)

    # -- construction helpers -------------------------------------------
    def _build_primitives(self):
        """Per segment ``(prim, offset)`` with ``F(t) = prim(t) + offset``, ``F(0)=0``."""
        raw = []
        for s in self.segments:
            if s.antideriv is not None:
                raw.append(s.antideriv)
            else:
                cheb = chebyshev.Chebyshev.interpolate(
                    np.vectorize(s.f), 64, domain=[s.t_lo, s.t_hi]
                ).integ(lbnd=s.t_lo)
                raw.append(lambda t, c=cheb: float(c(t)))
        # chain offsets from the segment containing 0
        n = len(self.segments)
        i0 = self.segment_index(0.0)
        offsets = [0.0] * n
        offsets[i0] = -raw[i0](0.0)
        for i in range(i0 + 1, n):
            jt = self.segments[i].t_lo
            offsets[i] = raw[i - 1](jt) + offsets[i - 1] - raw[i](jt)
        for i in range(i0 - 1, -1, -1):
            jt = self.segments[i].t_hi
            offsets[i] = raw[i + 1](jt) + offsets[i + 1] - raw[i](jt)
        prims = list(zip(raw, offsets))
        top = prims[-1][0](self.t0) + prims[-1][1]
        bot = prims[0][0](-self.t0) + prims[0][1]
        object.__setattr__(self, "_half_area", top - bot)
        return prims

    def _check_hypotheses(self):
        tol = _VALIDATION_TOL
        for left, right in zip(self.segments, self.segments[1:]):
            x = left.t_hi
            if abs(left.f(x) - right.f(x)) > tol or abs(left.fp(x) - right.fp(x)) > tol:
                raise SurfaceError(f"warp function is not C^1 at joint t={x}")
        ts = np.linspace(-self.t0, self.t0, _VALIDATION_GRID + 1)
        fs = np.array([self.f(x) for x in ts])
        if np.any(fs <= 0):
            raise SurfaceError("warp function must be positive")
        if np.max(np.abs(fs - fs[::-1])) > tol * (1 + np.max(fs)):
            raise SurfaceError("warp function must be even (horizontal symmetry)")
        if abs(self.segments[-1].fp(self.t0)) > tol or abs(self.segments[0].fp(-self.t0)) > tol:
            raise SurfaceError("f'(+-t0) must vanish for the identification")
        half = ts[ts >= 0]
        fh = np.array([self.f(x) for x in half])
        if np.any(np.diff(fh) >= 0):
            raise SurfaceError("warp function must be strictly decreasing on (0, t0)")
        Ks = np.array([self.K(x) for x in half])
        if np.any(np.diff(Ks) > tol * (1 + np.abs(Ks[:-1]))):
            raise SurfaceError("Gauss curvature must be nonincreasing away from t=0")
        if not Ks[0] > 0 or not self.segments[-1].fpp(self.t0) > 0:
            raise SurfaceError("need K(0) > 0 and K(t0) < 0")


def build_standard_torus(p: StandardTorusParams) -> SurfaceProfile:
    """Torus of revolution, ``f(t) = a + r cos(t/r)`` on ``[-pi r, pi r]``."""
    a, r = float(p.a), float(p.r)
    if not (a > 0 and r > 0):
        raise SurfaceError("standard torus needs a, r > 0")
    if not a >= r * (1 + 1e-6):
        raise SurfaceError(f"standard torus needs a > r (got a={a}, r={r})")
    seg = Segment(
        -math.pi * r,
        math.pi * r,
        f=lambda t: a + r * math.cos(t / r),
        fp=lambda t: -math.sin(t / r),
        fpp=lambda t: -math.cos(t / r) / r,
        f3=lambda t: math.sin(t / r) / r**2,
        f4=lambda t: math.cos(t / r) / r**3,
        antideriv=lambda t: a * t + r * r * math.sin(t / r),
    )
    return SurfaceProfile(
        (seg,), math.pi * r, name=f"standard(a={a:g}, r={r:g})",
        params={"family": "standard", "a": a, "r": r},
    )


def build_sphere_hyperbolic(p: SphereHyperbolicParams) -> SurfaceProfile:
    """Spherical zone of radius ``1/a`` glued to two hyperbolic annuli (curvature ``-b^2``)."""
    a, ts, b = float(p.a), float(p.t_star), float(p.b)
    if not (a > 0 and ts > 0 and b > 0):
        raise SurfaceError("sphere-hyperbolic surface needs positive a, t_star, b")
    if not ts < math.pi / (2 * a):
        raise SurfaceError("t_star must be below pi/(2a)")
    if not b > a * math.tan(a * ts):
        raise SurfaceError(f"need b > a tan(a t*) = {a * math.tan(a * ts):.8g} for a real c")
    c, d = p.c, p.d
    t0 = d / b
    sphere = Segment(
        0.0, ts,
        f=lambda t: math.cos(a * t) / a,
        fp=lambda t: -math.sin(a * t),
        fpp=lambda t: -a * math.cos(a * t),
        f3=lambda t: a * a * math.sin(a * t),
        f4=lambda t: a**3 * math.cos(a * t),
        antideriv=lambda t: math.sin(a * t) / a**2,
    )
    hyper = Segment(
        ts, t0,
        f=lambda t: c * math.cosh(d - b * t),
        fp=lambda t: -b * c * math.sinh(d - b * t),
        fpp=lambda t: b * b * c * math.cosh(d - b * t),
        f3=lambda t: -(b**3) * c * math.sinh(d - b * t),
        f4=lambda t: b**4 * c * math.cosh(d - b * t),
        antideriv=lambda t: -c / b * math.sinh(d - b * t),
    )
    segs = (hyper.mirrored(), sphere.mirrored(), sphere, hyper)
    return SurfaceProfile(
        segs, t0, name=f"sphere_hyperbolic(a={a:g}, t*={ts:g}, b={b:g})",
        params={"family": "sphere_hyperbolic", "a": a, "t_star": ts, "b": b, "c": c, "d": d},
    )


def build_custom(pieces: Sequence, name: str = "custom") -> SurfaceProfile:
    """Profile from upper-half pieces ``(t_lo, t_hi, expr)`` with ``expr`` in ``t``.

    Pieces must tile ``[0, t0]``; the lower half is the mirror image.
    Derivatives come from sympy.
    """
    import sympy

    tsym = sympy.Symbol("t", real=True)
    upper = []
    for t_lo, t_hi, expr in pieces:
        e = sympy.sympify(expr, locals={"t": tsym})
        ders = [e] + [sympy.diff(e, tsym, k) for k in range(1, 5)]
        fns = [sympy.lambdify(tsym, d, modules="math") for d in ders]
        fns = [lambda x, g=g: float(g(x)) for g in fns]
        upper.append(Segment(float(t_lo), float(t_hi), *fns))
    if abs(upper[0].t_lo) > 1e-12:
        raise SurfaceError("custom pieces must start at t=0")
    segs = tuple(s.mirrored() for s in reversed(upper)) + tuple(upper)
    return SurfaceProfile(segs, upper[-1].t_hi, name=name,
                          params={"family": "custom", "pieces": [list(p) for p in pieces]})


def metric_eval(s: SurfaceProfile, t: float) -> MetricSample:
    return s.metric_eval(t)


def critical_points(s: SurfaceProfile) -> CriticalPoints:
    return s.critical_points()


def total_area(s: SurfaceProfile) -> float:
    return s.total_area()
