"""Closed embedded constant-curvature curves.

Unduloids bifurcate from the parallel ``t_tilde`` where ``D = 1``: with
``F(T, h) = sigma(pi; T, h)`` for the graph solution started at
``(t(0), sigma(0)) = (T, pi/2)``, closed curves of period ``2 pi`` are the
solutions of ``F(T, h) = pi/2`` other than the parallels ``h = h(T)``.
Symmetric nodoids bound disks centred on the longest parallel.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.integrate import solve_ivp

from .curves import (
    CurveClass,
    CurveState,
    GraphFormBreakdown,
    IntegrationError,
    Trajectory,
    classify_curve,
    half_period,
    integrate_arclength,
    integrate_graph,
)
from .surface import SurfaceError, SurfaceProfile

log = logging.getLogger(__name__)

PERIOD_TOL = 1e-12
CLOSURE_TOL = 1e-8
# finite-difference steps: first, second, third derivatives
FD1, FD2, FD3 = 1e-4, 1e-3, 2e-2


class HypothesisViolation(SurfaceError):
    """The bifurcation parallel does not satisfy the smoothness assumptions."""


class BranchError(RuntimeError):
    """Continuation of the unduloid branch failed."""


class NoClosedCurve(RuntimeError):
    """No closed curve of the requested kind exists at this height."""


@dataclass(frozen=True)
class TaylorCoefficients:
    """Second and third order data of ``F`` at ``(t_tilde, h_tilde)``."""

    t_tilde: float
    h_tilde: float
    f: float
    K: float
    K1: float
    K2: float
    rho: float
    sigma_TT_pi: float
    sigma_Th_pi: float
    sigma_hh_pi: float
    sigma_TTT_pi: float
    condition_value: float

    @property
    def hessian(self) -> np.ndarray:
        return np.array([[self.sigma_TT_pi, self.sigma_Th_pi],
                         [self.sigma_Th_pi, self.sigma_hh_pi]])

    @property
    def h_o_second(self) -> float:
        """Curvature of the unduloid branch ``h_o''(t_tilde)``."""
        return -self.sigma_TTT_pi / (3.0 * self.sigma_Th_pi)

    @property
    def theta_second(self) -> float:
        """Second derivative of the half period in ``T`` at fixed ``h_tilde``."""
        return self.f * self.sigma_TTT_pi / 3.0

    def branch_tangents(self):
        """Slopes ``dh/dT`` of the two zero-level branches: ``(circle, unduloid)``."""
        a, b, c = self.sigma_TT_pi, 2 * self.sigma_Th_pi, self.sigma_hh_pi
        # c m^2 + b m + a = 0
        roots = sorted(np.roots([c, b, a]).real)
        circle = min(roots, key=lambda m: abs(m + 1.0 / self.f**2))
        other = max(roots, key=lambda m: abs(m + 1.0 / self.f**2))
        return float(circle), float(other)


@dataclass(frozen=True)
class BranchSample:
    T: float
    h: float
    F_residual: float
    period: float
    k: int
    length: float
    area: float
    closure_residual: float
    first_integral_drift: float
    t_min: float
    t_max: float
    kind: str


@dataclass
class UnduloidBranch:
    samples: list
    t_tilde: float
    h_tilde: float
    taylor: Optional[TaylorCoefficients] = None
    profile: Optional[SurfaceProfile] = field(default=None, repr=False)

    @property
    def T(self):
        return np.array([s.T for s in self.samples])

    @property
    def h(self):
        return np.array([s.h for s in self.samples])

    def h_at(self, T: float) -> float:
        """``h_o(T)`` by an exact solve seeded from the sampled branch."""
        Ts, hs = self.T, self.h
        guess = float(np.interp(T, Ts, hs)) if len(Ts) else self.h_tilde
        return solve_h_o(self.profile, T, guess, self.t_tilde, self.h_tilde)


@dataclass(eq=False)
class ClosedCurve:
    """A closed embedded curve; ``trajectory`` covers one full loop in arc length
    starting at a ``t``-maximum, and the enclosed region lies on the side of
    ``N`` (the normal w.r.t. which ``h`` is measured)."""

    cls: CurveClass
    h: float
    t_max: float
    t_min: float
    period: Optional[float]
    k: Optional[int]
    length: float
    trajectory: Trajectory
    closure_residual: float
    area_integral: float = 0.0

    @property
    def kind(self) -> str:
        return self.cls.kind


# -- period map ----------------------------------------------------------------

def period_map(s: SurfaceProfile, T: float, h: float, tol: float = PERIOD_TOL) -> float:
    """``F(T, h) = sigma(pi)`` for the graph solution from ``(T, pi/2)``."""
    return float(integrate_graph(s, T, h, math.pi, tol).sigma[-1])


def _bifurcation_point(s: SurfaceProfile):
    cp = s.critical_points()
    if cp.t_tilde is None:
        raise HypothesisViolation("no parallel with D = 1")
    return cp.t_tilde, s.h(cp.t_tilde)


def analytic_taylor(s: SurfaceProfile, *, closed_form: bool = True) -> TaylorCoefficients:
    """Hessian and third ``T``-derivative of ``F`` at the bifurcation point."""
    tt, ht = _bifurcation_point(s)
    i = s.segment_index(tt)
    seg = s.segments[i]
    margin = 1e-6 * s.t0
    if tt - seg.t_lo < margin or seg.t_hi - tt < margin:
        raise HypothesisViolation(f"t_tilde={tt:.12g} sits on a segment joint; K is not smooth there")
    # K strictly decreasing near t_tilde
    probe = [tt + d for d in np.linspace(-margin * 10, margin * 10, 9)]
    Kp = [s.K(x) for x in probe]
    if np.any(np.diff(Kp) >= 0):
        raise HypothesisViolation("K is not strictly decreasing near t_tilde")
    K, K1, K2 = s.K_derivatives(tt, closed_form=closed_form)
    f = s.f(tt)
    rho = math.pi * f**3 * K1
    cond = 3 * K * (1 - f) + 3 * f**2 * (ht * K1 - K2) + 5 * f**4 * K1**2
    return TaylorCoefficients(
        t_tilde=tt, h_tilde=ht, f=f, K=K, K1=K1, K2=K2, rho=rho,
        sigma_TT_pi=0.0, sigma_Th_pi=rho / 2, sigma_hh_pi=rho * f**2,
        sigma_TTT_pi=math.pi / (8 * f) * cond, condition_value=cond,
    )


def fd_hessian(s: SurfaceProfile, T: float, h: float, step: float = FD2,
               tol: float = PERIOD_TOL) -> np.ndarray:
    """Central-difference Hessian of ``F`` (one Richardson level)."""
    def hess(e):
        F = lambda dT, dh: period_map(s, T + dT, h + dh, tol)
        c = F(0, 0)
        FTT = (F(e, 0) - 2 * c + F(-e, 0)) / e**2
        Fhh = (F(0, e) - 2 * c + F(0, -e)) / e**2
        FTh = (F(e, e) - F(e, -e) - F(-e, e) + F(-e, -e)) / (4 * e * e)
        return np.array([[FTT, FTh], [FTh, Fhh]])
    return (4 * hess(step) - hess(2 * step)) / 3


def fd_gradient(s, T, h, step=FD1, tol=PERIOD_TOL) -> np.ndarray:
    F = lambda dT, dh: period_map(s, T + dT, h + dh, tol)
    return np.array([(F(step, 0) - F(-step, 0)) / (2 * step),
                     (F(0, step) - F(0, -step)) / (2 * step)])


def fd_sigma_TTT(s, T, h, step=FD3, tol=PERIOD_TOL) -> float:
    """Third ``T``-derivative of ``F``, 5-point stencil plus Richardson."""
    def d3(e):
        v = [period_map(s, T + k * e, h, tol) for k in (-2, -1, 1, 2)]
        return (-v[0] + 2 * v[1] - 2 * v[2] + v[3]) / (2 * e**3)
    return (4 * d3(step / 2) - d3(step)) / 3


def area_second_derivative(s: SurfaceProfile, taylor: TaylorCoefficients) -> float:
    """``d^2/dT^2 int F(t) dtheta`` along the unduloid branch at ``t_tilde``.

    Integrates the first and second order variational equations of the
    graph system around the bifurcation parallel.
    """
    tt, ht, f = taylor.t_tilde, taylor.h_tilde, taylor.f
    fp, fpp = s.fp(tt), s.fpp(tt)
    f3 = ht * fpp - f * taylor.K1
    Dof = s.D(tt) / f
    ho2 = taylor.h_o_second

    def rhs(th, y):
        tT, sT, tH, sH, tTT, sTT, _ = y
        return [
            -f * sT,
            Dof * tT,
            -f * sH,
            f + Dof * tH,
            -f * sTT - 2 * fp * tT * sT,
            Dof * tTT + (ht * fpp - f3) * tT**2 + ht * f * sT**2,
            fp * tT**2 + f * (tTT + ho2 * tH),
        ]

    sol = solve_ivp(rhs, (0, 2 * math.pi), [1, 0, 0, 0, 0, 0, 0], method="DOP853",
                    rtol=1e-12, atol=1e-13)
    return float(sol.y[6, -1])


# -- unduloid branch -------------------------------------------------------------

def solve_h_o(s: SurfaceProfile, T: float, guess: float, t_tilde: float, h_tilde: float,
              tol: float = PERIOD_TOL) -> float:
    """Root of ``F(T, .) = pi/2`` near ``guess`` that is not the parallel ``h(T)``."""
    if abs(T - t_tilde) < 1e-14:
        return h_tilde
    hc = s.h(T)
    gap = guess - hc
    if gap == 0:
        raise BranchError("seed coincides with the circle branch")
    g = lambda hh: period_map(s, T, hh, tol) - math.pi / 2
    half = 0.5 * abs(gap)
    away = math.copysign(1.0, gap)
    lo, hi = guess - away * half, guess + away * half
    glo = g(lo)
    for _ in range(12):
        try:
            ghi = g(hi)
        except GraphFormBreakdown:
            ghi = float("nan")
        if glo * ghi < 0:
            break
        hi = hi + away * half
        half *= 2
    else:
        raise BranchError(f"no sign change bracketing h_o({T:.12g})")
    a, b = sorted((lo, hi))
    return optimize.brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def _wave_number(tr: Trajectory) -> int:
    """Number of periods in a full turn: interior critical points number ``2k - 1``."""
    n = sum(1e-9 < e.x < 2 * math.pi - 1e-9 for e in tr.events_of("t-max", "t-min"))
    return (n + 1) // 2


def _sample_closed_unduloid(s, T, h, tol=PERIOD_TOL) -> BranchSample:
    tr = integrate_graph(s, T, h, 2 * math.pi, tol)
    F_res = abs(float(tr.at(math.pi)[2]) - math.pi / 2)
    closure = max(abs(tr.t[-1] - T), abs(tr.sigma[-1] - math.pi / 2))
    fi = tr.first_integral_values()
    k = _wave_number(tr)
    ts = [float(tr.at(e.x)[1]) for e in tr.events_of("t-max", "t-min")] + [T]
    kind = "unduloid" if np.all(np.sin(tr.sigma) > 0) and np.ptp(tr.t) > 1e-9 else "circle"
    return BranchSample(
        T=T, h=h, F_residual=F_res, period=2 * math.pi / k, k=k, length=float(tr.s[-1]),
        area=float(tr.area[-1]), closure_residual=float(closure),
        first_integral_drift=float(np.ptp(fi)), t_min=min(ts), t_max=max(ts), kind=kind,
    )


def trace_unduloid_branch(s: SurfaceProfile, T_range, step: Optional[float] = None,
                          tol: float = PERIOD_TOL, *, max_samples: int = 400,
                          grow: float = 1.5) -> UnduloidBranch:
    """Natural continuation of ``h_o(T)`` from the bifurcation point.

    ``T_range = (T_lo, T_hi)`` may straddle ``t_tilde``; each side is traced
    outward from ``t_tilde``.  Samples failing closure or classification end
    that side of the branch.
    """
    taylor = analytic_taylor(s)
    if taylor.condition_value == 0:
        raise BranchError("degenerate bifurcation (condition value vanishes)")
    tt, ht = taylor.t_tilde, taylor.h_tilde
    step0 = step if step is not None else 1e-3 * tt
    T_lo, T_hi = T_range
    samples = []
    for direction, T_end in ((1, T_hi), (-1, T_lo)):
        if direction * (T_end - tt) <= 0:
            continue
        side = []
        dT = step0
        T_prev = tt
        while len(side) < max_samples:
            T = T_prev + direction * dT
            if direction * (T - T_end) > 1e-15:
                T = T_end
            delta = T - tt
            if len(side) >= 2:
                (T1, h1), (T2, h2) = (side[-2].T, side[-2].h), (side[-1].T, side[-1].h)
                guess = h2 + (h2 - h1) / (T2 - T1) * (T - T2)
            else:
                guess = ht + 0.5 * taylor.h_o_second * delta**2
            try:
                h = solve_h_o(s, T, guess, tt, ht, tol)
                smp = _sample_closed_unduloid(s, T, h, tol)
                if smp.kind != "unduloid" or smp.closure_residual > CLOSURE_TOL:
                    raise BranchError(f"rejected sample at T={T:.12g}: {smp.kind}, "
                                      f"closure {smp.closure_residual:.3g}")
            except (BranchError, IntegrationError) as exc:
                dT *= 0.5
                if dT < 1e-8 * tt:
                    log.info("branch side %+d stops at T=%.12g: %s", direction, T_prev, exc)
                    break
                continue
            side.append(smp)
            T_prev = T
            if abs(T - T_end) <= 1e-15:
                break
            dT *= grow
        samples.extend(side)
    samples.sort(key=lambda x: x.T)
    return UnduloidBranch(samples, tt, ht, taylor, s)


def branch_at(s: SurfaceProfile, Ts, tol: float = PERIOD_TOL) -> UnduloidBranch:
    """Branch samples at prescribed heights (seeded by the Taylor model)."""
    taylor = analytic_taylor(s)
    tt, ht = taylor.t_tilde, taylor.h_tilde
    out = []
    for T in sorted(Ts):
        guess = ht + 0.5 * taylor.h_o_second * (T - tt) ** 2
        h = solve_h_o(s, T, guess, tt, ht, tol)
        out.append(_sample_closed_unduloid(s, T, h, tol))
    return UnduloidBranch(out, tt, ht, taylor, s)


def branch_fd_derivatives(s: SurfaceProfile, delta: float = 1e-2, tol: float = PERIOD_TOL):
    """Finite-difference ``h_o'``, ``h_o''`` and ``A''`` at ``t_tilde`` (Richardson on
    steps ``delta``, ``2 delta``) from exactly solved branch points."""
    taylor = analytic_taylor(s)
    tt, ht = taylor.t_tilde, taylor.h_tilde
    pts = branch_at(s, [tt + k * delta for k in (-2, -1, 1, 2)], tol).samples
    hm2, hm1, hp1, hp2 = [p.h for p in pts]
    am2, am1, ap1, ap2 = [p.area for p in pts]
    a0 = 2 * math.pi * s.F(tt)
    d1 = lambda m, p, e: (p - m) / (2 * e)
    d2 = lambda m, c, p, e: (p - 2 * c + m) / e**2
    rich = lambda fine, coarse: (4 * fine - coarse) / 3
    return {
        "h_o_prime": rich(d1(hm1, hp1, delta), d1(hm2, hp2, 2 * delta)),
        "h_o_second": rich(d2(hm1, ht, hp1, delta), d2(hm2, ht, hp2, 2 * delta)),
        "area_prime": rich(d1(am1, ap1, delta), d1(am2, ap2, 2 * delta)),
        "area_second": rich(d2(am1, a0, ap1, delta), d2(am2, a0, ap2, 2 * delta)),
    }


def period_derivative(s: SurfaceProfile, branch: Optional[UnduloidBranch], T: float,
                      step: float = FD1, tol: float = PERIOD_TOL) -> float:
    """``d(period)/dT`` at fixed ``h = h_o(T)``, with ``T`` the maximum height.

    At ``T = t_tilde`` the parallel has no critical points; the second-order
    model ``2 theta''(t_tilde) (T - t_tilde)`` is used within one step of it.
    """
    if branch is None:
        branch = UnduloidBranch([], *_bifurcation_point(s), analytic_taylor(s), s)
    tt = branch.t_tilde
    if T < tt - step:
        raise ValueError("T is the maximum height of the unduloid and must exceed t_tilde")
    taylor = branch.taylor or analytic_taylor(s)
    if abs(T - tt) < step:
        return 2 * taylor.theta_second * (T - tt)
    h0 = branch.h_at(T)
    hp = half_period(s, T + step, h0, tol)[0]
    hm = half_period(s, T - step, h0, tol)[0]
    return 2 * (hp - hm) / (2 * step)


def closed_unduloid(s: SurfaceProfile, T: float, h: float, tol: float = 1e-11) -> ClosedCurve:
    """Re-integrate a closed unduloid in arc length over one full loop."""
    g = integrate_graph(s, T, h, 2 * math.pi, PERIOD_TOL)
    L = float(g.s[-1])
    theta0, t_top = 0.0, T
    for e in g.events_of("t-max"):
        t_e = float(g.at(e.x)[1])
        if t_e > t_top:
            theta0, t_top = e.x, t_e
    tr = integrate_arclength(s, CurveState(theta0, t_top, math.pi / 2), h, L, tol)
    k = _wave_number(g)
    closure = max(abs(g.t[-1] - T), abs(g.sigma[-1] - math.pi / 2))
    return ClosedCurve(classify_curve(tr) if np.ptp(tr.t) > 1e-9 else CurveClass("circle"),
                       h, t_top, float(np.min(g.t)), 2 * math.pi / k, k, L, tr, float(closure),
                       float(g.area[-1]))


# -- symmetric nodoids ---------------------------------------------------------------

def _nodoid_arc(s, T, h, tol):
    return integrate_arclength(s, CurveState(0.0, T, math.pi / 2), h,
                               8 * (2 * s.t0 + 2 * math.pi * s.f(0.0)), tol, stop_crit=1)


def symmetric_nodoid(s: SurfaceProfile, T: float, h: float, tol: float = 1e-11) -> ClosedCurve:
    """Closed curve through the ``t``-maximum ``T`` with curvature ``h``, built from
    its half arc (maximum to minimum) and the reflection ``theta -> -theta``."""
    arc = _nodoid_arc(s, T, h, tol)
    s_half = float(arc.s[-1])
    t_min = float(arc.t[-1])
    closure = max(abs(arc.theta[-1] - arc.theta[0]), abs(t_min + T))
    cls = classify_curve(arc) if len(arc.events_of("t-max", "t-min")) >= 2 else CurveClass("nodoid")
    full = integrate_arclength(s, CurveState(0.0, T, math.pi / 2), h, 2 * s_half, tol)
    return ClosedCurve(cls, h, T, t_min, None, None, 2 * s_half, full, float(closure),
                       2 * float(arc.area[-1]))


def find_symmetric_nodoid(s: SurfaceProfile, T: float, tol: float = 1e-11,
                          n_sweep: int = 24) -> ClosedCurve:
    """Solve for ``h`` so the arc from the maximum at ``T`` bottoms out at ``-T``.

    A coarse sweep in ``h`` brackets the sign change of ``t_min(h) + T``, then
    Brent's method polishes it.
    """
    if not 0 < T < s.t0:
        raise ValueError("T must lie in (0, t0)")
    h_lo = max(s.h(T), 0.0) + 1e-6
    h_hi = 4.0 / T + 4.0 * abs(s.h(T)) + 1.0

    def depth(hh):
        arc = _nodoid_arc(s, T, hh, tol)
        return float(arc.t[-1]) + T

    hs = np.geomspace(h_lo, h_hi, n_sweep)
    prev = None
    bracket = None
    for hh in hs:
        try:
            d = depth(hh)
        except IntegrationError:
            prev = None
            continue
        if prev is not None and prev[1] < 0 <= d:
            bracket = (prev[0], hh)
            break
        prev = (hh, d)
    if bracket is None:
        raise NoClosedCurve(f"no symmetric closed nodoid with maximum at T={T:.12g}")
    h_star = optimize.brentq(depth, *bracket, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    c = symmetric_nodoid(s, T, h_star, tol)
    if c.closure_residual > CLOSURE_TOL:
        raise NoClosedCurve(f"nodoid at T={T:.12g} fails closure ({c.closure_residual:.3g})")
    return c


def nodoid_curvature(s: SurfaceProfile, T: float) -> float:
    """Closing curvature of the symmetric nodoid from the first integral:
    ``t_min = -T`` forces ``h = f(T) / int_0^T f``."""
    return s.f(T) / s.F(T)


# -- parallels and vertical geodesics as closed curves ------------------------------

def parallel_curve(s: SurfaceProfile, t: float) -> ClosedCurve:
    """The parallel at ``t`` with ``N = -d/dt``."""
    L = s.L(t)
    tr = integrate_arclength(s, CurveState(0.0, t, math.pi / 2), s.h(t), L, 1e-12)
    return ClosedCurve(CurveClass("circle"), s.h(t), t, t, 2 * math.pi, 1, L, tr, 0.0,
                       2 * math.pi * s.F(t))


def vertical_curve(s: SurfaceProfile, theta: float = 0.0) -> ClosedCurve:
    L = 2 * s.t0
    tr = integrate_arclength(s, CurveState(theta, -s.t0, 0.0), 0.0, L, 1e-12)
    return ClosedCurve(CurveClass("vertical_geodesic"), 0.0, s.t0, -s.t0, None, None, L, tr,
                       float(abs(tr.t[-1] - tr.t[0] - L)))
