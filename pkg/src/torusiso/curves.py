"""Constant geodesic curvature curves in a warped-product torus.

Arc-length system for a curve with tangent angle ``sigma`` measured from
``d/dt`` and curvature ``h`` w.r.t. ``N = cos(sigma)/f d_theta - sin(sigma) d_t``::

    dtheta/ds = sin(sigma) / f(t)
    dt/ds     = cos(sigma)
    dsigma/ds = h - f'(t)/f(t) sin(sigma)

and ``f(t) sin(sigma) - h F(t)`` (``F = int_0^t f``) is conserved.  Graph
arcs ``t = t(theta)`` use the equivalent system with ``theta`` as the
independent variable.

The ``t`` coordinate is kept lifted to the real line (crossing the
identified parallel ``t = +-t0`` is recorded as a ``wrap`` event), and so is
``theta``.  Integration stops exactly at segment joints and restarts there,
so the Dormand-Prince pair never steps across a jump of ``f''``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.integrate import solve_ivp

from .surface import SurfaceProfile

GRAPH_GATE = 1e-6
_SNAP = 1e-12


class IntegrationError(RuntimeError):
    """The ODE solver failed (e.g. step-size underflow)."""


class GraphFormBreakdown(IntegrationError):
    """``|sin sigma|`` dropped below the graph-form gate: the arc turns vertical."""


class InsufficientArc(ValueError):
    """A trajectory is too short to classify."""


@dataclass(frozen=True)
class CurveState:
    theta: float
    t: float
    sigma: float
    s: float = 0.0


@dataclass(frozen=True)
class Event:
    index: int
    kind: str  # t-max, t-min, vertical-tangent, segment-joint, wrap
    x: float


@dataclass(frozen=True)
class CurveClass:
    kind: str  # circle, vertical_geodesic, nodoid, unduloid

    def __str__(self):
        return self.kind


@dataclass(eq=False)
class Trajectory:
    """Sampled solution plus its dense interpolant.

    ``x`` is the independent variable (``s`` in arc-length mode, ``theta`` in
    graph mode).  ``area`` accumulates ``int F(t) dtheta`` along the curve.
    """

    h: float
    mode: str
    x: np.ndarray
    theta: np.ndarray
    t: np.ndarray
    sigma: np.ndarray
    s: np.ndarray
    area: np.ndarray
    events: list
    first_integral_ref: float
    profile: SurfaceProfile = field(repr=False)
    pieces: list = field(default_factory=list, repr=False)

    @property
    def states(self) -> list:
        t0 = self.profile.t0
        return [
            CurveState(th % (2 * math.pi), _wrap_t(t, t0), sg, s)
            for th, t, sg, s in zip(self.theta, self.t, self.sigma, self.s)
        ]

    def at(self, x):
        """``(theta, t, sigma, s, area)`` at independent-variable values ``x``."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((5, xs.size))
        starts = [p[0] for p in self.pieces]
        for k, xv in enumerate(xs):
            i = min(max(bisect.bisect_right(starts, xv) - 1, 0), len(self.pieces) - 1)
            y = self.pieces[i][2](xv)
            out[:, k] = _unpack(self.mode, xv, y)
        return out if np.ndim(x) else out[:, 0]

    def first_integral_values(self) -> np.ndarray:
        prof = self.profile
        return np.array([
            prof.f(t) * math.sin(sg) - self.h * prof.F(t) for t, sg in zip(self.t, self.sigma)
        ])

    def events_of(self, *kinds) -> list:
        return [e for e in self.events if e.kind in kinds]


def _wrap_t(t, t0):
    return (t + t0) % (2 * t0) - t0


def _unpack(mode, x, y):
    if mode == "arclength":
        return (y[0], y[1], y[2], x, y[3])
    return (x, y[0], y[1], y[2], y[3])


def first_integral(profile: SurfaceProfile, st: CurveState, h: float) -> float:
    """``f(t) sin(sigma) - h int_0^t f``."""
    return profile.f(st.t) * math.sin(st.sigma) - h * profile.F(st.t)


def _lifted_joints(profile: SurfaceProfile, t: float):
    """Lifted joint positions immediately below/at/above ``t``."""
    t0 = profile.t0
    base = sorted(set(profile.joints + [t0]))
    k = math.floor((t + t0) / (2 * t0))
    cands = []
    for kk in (k - 2, k - 1, k, k + 1):
        cands.extend(j + 2 * kk * t0 for j in base)
    cands.sort()
    below = max(c for c in cands if c < t - _SNAP)
    above = min(c for c in cands if c > t + _SNAP)
    at = [c for c in cands if abs(c - t) <= _SNAP]
    return below, (at[0] if at else None), above


def _is_wrap(profile, j):
    t0 = profile.t0
    r = (j - t0) / (2 * t0)
    return abs(r - round(r)) < 1e-12


def _drive(profile, mode, h, y0, x0, x_end, tol, *, stop_crit=None, max_step=np.inf):
    """Integrate piecewise between joint and critical-point stops."""
    if mode == "arclength":
        def rhs(x, y):
            f, fp = profile.f_fp(y[1])
            ss, cs = math.sin(y[2]), math.cos(y[2])
            return [ss / f, cs, h - fp / f * ss, profile.F(y[1]) * ss / f]
        ti, si = 1, 2
    else:
        def rhs(x, y):
            f, fp = profile.f_fp(y[0])
            ss, cs = math.sin(y[1]), math.cos(y[1])
            return [f * cs / ss, h * f / ss - fp, f / ss, profile.F(y[0])]
        ti, si = 0, 1

    def crit(x, y):
        return math.cos(y[si])

    y = np.array(y0, dtype=float)
    x = float(x0)
    xs, ys, pieces, events = [np.array([x])], [y[:, None]], [], []

    # start on a critical point: the next one is crossed in the other direction
    g1 = -math.sin(y[si]) * rhs(x, y)[si]
    crit_dir = 0
    if abs(math.cos(y[si])) < 1e-14 and abs(g1) > 1e-300:
        crit_dir = -1 if g1 > 0 else 1
        events.append(Event(0, "t-max" if g1 < 0 else "t-min", x))
    n_crit = 0

    while x < x_end:
        dtdx = rhs(x, y)[ti]
        below, at, above = _lifted_joints(profile, y[ti])
        evs = []

        def mk(j, direction):
            ev = lambda xx, yy, j=j: yy[ti] - j
            ev.terminal = True
            ev.direction = direction
            ev.joint = j
            return ev

        if at is None:
            evs += [mk(below, 0), mk(above, 0)]
        elif dtdx > 0:
            evs += [mk(above, 0), mk(at, -1)]
        elif dtdx < 0:
            evs += [mk(below, 0), mk(at, 1)]
        else:
            evs += [mk(below, 0), mk(above, 0)]
        crit.terminal = True
        crit.direction = crit_dir
        evs.append(crit)
        if mode == "graph":
            gate = lambda xx, yy: math.sin(yy[1]) - GRAPH_GATE
            gate.terminal = True
            gate.direction = -1
            evs.append(gate)

        sol = solve_ivp(rhs, (x, x_end), y, method="DOP853", rtol=tol, atol=tol,
                        dense_output=True, events=evs, max_step=max_step)
        if sol.status == -1:
            raise IntegrationError(f"{sol.message} at x={sol.t[-1]:.17g}, t={sol.y[ti, -1]:.17g}")
        pieces.append((x, sol.t[-1], sol.sol))
        xs.append(sol.t[1:])
        ys.append(sol.y[:, 1:])
        x = float(sol.t[-1])
        y = sol.y[:, -1].copy()
        if sol.status != 1:
            break
        fired = [k for k, te in enumerate(sol.t_events) if len(te) and te[-1] == x]
        k = fired[0] if fired else len(evs) - 1
        ev = evs[k]
        idx = sum(a.size for a in xs) - 1
        if mode == "graph" and k == len(evs) - 1:
            raise GraphFormBreakdown(f"|sin sigma| < {GRAPH_GATE} at theta={x:.17g}")
        if ev is crit:
            rising = crit_dir > 0 if crit_dir else -math.sin(y[si]) * rhs(x, y)[si] > 0
            kind = "t-min" if rising else "t-max"
            events.append(Event(idx, kind, x))
            crit_dir = -1 if kind == "t-min" else 1
            n_crit += 1
            if stop_crit is not None and n_crit >= stop_crit:
                break
        else:
            y[ti] = ev.joint
            ys[-1][ti, -1] = ev.joint
            events.append(Event(idx, "wrap" if _is_wrap(profile, ev.joint) else "segment-joint", x))

    X = np.concatenate(xs)
    Y = np.concatenate(ys, axis=1)
    return X, Y, pieces, events


def _posthoc_events(tr: Trajectory):
    """Vertical tangents (sin sigma = 0) and theta wraps, polished on the dense output."""
    out = []
    checks = []
    if tr.mode == "arclength":
        checks.append(("vertical-tangent", lambda x: math.sin(tr.at(x)[2]), np.sin(tr.sigma)))
    wraps = np.floor(tr.theta / (2 * math.pi))
    for i in range(len(tr.x) - 1):
        a, b = tr.x[i], tr.x[i + 1]
        if b <= a:
            continue
        for kind, g, vals in checks:
            if vals[i] * vals[i + 1] < 0:
                r = optimize.brentq(g, a, b, xtol=1e-14)
                out.append(Event(i + 1, kind, r))
        if wraps[i] != wraps[i + 1]:
            level = 2 * math.pi * max(wraps[i], wraps[i + 1])
            g = lambda x: tr.at(x)[0] - level
            if g(a) * g(b) <= 0:
                out.append(Event(i + 1, "wrap", optimize.brentq(g, a, b, xtol=1e-14)))
    return out


def _assemble(profile, mode, h, X, Y, pieces, events):
    cols = np.array([_unpack(mode, x, Y[:, k]) for k, x in enumerate(X)]).T
    theta, t, sigma, s, area = cols
    ref = profile.f(t[0]) * math.sin(sigma[0]) - h * profile.F(t[0])
    tr = Trajectory(h, mode, X, theta, t, sigma, s, area, list(events), ref, profile, pieces)
    tr.events = sorted(tr.events + _posthoc_events(tr), key=lambda e: (e.x, e.index))
    return tr


def integrate_arclength(profile: SurfaceProfile, init: CurveState, h: float, s_max: float,
                        tol: float = 1e-10, *, stop_crit: Optional[int] = None,
                        max_step: float = np.inf) -> Trajectory:
    """Integrate the arc-length system from ``init`` over ``[init.s, init.s + s_max]``.

    ``stop_crit=n`` halts at the n-th critical point of ``t`` after the start.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    y0 = [init.theta, init.t, init.sigma, 0.0]
    X, Y, pieces, events = _drive(profile, "arclength", h, y0, init.s, init.s + s_max, tol,
                                  stop_crit=stop_crit, max_step=max_step)
    return _assemble(profile, "arclength", h, X, Y, pieces, events)


def integrate_graph(profile: SurfaceProfile, T: float, h: float, theta_end: float,
                    tol: float = 1e-12, *, sigma0: float = math.pi / 2,
                    stop_crit: Optional[int] = None) -> Trajectory:
    """Integrate the graph system ``t(theta)`` from ``t(0)=T``, ``sigma(0)=sigma0``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if abs(math.sin(sigma0)) < GRAPH_GATE:
        raise GraphFormBreakdown("initial direction is vertical")
    y0 = [T, sigma0, 0.0, 0.0]
    X, Y, pieces, events = _drive(profile, "graph", h, y0, 0.0, theta_end, tol,
                                  stop_crit=stop_crit)
    return _assemble(profile, "graph", h, X, Y, pieces, events)


def classify_curve(tr: Trajectory) -> CurveClass:
    """Circle, vertical geodesic, or unduloid/nodoid by the sign of ``sin sigma``
    at the critical point following a strict ``t``-maximum."""
    if np.ptp(tr.t) <= 1e-9:
        return CurveClass("circle")
    if np.ptp(tr.theta) <= 1e-9 and abs(tr.h) <= 1e-15:
        return CurveClass("vertical_geodesic")
    crits = tr.events_of("t-max", "t-min")
    for a, b in zip(crits, crits[1:]):
        if a.kind == "t-max":
            sg = tr.at(b.x)[2]
            return CurveClass("unduloid" if math.sin(sg) > 0 else "nodoid")
    raise InsufficientArc("no t-maximum followed by another critical point")


def half_period(profile: SurfaceProfile, T: float, h: float, tol: float = 1e-12,
                s_budget: Optional[float] = None):
    """``theta`` advance from the critical point at ``(0, T, pi/2)`` to the next one."""
    if s_budget is None:
        s_budget = 20.0 * (2 * profile.t0 + 2 * math.pi * profile.f(0.0))
    tr = integrate_arclength(profile, CurveState(0.0, T, math.pi / 2), h, s_budget, tol,
                             stop_crit=1)
    ends = [e for e in tr.events_of("t-max", "t-min") if e.x > tr.x[0]]
    if not ends:
        raise IntegrationError(f"no critical point within arc length {s_budget:g}")
    sg = tr.sigma[-1]
    kind = CurveClass("unduloid" if math.sin(sg) > 0 else "nodoid")
    return float(tr.theta[-1] - tr.theta[0]), kind
