"""Minimal-perimeter profile over the stable candidate families.

Each family is sampled in its natural parameter, its (area, perimeter)
graph is split into pieces monotone in area, and each piece is interpolated
with a monotone cubic.  Complements enter with area ``beta - A``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.interpolate import PchipInterpolator

from . import jacobi
from .closed import (
    BranchError,
    ClosedCurve,
    NoClosedCurve,
    _nodoid_arc,
    _sample_closed_unduloid,
    analytic_taylor,
    closed_unduloid,
    find_symmetric_nodoid,
    trace_unduloid_branch,
)
from .curves import CurveClass, CurveState, IntegrationError, integrate_arclength, integrate_graph
from .stability import (
    CandidateRegion,
    Parallel,
    VerticalLine,
    annulus_stable,
    constant_mode_sum,
    disk_plus_annulus_stable,
    partner_parallel,
)
from .surface import SurfaceProfile

log = logging.getLogger(__name__)

SUFFIX = "_complement"
TIE_TOL = 1e-6
BASE_KINDS = (
    "disk",
    "vertical_annulus",
    "symmetric_annulus",
    "nonsymmetric_annulus",
    "unduloid_circle_annulus",
    "disk_plus_symmetric_annulus",
)


def base_kind(kind: str) -> str:
    return kind[: -len(SUFFIX)] if kind.endswith(SUFFIX) else kind


def complement_kind(kind: str) -> str:
    if kind == "vertical_annulus":
        return kind
    return base_kind(kind) if kind.endswith(SUFFIX) else kind + SUFFIX


# -- area and perimeter of explicit regions -----------------------------------------

def _band_area(s: SurfaceProfile, t_lo: float, t_hi: float) -> float:
    """Area of ``S^1 x [t_lo, t_hi]`` with ``t_hi`` lifted above ``t_lo``."""
    while t_hi <= t_lo:
        t_hi += 2 * s.t0
    return 2 * math.pi * (s.F(t_hi) - s.F(t_lo))


def region_measure(s: SurfaceProfile, rg: CandidateRegion):
    """``(area, perimeter)`` of a candidate region."""
    beta = s.total_area()
    per = 0.0
    for b in rg.boundary:
        per += b.length if isinstance(b, ClosedCurve) else b.length(s)
    parallels = sorted((b for b in rg.boundary if isinstance(b, Parallel)), key=lambda b: -b.inner)
    curves = [b for b in rg.boundary if isinstance(b, ClosedCurve)]
    kind = rg.kind
    if kind == "vertical_annuli":
        th = sorted(float(np.mod(b.theta, 2 * math.pi)) for b in rg.boundary)
        widths = rg.params.get("widths") or [th[i + 1] - th[i] for i in range(0, len(th), 2)]
        area = sum(widths) * beta / (2 * math.pi)
    elif kind in ("symmetric_annulus", "nonsymmetric_annulus"):
        lo, hi = parallels
        area = _band_area(s, lo.t, hi.t)
    elif kind == "disk":
        area = abs(curves[0].area_integral)
    elif kind == "unduloid_circle_annulus":
        c, p = curves[0], parallels[0]
        t_p = p.t
        while t_p > c.t_min:
            t_p -= 2 * s.t0
        area = c.area_integral - 2 * math.pi * s.F(t_p)
    elif kind == "disk_plus_symmetric_annulus":
        lo, hi = parallels
        area = abs(curves[0].area_integral) + _band_area(s, lo.t, hi.t)
    else:
        raise ValueError(f"unknown region kind {kind!r}")
    if rg.complement:
        area = beta - area
    return float(area), float(per)


# -- family tables -----------------------------------------------------------------

@dataclass
class FamilyTable:
    kind: str
    param: np.ndarray
    area: np.ndarray
    perimeter: np.ndarray
    constant: bool = False
    _pieces: Optional[list] = field(default=None, repr=False)

    def __len__(self):
        return len(self.param)

    def complement(self, beta: float) -> "FamilyTable":
        return FamilyTable(complement_kind(self.kind), self.param.copy(), beta - self.area,
                           self.perimeter.copy(), self.constant)

    def pieces(self):
        """Interpolants on stretches where area is monotone in the parameter."""
        if self._pieces is None:
            self._pieces = []
            n = len(self.param)
            if n >= 2:
                sgn = np.sign(np.diff(self.area))
                cuts = [0] + [i for i in range(1, n - 1) if sgn[i] != sgn[i - 1]] + [n - 1]
                for i0, i1 in zip(cuts, cuts[1:]):
                    self._add_piece(i0, i1)
        return self._pieces

    def _add_piece(self, i0, i1):
        A, P = self.area[i0:i1 + 1], self.perimeter[i0:i1 + 1]
        order = np.argsort(A)
        A, P = A[order], P[order]
        keep = np.concatenate([[True], np.diff(A) > 0])
        A, P = A[keep], P[keep]
        if len(A) >= 2:
            self._pieces.append((A[0], A[-1], PchipInterpolator(A, P)))

    def perimeter_at(self, A: float) -> float:
        """Least perimeter of the family at area ``A`` (``nan`` if not covered)."""
        best = math.nan
        for lo, hi, itp in self.pieces():
            if lo <= A <= hi:
                v = float(itp(A))
                if not best <= v:
                    best = v
        return best

    @property
    def area_range(self):
        if not len(self.area):
            return (math.nan, math.nan)
        return float(np.min(self.area)), float(np.max(self.area))


@dataclass
class FamilyGrids:
    """Sample counts per family."""

    disk: int = 160
    annulus: int = 160
    vertical: int = 129
    branch_max: int = 60
    spectral_grid: int = 256
    ode_tol: float = 1e-10


def _param_grid(lo, hi, n, power=1.0):
    x = np.linspace(0.0, 1.0, n + 2)[1:-1] ** power
    return lo + (hi - lo) * x


def disk_family(s: SurfaceProfile, n: int = 160, tol: float = 1e-10):
    """Symmetric nodoid disks by maximum height; also returns their curvatures."""
    Ts, As, Ps, hs = [], [], [], []
    for T in _param_grid(0.0, s.t0, n, 1.5):
        h = s.f(T) / s.F(T)
        try:
            arc = _nodoid_arc(s, T, h, tol)
            ok = abs(arc.t[-1] + T) <= 1e-8 * max(1.0, T) and abs(arc.theta[-1]) <= 1e-8
            if not ok:
                c = find_symmetric_nodoid(s, T, tol)
                h = c.h
                arc = _nodoid_arc(s, T, h, tol)
        except (IntegrationError, NoClosedCurve) as exc:
            log.info("disk family ends at T=%.6g: %s", T, exc)
            break
        if np.max(np.abs(arc.theta)) >= math.pi:
            log.info("disk family ends at T=%.6g: boundary wraps around", T)
            break
        Ts.append(T)
        hs.append(h)
        As.append(2 * float(arc.area[-1]))
        Ps.append(2 * float(arc.s[-1]))
    tab = FamilyTable("disk", np.array(Ts), np.abs(np.array(As)), np.array(Ps))
    return tab, np.array(hs)


def vertical_family(s: SurfaceProfile, n: int = 129) -> FamilyTable:
    beta = s.total_area()
    w = 2 * math.pi * np.linspace(0.0, 1.0, n + 2)[1:-1]
    return FamilyTable("vertical_annulus", w, w * beta / (2 * math.pi),
                       np.full(n, 4 * s.t0), constant=True)


def symmetric_annulus_family(s: SurfaceProfile, n: int = 160) -> FamilyTable:
    """Bands around the shortest parallel bounded by ``S^1 x {+-t}``, ``t in [t_c, t0)``."""
    cp = s.critical_points()
    if cp.t_c is None:
        return FamilyTable("symmetric_annulus", np.array([]), np.array([]), np.array([]))
    beta = s.total_area()
    t = np.concatenate([[cp.t_c], _param_grid(cp.t_c, s.t0, n - 1)])
    A = np.array([beta - 4 * math.pi * s.F(x) for x in t])
    P = np.array([4 * math.pi * s.f(x) for x in t])
    return FamilyTable("symmetric_annulus", t, A, P)


def nonsymmetric_annulus_family(s: SurfaceProfile, n: int = 160) -> FamilyTable:
    """Bands through the shortest parallel bounded by ``-p`` and its partner ``q``."""
    cp = s.critical_points()
    empty = FamilyTable("nonsymmetric_annulus", np.array([]), np.array([]), np.array([]))
    if cp.t_c is None or cp.t_stable is None or cp.t_stable >= cp.t_c:
        return empty
    beta = s.total_area()
    ps, As, Ps = [], [], []
    for p in np.concatenate([[cp.t_stable], _param_grid(cp.t_stable, cp.t_c, n - 1)]):
        q = partner_parallel(s, -p)
        if not annulus_stable(s, -p, q).ok:
            continue
        ps.append(p)
        As.append(beta - 2 * math.pi * (s.F(p) + s.F(q)))
        Ps.append(2 * math.pi * (s.f(p) + s.f(q)))
    if not ps:
        return empty
    return FamilyTable("nonsymmetric_annulus", np.array(ps), np.array(As), np.array(Ps))


def unduloid_circle_family(s: SurfaceProfile, max_samples: int = 60, spectral_grid: int = 256,
                           tol: float = 1e-12) -> FamilyTable:
    """Regions below a closed unduloid and above a parallel in ``D < 0``.

    Kept only when: the circle matches the unduloid's curvature, the two lie
    in opposite halves, the unduloid misses the mirror parallel, the constant
    test function has nonnegative index, ``lambda_1 < 0 <= lambda_2``, and the
    branch satisfies ``dh_o/dT * da/dT < 0``.
    """
    empty = FamilyTable("unduloid_circle_annulus", np.array([]), np.array([]), np.array([]))
    cp = s.critical_points()
    if cp.t_c is None or cp.t_tilde is None:
        return empty
    try:
        taylor = analytic_taylor(s)
        if taylor.condition_value == 0:
            return empty
        br = trace_unduloid_branch(s, (cp.t_tilde, s.t0 * (1 - 1e-6)), tol=tol,
                                   max_samples=max_samples)
    except (BranchError, IntegrationError, ValueError) as exc:
        log.info("no unduloid branch: %s", exc)
        return empty
    smp = [x for x in br.samples if x.T > cp.t_tilde]
    if len(smp) < 3:
        return empty
    T = np.array([x.T for x in smp])
    dh = np.gradient([x.h for x in smp], T)
    da = np.gradient([x.area for x in smp], T)
    h_range = (s.h(-s.t0), s.h(-cp.t_c))
    Ts, As, Ps = [], [], []
    for x, dhi, dai in zip(smp, dh, da):
        if not dhi * dai < 0:
            continue
        target = -x.h
        if not min(h_range) < target < max(h_range):
            continue
        tp = optimize.brentq(lambda y: s.h(y) - target, -s.t0, -cp.t_c, xtol=1e-15)
        if s.D(tp) >= 0 or x.t_min <= 0 or x.t_min <= abs(tp) <= x.t_max:
            continue
        c = closed_unduloid(s, x.T, x.h)
        if constant_mode_sum(s, c, tp) > 0:
            continue
        sp = jacobi.spectrum(jacobi.potential_along(s, c, spectral_grid), "periodic", 3,
                             spectral_grid)
        if not (sp[0] < 0 and sp[1] >= -1e-6):
            continue
        Ts.append(x.T)
        As.append(x.area - 2 * math.pi * s.F(tp))
        Ps.append(x.length + 2 * math.pi * s.f(tp))
    if not Ts:
        return empty
    return FamilyTable("unduloid_circle_annulus", np.array(Ts), np.array(As), np.array(Ps))


def disk_plus_annulus_family(s: SurfaceProfile, disks: FamilyTable, hs: np.ndarray,
                             tol: float = 1e-10) -> FamilyTable:
    """Disk plus the band around the shortest parallel with matching curvature."""
    empty = FamilyTable("disk_plus_symmetric_annulus", np.array([]), np.array([]), np.array([]))
    cp = s.critical_points()
    if cp.t_c is None or not len(disks):
        return empty
    beta = s.total_area()
    hmax = -s.h(cp.t_c)
    sphere = s.params.get("family") == "sphere_hyperbolic"
    Ts, As, Ps = [], [], []
    for T, A, P, h in zip(disks.param, disks.area, disks.perimeter, hs):
        if not 0 < h < hmax:
            continue
        ts = optimize.brentq(lambda y: -s.h(y) - h, cp.t_c, s.t0, xtol=1e-15)
        if T >= ts:
            continue
        if sphere and T <= s.params["t_star"]:
            if not disk_plus_annulus_stable(s.params["a"], s.params["b"], s.params["c"], h).ok:
                continue
        else:
            arc = _nodoid_arc(s, T, h, tol)
            xs = np.linspace(0.0, arc.s[-1], 257)
            qd = np.array([s.K(float(arc.at(x)[1])) for x in xs]) + h * h
            mode = float(np.trapezoid(qd, xs)) * 2 / P**2 + s.D(ts) / (4 * math.pi * s.f(ts) ** 3)
            if mode > 0:
                continue
        Ts.append(T)
        As.append(A + beta - 4 * math.pi * s.F(ts))
        Ps.append(P + 4 * math.pi * s.f(ts))
    if not Ts:
        return empty
    return FamilyTable("disk_plus_symmetric_annulus", np.array(Ts), np.array(As), np.array(Ps))


def enumerate_families(s: SurfaceProfile, grids: Optional[FamilyGrids] = None,
                       include=BASE_KINDS) -> list:
    """Tables for every candidate kind plus complements."""
    g = grids or FamilyGrids()
    beta = s.total_area()
    out = []
    disks, hs = disk_family(s, g.disk, g.ode_tol)
    builders = {
        "disk": lambda: disks,
        "vertical_annulus": lambda: vertical_family(s, g.vertical),
        "symmetric_annulus": lambda: symmetric_annulus_family(s, g.annulus),
        "nonsymmetric_annulus": lambda: nonsymmetric_annulus_family(s, g.annulus),
        "unduloid_circle_annulus": lambda: unduloid_circle_family(s, g.branch_max,
                                                                  g.spectral_grid),
        "disk_plus_symmetric_annulus": lambda: disk_plus_annulus_family(s, disks, hs, g.ode_tol),
    }
    for kind in BASE_KINDS:
        if kind not in include:
            continue
        tab = builders[kind]()
        out.append(tab)
        if kind != "vertical_annulus":
            out.append(tab.complement(beta))
    return out


# -- profile ---------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileRow:
    area: float
    perimeters: dict
    winner: str
    winner_perimeter: float
    near_ties: tuple
    refined: bool = False


@dataclass
class Profile:
    rows: list
    families: list
    beta: float

    @property
    def kinds(self):
        return [f.kind for f in self.families]

    def winners(self):
        return [r.winner for r in self.rows]


def _evaluate(families, A):
    per = {}
    for fam in families:
        v = fam.perimeter_at(A)
        per[fam.kind] = None if math.isnan(v) else v
    present = {k: v for k, v in per.items() if v is not None}
    if not present:
        raise ValueError(f"no candidate family covers area {A:.12g}")
    # deterministic: smallest perimeter, ties by family order
    order = {f.kind: i for i, f in enumerate(families)}
    win = min(present, key=lambda k: (present[k], order[k]))
    best = present[win]
    ties = tuple(k for k in present if k != win and present[k] <= best * (1 + TIE_TOL))
    return per, win, best, ties


def profile(s: SurfaceProfile, n_areas: int = 200, families: Optional[list] = None,
            grids: Optional[FamilyGrids] = None, refine: int = 8) -> Profile:
    """Minimal perimeter at ``A_i = beta i / (n + 1)``, ``i = 1..n``.

    With ``refine > 0`` a scan ``refine`` times finer (plus geometric points
    towards both ends of ``(0, beta)``) adds rows wherever the winning kind
    changes between grid rows, so regimes narrower than the grid spacing
    still appear.
    """
    if n_areas < 16:
        raise ValueError("n_areas must be at least 16")
    beta = s.total_area()
    fams = families if families is not None else enumerate_families(s, grids)
    grid = [beta * i / (n_areas + 1) for i in range(1, n_areas + 1)]
    rows = {A: ProfileRow(A, *_evaluate(fams, A)) for A in grid}
    if refine:
        ends = np.geomspace(1e-6, 1.0 / (n_areas + 1), 24, endpoint=False) * beta
        scan = np.concatenate([ends, beta * np.arange(1, refine * (n_areas + 1)) /
                               (refine * (n_areas + 1)), beta - ends[::-1]])
        lo = min(f.area_range[0] for f in fams if len(f))
        hi = max(f.area_range[1] for f in fams if len(f))
        scan = np.unique(scan[(scan >= lo) & (scan <= hi)])
        kinds = [base_kind(_evaluate(fams, A)[1]) for A in scan]
        for k, (A0, A1) in enumerate(zip(scan, scan[1:])):
            if kinds[k] != kinds[k + 1]:
                for A in (A0, A1):
                    if A not in rows:
                        rows[A] = ProfileRow(A, *_evaluate(fams, A), refined=True)
    return Profile([rows[A] for A in sorted(rows)], fams, beta)


def transitions(prof: Profile, tol: Optional[float] = None):
    """Areas where the winning kind changes (complement-only changes are ignored)."""
    tol = tol if tol is not None else 1e-6 * prof.beta
    out = []
    rows = prof.rows
    for r0, r1 in zip(rows, rows[1:]):
        if base_kind(r0.winner) == base_kind(r1.winner):
            continue
        lo, hi = r0.area, r1.area
        w_lo = base_kind(r0.winner)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if base_kind(_evaluate(prof.families, mid)[1]) == w_lo:
                lo = mid
            else:
                hi = mid
        out.append((float(0.5 * (lo + hi)), r0.winner, r1.winner))
    return out


def winner_sequence(prof: Profile, upto: Optional[float] = None):
    """Distinct consecutive base winner kinds, optionally for areas ``<= upto``."""
    seq = []
    for r in prof.rows:
        if upto is not None and r.area > upto:
            break
        k = base_kind(r.winner)
        if not seq or seq[-1] != k:
            seq.append(k)
    return seq


# -- rotated spherical cap -------------------------------------------------------------

def rotated_cap_region(s: SurfaceProfile, p: float, tilt: float, tol: float = 1e-12):
    """Tilt the parallel ``S^1 x {-p}`` inside the spherical piece by ``tilt``
    radians of the sphere and pair it with the partner parallel ``q``.

    Returns ``(region, closed_curve)``; the curve is integrated from its
    highest point with the parallel's curvature.
    """
    if s.params.get("family") != "sphere_hyperbolic":
        raise ValueError("needs a sphere-hyperbolic profile")
    a, ts = s.params["a"], s.params["t_star"]
    q = partner_parallel(s, -p)
    T = -p + tilt / a
    if not (-ts < -p - tilt / a and T < ts):
        raise ValueError("tilted circle leaves the spherical piece")
    h = s.h(-p)
    g = integrate_graph(s, T, h, 2 * math.pi, tol)
    closure = max(abs(g.t[-1] - T), abs(g.sigma[-1] - math.pi / 2))
    tr = integrate_arclength(s, CurveState(0.0, T, math.pi / 2), h, float(g.s[-1]), tol)
    c = ClosedCurve(CurveClass("unduloid"), h, T, float(np.min(g.t)), 2 * math.pi, 1,
                    float(g.s[-1]), tr, float(closure), float(g.area[-1]))
    rg = CandidateRegion("unduloid_circle_annulus", (c, Parallel(q, +1)), h=h)
    rg.area, rg.perimeter = region_measure(s, rg)
    return rg, c
