"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (the lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import optimize

sys.path.insert(0, str(Path(__file__).parent))

from helpers import example_profile, sphere_hyperbolic, torus, torus_profile  # noqa: E402
from torusiso import StandardTorusParams, build_standard_torus  # noqa: E402
from torusiso import closed, jacobi, stability  # noqa: E402
from torusiso import isoperimetric as iso  # noqa: E402
from torusiso.curves import CurveState, integrate_arclength  # noqa: E402

RESULTS = {}

TITLES = {
    1: "surface closed forms (1, 0.4)",
    2: "Taylor data at the bifurcation point",
    3: "unduloid branch quality",
    4: "parallel spectra",
    5: "closed unduloid spectral consistency",
    6: "cap plus hyperbolic annulus instance",
    7: "disk / vertical annulus profiles",
    8: "regime sequences (1, 0.77) and (1, 0.9)",
    9: "rotated cap construction",
    10: "property suite",
}


class Checks:
    """Collects named sub-checks; the criterion passes when all hold."""

    def __init__(self):
        self.items = []

    def __call__(self, name, ok, value=None):
        self.items.append((name, bool(ok), value))
        return ok

    @property
    def ok(self):
        return all(ok for _, ok, _ in self.items)

    def detail(self):
        failed = [f"{n}={v}" if v is not None else n for n, ok, v in self.items if not ok]
        if failed:
            return "failed: " + ", ".join(failed)
        return f"{len(self.items)} checks"


def rel(a, b):
    return abs(a - b) / abs(b)


# -- criteria -------------------------------------------------------------------------

def criterion_1(c):
    a, r = 1.0, 0.4
    t_start = time.perf_counter()
    s = build_standard_torus(StandardTorusParams(a, r))  # uncached, so the timing is real
    cp = s.critical_points()
    beta = s.total_area()
    elapsed = time.perf_counter() - t_start
    c("t_tilde", abs(cp.t_tilde - math.pi * r / 2) <= 1e-10, cp.t_tilde)
    c("t_c", abs(cp.t_c - r * math.acos(-r / a)) <= 1e-9, cp.t_c)
    c("beta", rel(beta, 4 * math.pi**2 * a * r) <= 1e-8, beta)
    c("runtime<1s", elapsed < 1.0, f"{elapsed:.2f}s")


def criterion_2(c):
    a, r = 1.0, 0.4
    t_start = time.perf_counter()
    s = torus(a, r)
    tay = closed.analytic_taylor(s)
    f = s.f(tay.t_tilde)
    K1 = s.K_derivatives(tay.t_tilde)[1]
    rho = math.pi * f**3 * K1
    c("rho oracle", rel(rho, -math.pi * a * a / (r * r)) <= 1e-12, rho)
    H = closed.fd_hessian(s, tay.t_tilde, tay.h_tilde)
    ref = np.array([[0.0, rho / 2], [rho / 2, rho * f**2]])
    err = np.max(np.abs(H - ref)) / np.max(np.abs(ref))
    c("FD Hessian", err <= 1e-3, err)
    sttt_ref = math.pi * (5 * a * a + 9 * r * r) / (8 * a * r**4)
    sttt = closed.fd_sigma_TTT(s, tay.t_tilde, tay.h_tilde)
    c("FD sigma_TTT", rel(sttt, sttt_ref) <= 1e-3, sttt)
    c("sigma_TTT closed form", rel(tay.sigma_TTT_pi, sttt_ref) <= 1e-10, tay.sigma_TTT_pi)
    cond_fd = closed.analytic_taylor(s, closed_form=False).condition_value
    cond_ref = (5 * a * a + 9 * r * r) / r**4
    c("condition 251.5625", abs(cond_ref - 251.5625) < 1e-12 and rel(tay.condition_value, cond_ref)
      <= 1e-8, tay.condition_value)
    c("condition via K differences", rel(cond_fd, cond_ref) <= 1e-8, cond_fd)
    elapsed = time.perf_counter() - t_start
    c("runtime<30s", elapsed < 30.0, f"{elapsed:.1f}s")


def criterion_3(c):
    a, r = 1.0, 0.4
    s = torus(a, r)
    tt = s.critical_points().t_tilde
    br = closed.trace_unduloid_branch(s, (tt - 0.08, tt + 0.12))
    c("samples", len(br.samples) >= 10, len(br.samples))
    c("|F - pi/2|", max(abs(x.F_residual) for x in br.samples) <= 1e-10,
      max(abs(x.F_residual) for x in br.samples))
    c("closure", max(x.closure_residual for x in br.samples) <= 1e-8,
      max(x.closure_residual for x in br.samples))
    c("first integral", max(x.first_integral_drift for x in br.samples) <= 1e-9,
      max(x.first_integral_drift for x in br.samples))
    d = closed.branch_fd_derivatives(s)
    ho2 = (9 * r * r + 5 * a * a) / (12 * a**3 * r * r)
    c("h_o'' = 3.3541667", abs(ho2 - 3.3541667) < 1e-7 and rel(d["h_o_second"], ho2) <= 1e-2,
      d["h_o_second"])
    a2 = (a * a - 9 * r * r) * math.pi / (6 * r * r)
    c("A'' = -1.4398966", abs(a2 + 1.4398966) < 1e-7 and rel(d["area_second"], a2) <= 1e-3,
      d["area_second"])


def criterion_4(c):
    s = torus()
    worst = 0.0
    worst_first = 0.0
    for t in np.linspace(-0.95 * s.t0, 0.95 * s.t0, 10):
        p = jacobi.potential_along(s, closed.parallel_curve(s, t), 2048)
        lam = jacobi.spectrum(p, "periodic", 5, 2048, refine=True).eigenvalues
        L, q = s.L(t), s.K(t) + s.h(t) ** 2
        ref = np.array([(2 * math.pi * k / L) ** 2 - q for k in (0, 1, 1, 2, 2)])
        worst = max(worst, float(np.max(np.abs(lam - ref))))
        worst_first = max(worst_first, abs(lam[0] + q))
    c("k=0,1,2 within 1e-6", worst <= 1e-6, worst)
    c("lambda_1 = -(K+h^2) at 10 parallels", worst_first <= 1e-6, worst_first)


def criterion_5(c):
    s = torus()
    tt = s.critical_points().t_tilde
    br = closed.trace_unduloid_branch(s, (tt, tt + 0.1))
    for T in tt + np.array([0.01, 0.02, 0.04, 0.06, 0.08]):
        cu = closed.closed_unduloid(s, T, br.h_at(T))
        p = jacobi.potential_along(s, cu)
        per = jacobi.spectrum(p, "periodic", 3)
        neu, _ = jacobi.fundamental_piece_spectra(p, cu)
        dP = closed.period_derivative(s, br, T)
        tag = f"T={T:.4f}"
        c(f"{tag} lambda_1<0", per[0] < 0, per[0])
        c(f"{tag} |lambda_2|<=1e-4", abs(per[1]) <= 1e-4, per[1])
        c(f"{tag} lambda_1 = lambda_1^N", abs(per[0] - neu[0]) <= 1e-5, per[0] - neu[0])
        c(f"{tag} sign(lambda_2^N) = sign(dP/dT)", np.sign(neu[1]) == np.sign(dP),
          (neu[1], dP))


def criterion_6(c):
    s = sphere_hyperbolic(1.0, math.pi / 6, 0.578)
    c_val = s.params["c"]
    c("c recomputed", abs(c_val - 0.0410512) <= 1e-6, c_val)
    v = stability.disk_plus_annulus_stable(1.0, 0.578, 0.0410512, 0.4)
    c("declared stable", v.stable == "yes", v.stable)
    c("margin 0.045 +- 0.005", abs(v.margin - 0.045) <= 0.005, v.margin)


def criterion_7(c):
    allowed = {"disk", "disk_complement", "vertical_annulus"}
    for r in (0.3, 0.4, 0.5):
        prof, secs = torus_profile(r)
        grid_rows = [row for row in prof.rows if not row.refined]
        bad = sorted({row.winner for row in grid_rows} - allowed)
        c(f"r={r} winners", len(grid_rows) == 200 and not bad, bad)
        c(f"r={r} runtime<60s", secs < 60.0, f"{secs:.1f}s")


def criterion_8(c):
    prof, _ = torus_profile(0.77)
    kinds = {iso.base_kind(row.winner) for row in prof.rows}
    c("(1,0.77) single kind", kinds == {"disk"}, sorted(kinds))
    prof, _ = torus_profile(0.9)
    seq = iso.winner_sequence(prof, upto=prof.beta / 2)
    want = ["disk", "symmetric_annulus", "nonsymmetric_annulus", "disk"]
    c("(1,0.9) sequence", seq == want, seq)
    n = len(iso.transitions(prof))
    c("(1,0.9) transitions>=3", n >= 3, n)


def _nonsymmetric_parameter(s, A, P):
    """``p`` of the nonsymmetric annulus with area ``A`` and perimeter closest to ``P``."""
    beta = s.total_area()

    def measure(p):
        q = abs(stability.partner_parallel(s, -p))
        return beta - 2 * math.pi * (s.F(p) + s.F(q)), 2 * math.pi * (s.f(p) + s.f(q))

    cp = s.critical_points()
    ps = np.linspace(cp.t_stable, cp.t_c, 400, endpoint=False)
    vals = [measure(p)[0] - A for p in ps]
    roots = [optimize.brentq(lambda p: measure(p)[0] - A, p0, p1, xtol=1e-15)
             for p0, p1, v0, v1 in zip(ps, ps[1:], vals, vals[1:]) if v0 * v1 <= 0]
    return min(roots, key=lambda p: abs(measure(p)[1] - P)), measure


def criterion_9(c):
    s = sphere_hyperbolic()
    prof = example_profile()
    rows = [row for row in prof.rows if row.winner == "nonsymmetric_annulus"]
    c("winning nonsymmetric annulus", bool(rows), len(rows))
    if not rows:
        return
    row = rows[len(rows) // 2]
    p, measure = _nonsymmetric_parameter(s, row.area, row.winner_perimeter)
    A, P = measure(p)
    c("annulus matches profile", rel(P, row.winner_perimeter) <= 1e-6, P)
    a, ts = s.params["a"], s.params["t_star"]
    for frac in (0.25, 0.5, 0.9):
        rg, cu = iso.rotated_cap_region(s, p, frac * a * (ts - p))
        tag = f"tilt {frac:g}"
        c(f"{tag} is unduloid+circle", rg.kind == "unduloid_circle_annulus"
          and np.ptp(cu.trajectory.t) > 1e-3)
        c(f"{tag} closes", cu.closure_residual <= 1e-8, cu.closure_residual)
        c(f"{tag} area", rel(rg.area, A) <= 1e-6, rel(rg.area, A))
        c(f"{tag} perimeter", rel(rg.perimeter, P) <= 1e-6, rel(rg.perimeter, P))


def criterion_10(c):
    s = torus()
    drift = 0.0
    for t, sig, h in [(0.1, 0.3, 1.0), (-0.8, 2.0, -0.5), (1.1, 4.5, 2.2), (0.6, 1.57, -1.0)]:
        tr = integrate_arclength(s, CurveState(0.0, t, sig), h, 10.0, 1e-11)
        drift = max(drift, float(np.ptp(tr.first_integral_values())))
    c("first integral", drift <= 1e-9, drift)
    surfaces = [torus(1.0, r) for r in (0.3, 0.4, 0.9)] + [sphere_hyperbolic()]
    anti = max(abs(x.h(t) + x.h(-t)) for x in surfaces for t in np.linspace(0, x.t0, 101))
    c("h antisymmetry", anti <= 1e-12, anti)
    ok = True
    for x in surfaces:
        ts = np.linspace(0.0, x.t0, 513)
        dK = np.diff([x.K(t) for t in ts])
        dD = np.diff([x.D(t) for t in ts])
        flat = np.abs(dK) <= 1e-12
        ok &= bool(np.all(dK[~flat] * dD[~flat] > 0) and np.all(np.abs(dD[flat]) <= 1e-10))
    c("D/K co-monotone", ok)
    worst = 0.0
    for prof in (torus_profile(0.4)[0], torus_profile(0.9)[0], example_profile()):
        for row in prof.rows:
            best = iso._evaluate(prof.families, prof.beta - row.area)[2]
            worst = max(worst, rel(best, row.winner_perimeter))
    c("complement duality", worst <= 1e-9, worst)
    for x in (torus(), sphere_hyperbolic()):
        tab, _ = iso.disk_family(x, 160)
        small = tab.area <= 0.01 * x.total_area()
        A, P = tab.area[small], tab.perimeter[small]
        M = np.column_stack([A**2, A**3])
        c2 = float(np.linalg.lstsq(M, P**2 - 4 * math.pi * A, rcond=None)[0][0])
        c(f"small disks on {x.name}", len(A) >= 8 and rel(c2, -x.K(0.0)) <= 0.02, c2)


CRITERIA = {n: globals()[f"criterion_{n}"] for n in TITLES}


def evaluate(n):
    checks = Checks()
    t0 = time.perf_counter()
    try:
        CRITERIA[n](checks)
        ok, detail = checks.ok, checks.detail()
    except Exception as exc:  # report, do not hide
        ok, detail = False, f"error: {type(exc).__name__}: {exc}"
    RESULTS[n] = (ok, detail, time.perf_counter() - t0)
    line = format_line(n)
    print(line)
    return ok, detail


def format_line(n):
    ok, detail, secs = RESULTS[n]
    return f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {TITLES[n]}  ({detail}; {secs:.1f}s)"


def summary_lines():
    return [format_line(n) for n in sorted(RESULTS)]


@pytest.mark.parametrize("n", sorted(TITLES))
def test_criterion(n):
    ok, detail = evaluate(n)
    assert ok, detail


if __name__ == "__main__":
    results = [evaluate(n)[0] for n in sorted(TITLES)]
    sys.exit(0 if all(results) else 1)
