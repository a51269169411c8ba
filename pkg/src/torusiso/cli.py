"""Command line entry point: ``torusiso <command> CONFIG``."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import traceback
from pathlib import Path

import numpy as np

from . import closed, isoperimetric, jacobi, plotting, stability
from .config import ConfigError, RunConfig, load_config
from .curves import CurveState, InsufficientArc, classify_curve, integrate_arclength, integrate_graph
from .stability import MalformedRegion, NoPartner
from .surface import SurfaceError

log = logging.getLogger("torusiso")

COMMANDS = ("analyze", "curves", "branch", "stability", "profile")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class NumericalFailure(RuntimeError):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    log.info("wrote %s", path)
    return path


# -- commands ----------------------------------------------------------------------

def cmd_analyze(cfg: RunConfig, args) -> list:
    s = cfg.build_surface()
    cp = s.critical_points()
    beta = s.total_area()
    out = cfg.output_dir
    summary = [("surface", s.name), ("t0", cp.t0), ("t_c", cp.t_c), ("t_tilde", cp.t_tilde),
               ("t_stable", cp.t_stable), ("beta", beta)]
    for k, v in summary:
        print(f"{k:9s} = {v:.10g}" if isinstance(v, float) else f"{k:9s} = {v}")
    n = int(cfg.section("analyze").get("samples", 401))
    ts = np.linspace(-s.t0, s.t0, n)
    table = [(t, s.f(t), s.fp(t), s.K(t), s.h(t), s.D(t), s.L(t)) for t in ts]
    files = [write_csv(out / "analyze_summary.csv", ["quantity", "value"], summary),
             write_csv(out / "analyze.csv", ["t", "f", "fp", "K", "h", "D", "L"], table)]
    if "svg" in cfg.formats:
        files.append(plotting.render_columns(out / "analyze.csv", "t", ["K", "h", "D"],
                                             out / "analyze.svg"))
    return files


def cmd_curves(cfg: RunConfig, args) -> list:
    s = cfg.build_surface()
    reqs = cfg.section("curves").get("requests", [])
    if not reqs:
        raise ConfigError("[curves] needs a non-empty 'requests' list")
    out = cfg.output_dir
    files, summary = [], []
    for i, rq in enumerate(reqs, 1):
        try:
            T, h = float(rq["T"]), float(rq["h"])
        except KeyError as exc:
            raise ConfigError(f"curves.requests[{i - 1}] needs key {exc.args[0]!r}") from exc
        mode = rq.get("mode", "arclength")
        n = int(rq.get("samples", 513))
        if mode == "graph":
            tr = integrate_graph(s, T, h, float(rq.get("theta_end", 2 * math.pi)), cfg.tolerances.ode_tol)
        elif mode == "arclength":
            init = CurveState(float(rq.get("theta0", 0.0)), T, float(rq.get("sigma0", math.pi / 2)))
            tr = integrate_arclength(s, init, h, float(rq.get("s_max", 2 * s.L(T))),
                                     cfg.tolerances.ode_tol)
        else:
            raise ConfigError(f"curves.requests[{i - 1}].mode must be arclength or graph")
        xs = np.linspace(tr.x[0], tr.x[-1], n)
        rows = [(x, *tr.at(x)) for x in xs]
        files.append(write_csv(out / f"curve_{i:02d}.csv",
                               ["x", "theta", "t", "sigma", "s", "area"], rows))
        try:
            kind = classify_curve(tr).kind
        except InsufficientArc:
            kind = "undetermined"
        fi = tr.first_integral_values()
        summary.append((i, mode, T, h, kind, float(np.ptp(fi)), len(tr.events)))
    files.append(write_csv(out / "curves_summary.csv",
                           ["index", "mode", "T", "h", "class", "first_integral_drift", "events"],
                           summary))
    if "svg" in cfg.formats:
        files.append(plotting.render_curves([f for f in files if f.stem.startswith("curve_")],
                                            out / "curves.svg"))
    return files


def _branch_validation(s, tol):
    tay = closed.analytic_taylor(s)
    fd_path = closed.analytic_taylor(s, closed_form=False)
    H = closed.fd_hessian(s, tay.t_tilde, tay.h_tilde, tol=tol)
    sttt = closed.fd_sigma_TTT(s, tay.t_tilde, tay.h_tilde, tol=tol)
    bfd = closed.branch_fd_derivatives(s, tol=tol)
    rows = [
        ("sigma_TT", tay.sigma_TT_pi, H[0, 0]),
        ("sigma_Th", tay.sigma_Th_pi, H[0, 1]),
        ("sigma_hh", tay.sigma_hh_pi, H[1, 1]),
        ("sigma_TTT", tay.sigma_TTT_pi, sttt),
        ("condition_value", tay.condition_value, fd_path.condition_value),
        ("h_o_second", tay.h_o_second, bfd["h_o_second"]),
        ("area_second", closed.area_second_derivative(s, tay), bfd["area_second"]),
        ("area_prime", 0.0, bfd["area_prime"]),
    ]
    if s.params.get("family") == "standard":
        a, r = s.params["a"], s.params["r"]
        rows += [
            ("condition_value_closed_form", (5 * a * a + 9 * r * r) / r**4, tay.condition_value),
            ("h_o_second_closed_form", (9 * r * r + 5 * a * a) / (12 * a**3 * r * r),
             bfd["h_o_second"]),
            ("area_second_closed_form", (a * a - 9 * r * r) * math.pi / (6 * r * r),
             bfd["area_second"]),
        ]
    out = []
    for name, ref, num in rows:
        err = abs(num - ref) / abs(ref) if ref else abs(num - ref)
        out.append((name, ref, num, err))
    return tay, out


def cmd_branch(cfg: RunConfig, args) -> list:
    s = cfg.build_surface()
    opts = cfg.section("branch")
    tol = cfg.tolerances.root_tol
    cp = s.critical_points()
    tt = cp.t_tilde
    if tt is None:
        raise NumericalFailure("closed: no bifurcation parallel (D never equals 1)")
    lo, hi = opts.get("T_range", [tt - 0.1, tt + 0.1])
    br = closed.trace_unduloid_branch(s, (float(lo), float(hi)), opts.get("step"), tol)
    out = cfg.output_dir
    rows = [(x.T, x.h, x.period, x.length, x.area, x.F_residual, x.closure_residual,
             x.first_integral_drift, x.t_min, x.t_max) for x in br.samples]
    files = [write_csv(out / "branch.csv",
                       ["T", "h_o", "period", "length", "area", "F_residual",
                        "closure_residual", "first_integral_drift", "t_min", "t_max"], rows)]
    print(f"branch: {len(rows)} samples on T in [{br.T.min():.6g}, {br.T.max():.6g}]")
    if opts.get("validate", True):
        tay, val = _branch_validation(s, tol)
        print("validation (reference, finite difference, relative error):")
        for name, ref, num, err in val:
            print(f"  {name:28s} {ref: .10g}  {num: .10g}  {err:.2e}")
        files.append(write_csv(out / "branch_validation.csv",
                               ["quantity", "reference", "numerical", "relative_error"], val))
    if "svg" in cfg.formats:
        files.append(plotting.render_columns(out / "branch.csv", "T", ["h_o"],
                                             out / "branch.svg", ylabel="h"))
    return files


def _region_verdict(s, rg: dict, cfg):
    kind = rg.get("kind")
    extra = ""
    if kind == "parallel":
        v = stability.circle_stable(s, float(rg["t"]))
    elif kind == "symmetric_annulus":
        v = stability.symmetric_annulus_stable(s, float(rg["t"]))
    elif kind == "nonsymmetric_annulus":
        t2, v = stability.nonsymmetric_annulus_pair(s, float(rg["t"]))
        extra = fmt(t2)
    elif kind == "vertical_annuli":
        v = stability.vertical_annuli_stable(rg["widths"], rg.get("starts"))
    elif kind == "disk_plus_annulus":
        p = s.params
        v = stability.disk_plus_annulus_stable(float(rg.get("a", p.get("a"))), float(rg.get("b", p.get("b"))),
                                               float(rg.get("c", p.get("c"))), float(rg["h"]))
    elif kind == "unduloid":
        T = float(rg["T"])
        br = closed.trace_unduloid_branch(s, (s.critical_points().t_tilde, T + 0.01), None,
                                          cfg.tolerances.root_tol)
        v = stability.unduloid_region_stable(s, br, T)
        extra = fmt(br.h_at(T))
    elif kind == "disk":
        c = closed.find_symmetric_nodoid(s, float(rg["T"]), cfg.tolerances.ode_tol)
        v = stability.classify_region(s, stability.CandidateRegion("disk", (c,)))
        extra = fmt(c.h)
    else:
        raise ConfigError(f"unknown stability region kind {kind!r}")
    params = ";".join(f"{k}={v2}" for k, v2 in sorted(rg.items()) if k != "kind")
    return (kind, params, v.stable, v.margin, v.criterion, extra)


def cmd_stability(cfg: RunConfig, args) -> list:
    s = cfg.build_surface()
    regions = cfg.section("stability").get("regions", [])
    if not regions:
        raise ConfigError("[stability] needs a non-empty 'regions' list")
    rows = []
    for rg in regions:
        try:
            rows.append(_region_verdict(s, rg, cfg))
        except KeyError as exc:
            raise ConfigError(f"stability region {rg!r} needs key {exc.args[0]!r}") from exc
        except (NoPartner, SurfaceError, InsufficientArc, jacobi.MeanZeroViolation):
            raise
        except (MalformedRegion, ValueError, TypeError) as exc:
            raise ConfigError(f"stability region {rg!r}: {exc}") from exc
    for r in rows:
        print(f"{r[0]:22s} {r[1]:28s} {r[2]:14s} margin={fmt(r[3])}")
    return [write_csv(cfg.output_dir / "stability.csv",
                      ["kind", "parameters", "stable", "margin", "criterion", "derived"], rows)]


def cmd_profile(cfg: RunConfig, args) -> list:
    out = cfg.output_dir
    prof_csv, tr_csv = out / "profile.csv", out / "transitions.csv"
    if args.render_only:
        return [plotting.render_profile(prof_csv, tr_csv, out / "profile.svg")]
    s = cfg.build_surface()
    opts = cfg.section("profile")
    grids = isoperimetric.FamilyGrids(
        disk=int(opts.get("disk_samples", 160)), annulus=int(opts.get("annulus_samples", 160)),
        ode_tol=cfg.tolerances.ode_tol)
    include = tuple(opts.get("families", isoperimetric.BASE_KINDS))
    bad = set(include) - set(isoperimetric.BASE_KINDS)
    if bad:
        raise ConfigError(f"unknown profile families: {sorted(bad)}")
    fams = isoperimetric.enumerate_families(s, grids, include)
    prof = isoperimetric.profile(s, int(opts.get("n_areas", 200)), fams)
    kinds = prof.kinds
    rows = [(r.area, *[r.perimeters[k] for k in kinds], r.winner, r.winner_perimeter,
             "|".join(r.near_ties), r.refined) for r in prof.rows]
    files = [write_csv(prof_csv, ["area", *kinds, "winner", "winner_perimeter", "near_ties",
                                  "refined"], rows)]
    trs = isoperimetric.transitions(prof)
    tr_rows = [(A, a, b, isoperimetric._evaluate(prof.families, A)[2]) for A, a, b in trs]
    files.append(write_csv(tr_csv, ["area", "from_kind", "to_kind", "perimeter"], tr_rows))
    print("winners:", " -> ".join(isoperimetric.winner_sequence(prof)))
    for A, a, b, P in tr_rows:
        print(f"  transition at area {A:.8g}: {a} -> {b} (perimeter {P:.8g})")
    if "svg" in cfg.formats:
        files.append(plotting.render_profile(prof_csv, tr_csv, out / "profile.svg"))
    return files


HANDLERS = {"analyze": cmd_analyze, "curves": cmd_curves, "branch": cmd_branch,
            "stability": cmd_stability, "profile": cmd_profile}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="torusiso",
                                description="Isoperimetric regions on tori of revolution.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("config", help="TOML run configuration")
    p.add_argument("-o", "--output", help="output directory (overrides config and environment)")
    p.add_argument("--formats", help="comma separated subset of csv,svg")
    p.add_argument("--render-only", action="store_true",
                   help="profile: re-render the SVG from existing CSV files")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _location(exc) -> str:
    frames = [f for f in traceback.extract_tb(exc.__traceback__) if "torusiso" in f.filename]
    if not frames:
        return "?"
    f = frames[-1]
    return f"{Path(f.filename).stem}.{f.name}:{f.lineno}"


def run(command: str, config_path, output=None, formats=None, render_only=False) -> int:
    args = argparse.Namespace(render_only=render_only)
    try:
        cfg = load_config(config_path)
        if output:
            cfg.output_dir = Path(output)
        if formats:
            cfg.formats = tuple(f.strip() for f in formats.split(",") if f.strip())
            if set(cfg.formats) - {"csv", "svg"}:
                raise ConfigError(f"unsupported formats {cfg.formats}")
        HANDLERS[command](cfg, args)
    except (ConfigError, MalformedRegion) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ArithmeticError, SurfaceError, NoPartner, closed.NoClosedCurve,
            InsufficientArc, jacobi.MeanZeroViolation, np.linalg.LinAlgError) as exc:
        print(f"numerical failure in {_location(exc)}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(ns.command, ns.config, ns.output, ns.formats, ns.render_only)


if __name__ == "__main__":
    sys.exit(main())
