"""Run configuration loaded from a TOML file.

Schema (all tables optional except ``[surface]``)::

    [surface]
    kind = "standard"            # standard | sphere_hyperbolic | custom
    a = 1.0
    r = 0.4                      # standard
    # t_star = 0.5235987755982988, b = 0.578    (sphere_hyperbolic)
    # pieces = [[0.0, 1.0, "2 + cos(t)"], ...]  (custom, upper half t >= 0)

    [tolerances]
    ode_tol = 1e-10              # integrator rtol/atol
    root_tol = 1e-12             # integrator tolerance inside period-map root solves
    eig_grid = 2048              # Jacobi spectrum grid (intervals)

    [output]
    directory = "out"            # overridden by $TORUSISO_OUTPUT
    formats = ["csv", "svg"]

    [curves]                     # one entry per trajectory
    requests = [{T = 0.3, h = 3.16, s_max = 12.0}]

    [branch]
    T_range = [0.55, 0.75]       # default: t_tilde +- 0.1
    validate = true

    [stability]
    regions = [{kind = "parallel", t = 0.0},
               {kind = "nonsymmetric_annulus", t = -0.7}]

    [profile]
    n_areas = 200
    disk_samples = 160
    annulus_samples = 160
    families = ["disk", "vertical_annulus", ...]
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .surface import (
    SphereHyperbolicParams,
    StandardTorusParams,
    SurfaceError,
    SurfaceProfile,
    build_custom,
    build_sphere_hyperbolic,
    build_standard_torus,
)

OUTPUT_ENV = "TORUSISO_OUTPUT"
FORMATS = ("csv", "svg")


class ConfigError(ValueError):
    pass


@dataclass
class Tolerances:
    ode_tol: float = 1e-10
    root_tol: float = 1e-12
    eig_grid: int = 2048

    def __post_init__(self):
        for name in ("ode_tol", "root_tol", "eig_grid"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                raise ConfigError(f"tolerances.{name} must be positive, got {v!r}")
        if int(self.eig_grid) != self.eig_grid or self.eig_grid < 64:
            raise ConfigError("tolerances.eig_grid must be an integer >= 64")
        self.eig_grid = int(self.eig_grid)


@dataclass
class RunConfig:
    surface: dict
    tolerances: Tolerances = field(default_factory=Tolerances)
    output_dir: Path = Path("out")
    formats: tuple = FORMATS
    sections: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})

    def build_surface(self) -> SurfaceProfile:
        return build_surface(self.surface)


def build_surface(table: dict) -> SurfaceProfile:
    kind = table.get("kind")
    try:
        if kind == "standard":
            return build_standard_torus(StandardTorusParams(float(table["a"]), float(table["r"])))
        if kind == "sphere_hyperbolic":
            t_star = table.get("t_star", math.pi / 6)
            return build_sphere_hyperbolic(
                SphereHyperbolicParams(float(table["a"]), float(t_star), float(table["b"])))
        if kind == "custom":
            pieces = [(float(lo), float(hi), str(expr)) for lo, hi, expr in table["pieces"]]
            return build_custom(pieces, table.get("name", "custom"))
    except KeyError as exc:
        raise ConfigError(f"surface: missing key {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"surface: {exc}") from exc
    raise ConfigError(f"surface.kind must be standard, sphere_hyperbolic or custom, got {kind!r}")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> RunConfig:
    if "surface" not in raw or not isinstance(raw["surface"], dict):
        raise ConfigError("missing [surface] table")
    tol = raw.get("tolerances", {})
    unknown = set(tol) - {"ode_tol", "root_tol", "eig_grid"}
    if unknown:
        raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
    tolerances = Tolerances(**tol)
    out = raw.get("output", {})
    directory = os.environ.get(OUTPUT_ENV) or out.get("directory", "out")
    formats = tuple(out.get("formats", FORMATS))
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise ConfigError(f"unsupported output formats: {bad}")
    cfg = RunConfig(dict(raw["surface"]), tolerances, Path(directory), formats,
                    {k: v for k, v in raw.items() if k not in ("surface", "tolerances", "output")})
    try:
        cfg.build_surface()
    except SurfaceError as exc:
        raise ConfigError(f"surface: {exc}") from exc
    return cfg
