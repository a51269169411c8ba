"""SVG figures rendered from the CSV tables the CLI writes."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "torusiso"
plt.rcParams["svg.fonttype"] = "none"

NON_FAMILY = {"area", "winner", "winner_perimeter", "near_ties", "refined"}


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _num(x):
    return float(x) if x not in ("", None) else math.nan


def _save(fig, out):
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_profile(profile_csv, transitions_csv, out_svg) -> Path:
    """One polyline per family column, dots at the transitions."""
    rows = _read(profile_csv)
    kinds = [k for k in rows[0] if k not in NON_FAMILY] if rows else []
    area = [_num(r["area"]) for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for k in kinds:
        ax.plot(area, [_num(r[k]) for r in rows], lw=1.2, label=k.replace("_", " "))
    ax.plot(area, [_num(r["winner_perimeter"]) for r in rows], "k--", lw=0.8, label="minimum")
    if transitions_csv and Path(transitions_csv).exists():
        tr = _read(transitions_csv)
        ax.plot([_num(r["area"]) for r in tr], [_num(r["perimeter"]) for r in tr], "ko", ms=4)
    ax.set_xlabel("area")
    ax.set_ylabel("perimeter")
    ax.legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    _save(fig, out_svg)
    return Path(out_svg)


def render_columns(table_csv, x: str, ys, out_svg, xlabel=None, ylabel=None) -> Path:
    """Line plot of columns ``ys`` against ``x`` from a CSV table."""
    rows = _read(table_csv)
    xs = [_num(r[x]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    for y in ys:
        ax.plot(xs, [_num(r[y]) for r in rows], lw=1.2, label=y)
    ax.axhline(0.0, color="0.6", lw=0.6)
    ax.set_xlabel(xlabel or x)
    if ylabel:
        ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out_svg)
    return Path(out_svg)


def render_curves(paths, out_svg) -> Path:
    """Trajectories in the ``(theta, t)`` chart, one per CSV."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for p in paths:
        rows = _read(p)
        ax.plot([_num(r["theta"]) for r in rows], [_num(r["t"]) for r in rows], lw=1.0,
                label=Path(p).stem)
    ax.set_xlabel("theta")
    ax.set_ylabel("t")
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, out_svg)
    return Path(out_svg)
