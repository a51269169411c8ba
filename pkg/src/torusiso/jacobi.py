"""Jacobi operator ``J(u) = u'' + (K + h^2) u`` along closed curves.

Eigenvalues follow the convention ``J(u) + lambda u = 0``, i.e. they are the
eigenvalues of ``-(u'' + q u)`` with ``q = K + h^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg, sparse
from scipy.interpolate import PchipInterpolator
from scipy.sparse.linalg import ArpackError, eigsh

from .closed import ClosedCurve
from .surface import SurfaceProfile

BCS = ("periodic", "neumann", "dirichlet")
DEGENERACY_TOL = 1e-6


class SpectrumError(RuntimeError):
    pass


class MeanZeroViolation(ValueError):
    pass


@dataclass(frozen=True)
class PotentialProfile:
    """``q = K + h^2`` on a uniform arc-length grid.

    ``closed`` grids hold ``n`` nodes on ``[0, L)``; open pieces hold ``n + 1``
    nodes on ``[0, L]``.  ``sampler`` evaluates ``q`` at arbitrary arc length
    so the grid can be refined.
    """

    nodes: np.ndarray
    q: np.ndarray
    total_length: float
    closed: bool = True
    sampler: Optional[Callable] = field(default=None, repr=False, compare=False)
    killing: Optional[Callable] = field(default=None, repr=False, compare=False)

    @property
    def grid(self) -> int:
        return len(self.nodes) if self.closed else len(self.nodes) - 1

    @property
    def ds(self) -> float:
        return self.total_length / self.grid

    def resample(self, n: int) -> "PotentialProfile":
        L = self.total_length
        s = np.arange(n) * (L / n) if self.closed else np.linspace(0.0, L, n + 1)
        if self.sampler is not None:
            q = np.asarray(self.sampler(s), float)
        else:
            xs, ys = self.nodes, self.q
            if self.closed:
                xs, ys = np.append(xs, L), np.append(ys, ys[0])
            q = PchipInterpolator(xs, ys)(s)
        return PotentialProfile(s, q, L, self.closed, self.sampler, self.killing)

    def piece(self, s0: float, s1: float, n: int) -> "PotentialProfile":
        """Open sub-arc ``[s0, s1]`` with ``n`` intervals."""
        if self.sampler is None:
            raise ValueError("piece extraction needs a sampler")
        base = self.sampler
        sub = lambda s: base(np.asarray(s) + s0)
        s = np.linspace(0.0, s1 - s0, n + 1)
        return PotentialProfile(s, np.asarray(sub(s), float), s1 - s0, False, sub)


@dataclass(frozen=True)
class SpectrumResult:
    bc: str
    eigenvalues: np.ndarray
    grid_size: int
    refined: bool

    def __getitem__(self, i):
        return self.eigenvalues[i]

    def distinct(self, tol: float = DEGENERACY_TOL):
        """Group eigenvalues into ``(value, multiplicity)`` clusters."""
        out = []
        for lam in self.eigenvalues:
            if out and abs(lam - out[-1][0]) <= tol * max(1.0, abs(lam)):
                v, m = out[-1]
                out[-1] = ((v * m + lam) / (m + 1), m + 1)
            else:
                out.append((float(lam), 1))
        return out


def potential_along(s: SurfaceProfile, c: ClosedCurve, grid: int = 2048) -> PotentialProfile:
    """Sample ``q = K(t(s)) + h^2`` along the closed curve ``c``."""
    tr = c.trajectory
    h2 = c.h**2
    L = c.length
    if tr.mode != "arclength":
        raise ValueError("closed curves carry arc-length trajectories")

    def sampler(sv):
        sv = np.mod(np.atleast_1d(np.asarray(sv, float)), L) if c.length > 0 else sv
        # the end point of an open piece may land exactly on L
        sv = np.where(np.isclose(sv, L, rtol=0, atol=1e-13 * L), L, sv)
        return np.array([s.K(float(tr.at(x)[1])) + h2 for x in sv])

    def killing(sv):
        # normal component of the rotation field d/dtheta
        out = []
        for x in np.mod(np.atleast_1d(np.asarray(sv, float)), L):
            _, t, sig, _, _ = tr.at(x)
            out.append(s.f(float(t)) * math.cos(sig))
        return np.array(out)

    nodes = np.arange(grid) * (L / grid)
    return PotentialProfile(nodes, sampler(nodes), L, True, sampler, killing)


# -- discretizations -------------------------------------------------------------

def _tridiagonal(p: PotentialProfile, bc: str):
    ds2 = p.ds**2
    q = p.q
    if bc == "dirichlet":
        d = 2.0 / ds2 - q[1:-1]
        e = np.full(len(d) - 1, -1.0 / ds2)
    else:
        d = 2.0 / ds2 - q
        e = np.full(len(d) - 1, -1.0 / ds2)
        # ghost-node reflection, symmetrized
        e[0] = e[-1] = -math.sqrt(2.0) / ds2
    return d, e


def _periodic_matrix(p: PotentialProfile):
    n = len(p.q)
    ds2 = p.ds**2
    off = np.full(n, -1.0 / ds2)
    A = sparse.diags([off[:-1], 2.0 / ds2 - p.q, off[:-1]], [-1, 0, 1], format="lil")
    A[0, n - 1] = A[n - 1, 0] = -1.0 / ds2
    return A.tocsc()


def _raw_spectrum(p: PotentialProfile, bc: str, n_eigs: int, vectors: bool = False):
    if bc == "periodic":
        if not p.closed:
            raise ValueError("periodic conditions need a closed grid")
        A = _periodic_matrix(p)
        v0 = np.random.default_rng(0).standard_normal(A.shape[0])
        try:
            w, v = eigsh(A, k=n_eigs, sigma=-float(np.max(p.q)) - 1.0, which="LM", v0=v0)
        except ArpackError as exc:
            raise SpectrumError(f"periodic eigensolve failed at grid {p.grid}: {exc}") from exc
        order = np.argsort(w)
        return (w[order], v[:, order]) if vectors else w[order]
    if p.closed:
        raise ValueError(f"{bc} conditions need an open piece")
    d, e = _tridiagonal(p, bc)
    try:
        res = linalg.eigh_tridiagonal(d, e, eigvals_only=not vectors, select="i",
                                      select_range=(0, n_eigs - 1))
    except linalg.LinAlgError as exc:
        raise SpectrumError(f"{bc} eigensolve failed at grid {p.grid}: {exc}") from exc
    if not vectors:
        return res
    w, v = res
    if bc == "neumann":
        v = v.copy()
        v[0] *= math.sqrt(2.0)
        v[-1] *= math.sqrt(2.0)
    else:
        v = np.vstack([np.zeros(v.shape[1]), v, np.zeros(v.shape[1])])
    return w, v


def spectrum(p: PotentialProfile, bc: str = "periodic", n_eigs: int = 6, grid: int = 2048,
             refine: bool = True) -> SpectrumResult:
    """Lowest eigenvalues of ``-(u'' + q u)``.

    Second-order differences on ``grid`` intervals; with ``refine`` one
    Richardson step against the ``2 * grid`` solve.
    """
    if bc not in BCS:
        raise ValueError(f"unknown boundary condition {bc!r}")
    if grid < 64 or n_eigs > grid // 4:
        raise ValueError("need grid >= 64 and n_eigs <= grid/4")
    lam = _raw_spectrum(p.resample(grid), bc, n_eigs)
    if refine:
        fine = _raw_spectrum(p.resample(2 * grid), bc, n_eigs)
        lam = (4.0 * fine - lam) / 3.0
        lam.sort()
    return SpectrumResult(bc, np.asarray(lam), grid, refine)


def first_mode(p: PotentialProfile, bc: str = "periodic", grid: Optional[int] = None):
    """``(lambda_1, phi_1)`` with ``phi_1 > 0`` sampled on the (resampled) grid."""
    g = p.resample(grid) if grid else p
    w, v = _raw_spectrum(g, bc, 1, vectors=True)
    phi = v[:, 0]
    phi = phi * math.copysign(1.0, phi[np.argmax(np.abs(phi))])
    return float(w[0]), phi, g


def piece_bounds(c: ClosedCurve):
    """Arc-length interval of the fundamental piece: first maximum to next minimum."""
    tr = c.trajectory
    mins = tr.events_of("t-min")
    if not mins:
        raise ValueError("no t-minimum event on the curve; cannot extract a fundamental piece")
    return 0.0, float(mins[0].x)


def fundamental_piece_spectra(p: PotentialProfile, c: ClosedCurve, n_eigs: int = 4,
                              grid: int = 2048, refine: bool = True):
    """Neumann and Dirichlet spectra on the fundamental piece of an unduloid."""
    if c.kind != "unduloid":
        raise ValueError(f"fundamental pieces are defined for unduloids, not {c.kind}")
    s0, s1 = piece_bounds(c)
    n = max(64, int(round(grid * (s1 - s0) / c.length)))
    piece = p.piece(s0, s1, n)
    return (spectrum(piece, "neumann", n_eigs, n, refine),
            spectrum(piece, "dirichlet", n_eigs, n, refine))


# -- index form ------------------------------------------------------------------

def _weights(p: PotentialProfile) -> np.ndarray:
    w = np.full(len(p.nodes), p.ds)
    if not p.closed:
        w[0] = w[-1] = 0.5 * p.ds
    return w


def _form_parts(p: PotentialProfile, u):
    u = np.asarray(u, float)
    if u.shape != p.q.shape:
        raise ValueError("u must be sampled on the potential's grid")
    du = np.diff(np.append(u, u[0])) if p.closed else np.diff(u)
    w = _weights(p)
    grad = float(np.sum(du**2) / p.ds)
    pot = float(np.sum(w * p.q * u**2))
    return grad - pot, float(np.sum(w * u)), float(np.sum(w * u**2)), p.total_length


def index_form(p: PotentialProfile, u, require_mean_zero: bool = True) -> float:
    """``I(u) = int (u'^2 - q u^2) ds`` on one curve."""
    return index_form_union([(p, u)], require_mean_zero)


def index_form_union(parts: Sequence, require_mean_zero: bool = True) -> float:
    """Index form of a test function defined piecewise on several boundary curves."""
    total = mean = norm2 = length = 0.0
    for p, u in parts:
        I, m, n2, L = _form_parts(p, u)
        total += I
        mean += m
        norm2 += n2
        length += L
    if require_mean_zero and abs(mean) > 1e-8 * math.sqrt(norm2 * length):
        raise MeanZeroViolation(f"test function has mean {mean:.3g}, not zero")
    return total


def _constrained_min(profiles, grid, project_rotation):
    blocks, w, rot = [], [], []
    for p in profiles:
        g = p.resample(grid)
        blocks.append(_periodic_matrix(g).toarray())
        w.append(np.full(grid, g.ds))
        k = p.killing(g.nodes) if (project_rotation and p.killing is not None) else np.zeros(grid)
        rot.append(k)
    A = linalg.block_diag(*blocks)
    z = np.sqrt(np.concatenate(w))
    cols = [z]
    u = z * np.concatenate(rot)
    if np.linalg.norm(u) > 1e-10 * np.linalg.norm(z):
        cols.append(u)
    # orthonormal basis of the complement of the excluded directions
    Q, _ = np.linalg.qr(np.column_stack(cols), mode="complete")
    Q = Q[:, len(cols):]
    return float(linalg.eigvalsh(Q.T @ A @ Q, subset_by_index=(0, 0))[0])


def constrained_min_eigenvalue(profiles: Sequence[PotentialProfile], grid: int = 256,
                               project_rotation: bool = True, refine: bool = True) -> float:
    """Minimum of ``I(u) / int u^2`` over mean-zero ``u`` on a union of closed curves.

    The rotation Jacobi field ``f cos(sigma)`` always has ``I = 0``; it is
    projected out so the sign of the result decides stability without
    competing against its discretization error.  A union of boundary curves is
    stable exactly when this value is ``>= 0``.
    """
    mu = _constrained_min(profiles, grid, project_rotation)
    if refine:
        mu = (4.0 * _constrained_min(profiles, 2 * grid, project_rotation) - mu) / 3.0
    return mu
