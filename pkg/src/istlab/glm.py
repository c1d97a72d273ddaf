"""Inverse scattering for the Schrodinger problem.

Pipeline: assemble the Marchenko kernel

    F(z) = (1/2pi) int rho(k) e^{ikz} dk + sum_j C_j e^{-kappa_j z},

solve ``K(x,y) + F(x+y) + int_x^inf K(x,s) F(s+y) ds = 0`` for every ``x`` by
Nystrom discretisation, and recover ``u(x) = 2 d/dx K(x,x)``. (With this sign convention for ``F`` and
``psi'' + (u + k^2) psi = 0``, positive wells give bound states; the factor
``-2`` sometimes quoted belongs to the ``-psi'' + u psi`` convention.)

Numerics
--------
For a fixed ``x`` write ``y = x + eta``, ``s = x + sigma``. The bound-state
part of ``F(2x + eta + sigma)`` is separable, ``sum_j c_j g_j(eta) g_j(sigma)``
with ``c_j = C_j e^{-2 kappa_j x}`` and ``g_j = e^{-kappa_j eta}``. The
continuous part is discretised with the composite trapezoid rule (a Hankel
matrix), and the separable part is eliminated through an ``N x N``
capacitance system whose Gram entries ``int g_i g_j`` are integrated
exactly. Two things follow: rows at large negative ``x``, where ``c_j`` is
astronomically large, stay well conditioned; and reflectionless data are
inverted without quadrature error.

The unknown is truncated to ``eta in [0, z_max - 2x]`` where ``z_max`` is the
point beyond which the total kernel is below the tail tolerance; inside the
box the continuous samples past ``z_max`` are replaced by ``-F_d`` so the
total vanishes consistently there.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import linalg

from . import errors
from .fields import Grid1D, SampledField, atomic_write_text
from .schrodinger import SchrodingerScatteringData

__all__ = [
    "MarchenkoF",
    "KernelRow",
    "GlmKernel",
    "build_F",
    "solve_glm",
    "glm_kernel",
    "reconstruct_potential",
    "invert",
    "data_hash",
    "centered_derivative",
]

TAIL_TOL = 1e-10
MIN_QUADRATURE_N = 8


@dataclass(frozen=True)
class MarchenkoF:
    """Sampled Marchenko kernel on ``z = z0 + m*dz``.

    ``continuous`` holds the Fourier part; the bound-state part is kept in
    closed form through ``kappas`` and ``norming`` (already evolved to the
    target time).
    """

    z0: float
    dz: float
    continuous: np.ndarray
    kappas: np.ndarray
    norming: np.ndarray
    z_max: float
    tail: float
    meta: Mapping = field(default_factory=dict, compare=False)

    @property
    def z(self) -> np.ndarray:
        return self.z0 + self.dz * np.arange(self.continuous.size)

    def discrete(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        out = np.zeros_like(z)
        for kap, c in zip(self.kappas, self.norming):
            out = out + c * np.exp(-kap * z)
        return out

    @property
    def values(self) -> np.ndarray:
        return self.continuous + self.discrete(self.z)

    @property
    def quadrature_n(self) -> float:
        return 1.0 / self.dz


@dataclass(frozen=True)
class KernelRow:
    x: float
    eta: np.ndarray
    values: np.ndarray
    diag: float
    residual: float
    condition: float


@dataclass(frozen=True)
class GlmKernel:
    x_grid: Grid1D
    diag_values: np.ndarray
    full_rows: tuple | None = None
    meta: Mapping = field(default_factory=dict, compare=False)


def _trapezoid_weights(k):
    w = np.gradient(k) if k.size > 1 else np.ones(1)
    if k.size > 1:
        d = np.diff(k)
        w = np.empty_like(k)
        w[1:-1] = 0.5 * (d[1:] + d[:-1])
        w[0], w[-1] = 0.5 * d[0], 0.5 * d[-1]
    return w


def build_F(data: SchrodingerScatteringData, z_grid: Grid1D, tail_tol: float = TAIL_TOL) -> MarchenkoF:
    """Assemble ``F`` on ``z_grid``; the k-integral uses the trapezoid rule
    over ``data.k``.

    Raises :class:`~istlab.errors.TruncationError` when the total kernel is
    still above ``tail_tol`` at the right end of the grid.
    """
    where = "glm_inversion.build_F"
    z = z_grid.x
    fc = np.zeros(z.size)
    if data.k.size and np.any(data.rho != 0):
        w = _trapezoid_weights(data.k)
        wr = w * data.rho / (2 * np.pi)
        full = np.zeros(z.size, dtype=np.complex128)
        # blocks keep the phase matrix small
        for s in range(0, z.size, 512):
            zz = z[s:s + 512]
            full[s:s + 512] = np.exp(1j * np.outer(zz, data.k)) @ wr
        scale = max(1.0, float(np.max(np.abs(full))))
        imag = float(np.max(np.abs(full.imag)))
        if imag > 1e-8 * scale:
            raise errors.ConsistencyError(
                f"F is not real (max |Im F| = {imag:.2e}); rho is not conjugate-symmetric",
                where=where)
        fc = full.real
    fc.flags.writeable = False
    F = MarchenkoF(z0=z_grid.x_min, dz=z_grid.dx, continuous=fc,
                   kappas=np.array(data.kappas), norming=np.array(data.norming),
                   z_max=z_grid.x_max, tail=0.0)
    total = np.abs(F.values)
    above = np.flatnonzero(total >= tail_tol)
    if above.size and above[-1] == z.size - 1:
        raise errors.TruncationError(
            f"|F| = {total[-1]:.3e} at z = {z[-1]:.4g} exceeds tail tolerance {tail_tol:g}",
            where=where)
    cut = z[above[-1] + 1] if above.size else z[0]
    tail = float(total[above[-1] + 1:].max()) if above.size else float(total.max())
    # the resolution condition only matters where the continuous part is felt
    i_cut = min(int(round((cut - F.z0) / F.dz)), z.size - 1)
    if (data.k.size > 1 and data.dk * max(cut, 0.0) >= np.pi / 2
            and abs(fc[i_cut]) >= tail_tol):
        warnings.warn(
            f"dk*z_max = {data.dk * cut:.3f} >= pi/2: the k-quadrature may not resolve F",
            RuntimeWarning, stacklevel=2)
    meta = {"t": data.meta.get("t", 0.0), "tail_tol": tail_tol}
    return MarchenkoF(z0=F.z0, dz=F.dz, continuous=fc, kappas=F.kappas, norming=F.norming,
                      z_max=float(cut), tail=tail, meta=meta)


def _effective_continuous(F: MarchenkoF, start: int, count: int) -> np.ndarray:
    """Continuous samples from ``start``; past ``z_max`` they cancel ``F_d``."""
    idx = start + np.arange(count)
    z = F.z0 + F.dz * idx
    out = np.empty(count)
    inside = (idx < F.continuous.size) & (z <= F.z_max + 0.5 * F.dz)
    out[inside] = F.continuous[idx[inside]]
    out[~inside] = -F.discrete(z[~inside])
    return out


def solve_glm(F: MarchenkoF, x: float, keep_row: bool = True, rcond_min: float = 1e-12) -> KernelRow:
    """Solve the discretised Marchenko equation at one position ``x``.

    ``2x`` must fall on the z-grid of ``F``.
    """
    where = "glm_inversion.solve_glm"
    h = F.dz
    pos = (2 * x - F.z0) / h
    start = int(round(pos))
    if abs(pos - start) > 1e-6 or start < 0:
        raise ValueError(f"2x = {2 * x!r} is not a node of the F grid")
    span = max(F.z_max - 2 * x, 4 * h)
    m = int(math.ceil(span / h - 1e-9))
    eta = h * np.arange(m + 1)
    vals = _effective_continuous(F, start, 2 * m + 1)
    w = np.full(m + 1, h)
    w[0] = w[-1] = h / 2

    hank = linalg.hankel(vals[: m + 1], vals[m:])
    A = hank * w[None, :]
    A[np.diag_indices_from(A)] += 1.0
    anorm = np.abs(A).sum(axis=0).max()
    lu, piv = linalg.lu_factor(A, check_finite=False)
    rcond = linalg.lapack.dgecon(lu, anorm, norm="1")[0]
    if rcond < rcond_min:
        raise errors.IllConditionedError(
            f"I + F is numerically singular at x = {x} (condition ~ {1 / max(rcond, 1e-300):.2e})",
            where=where)

    kap = F.kappas
    N = kap.size
    g = np.exp(-np.outer(eta, kap))
    rhs = np.column_stack([vals[: m + 1], g])
    sol = linalg.lu_solve((lu, piv), rhs, check_finite=False)
    p, Q = sol[:, 0], sol[:, 1:]
    condition = 1.0 / rcond

    if N:
        c = F.norming * np.exp(-2 * kap * x)
        Y = eta[-1]
        ks = kap[:, None] + kap[None, :]
        gram = -np.expm1(-ks * Y) / ks + (g * w[:, None]).T @ (Q - g)
        r = 1.0 - (g * w[:, None]).T @ p
        big = c >= 1.0
        M = np.where(big[:, None], gram, c[:, None] * gram)
        M[np.diag_indices(N)] += np.where(big, 1.0 / np.where(big, c, 1.0), 1.0)
        rr = np.where(big, r, c * r)
        cond_small = np.linalg.cond(M)
        if not np.isfinite(cond_small) or cond_small > 1 / rcond_min:
            raise errors.IllConditionedError(
                f"bound-state capacitance system singular at x = {x} (cond {cond_small:.2e})",
                where=where)
        n = np.linalg.solve(M, rr)
        k = -p - Q @ n
        condition = max(condition, cond_small)
        res = k + vals[: m + 1] + (A - np.eye(m + 1)) @ k + g @ n
        scale = max(np.abs(vals).max(), float(np.max(np.abs(c * g[0]))), 1e-300)
    else:
        k = -p
        res = k + vals[: m + 1] + (A - np.eye(m + 1)) @ k
        scale = max(np.abs(vals).max(), 1e-300)
    residual = float(np.max(np.abs(res)) / scale)
    return KernelRow(x=float(x), eta=eta if keep_row else eta[:1],
                     values=k if keep_row else k[:1], diag=float(k[0]),
                     residual=residual, condition=float(condition))


def glm_kernel(F: MarchenkoF, x_grid: Grid1D, keep_rows: bool = False) -> GlmKernel:
    """Diagonal ``K(x, x)`` on ``x_grid`` from independent per-x solves."""
    rows = [solve_glm(F, x, keep_row=keep_rows) for x in x_grid.x]
    diag = np.array([r.diag for r in rows])
    diag.flags.writeable = False
    meta = dict(F.meta)
    meta.update(z_max=F.z_max, quadrature_n=F.quadrature_n,
                max_residual=max(r.residual for r in rows))
    return GlmKernel(x_grid=x_grid, diag_values=diag,
                     full_rows=tuple(rows) if keep_rows else None, meta=meta)


# sixth-order centred first-derivative stencil, with lower orders at the ends
_C6 = np.array([-1, 9, -45, 0, 45, -9, 1]) / 60.0
_C4 = np.array([1, -8, 0, 8, -1]) / 12.0


def centered_derivative(f, dx: float) -> np.ndarray:
    """First derivative by centred differences (6th order inside, tapering to a
    2nd-order one-sided formula at the two end nodes)."""
    f = np.asarray(f)
    n = f.size
    d = np.empty_like(f)
    if n >= 7:
        d[3:-3] = np.convolve(f, _C6[::-1], mode="valid")
    for i in (1, 2, n - 3, n - 2):
        if 2 <= i <= n - 3:
            d[i] = _C4 @ f[i - 2:i + 3]
        else:
            d[i] = 0.5 * (f[i + 1] - f[i - 1])
    d[0] = (-3 * f[0] + 4 * f[1] - f[2]) / 2
    d[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / 2
    return d / dx


def reconstruct_potential(kernel: GlmKernel) -> SampledField:
    """``u = 2 d/dx K(x, x)`` on the kernel's grid."""
    where = "glm_inversion.reconstruct_potential"
    diag = np.asarray(kernel.diag_values)
    if np.iscomplexobj(diag):
        bad = float(np.max(np.abs(diag.imag)))
        if bad > 1e-6:
            raise errors.ConsistencyError(f"K(x,x) has imaginary part {bad:.2e}", where=where)
        diag = diag.real
    u = 2.0 * centered_derivative(diag, kernel.x_grid.dx)
    return SampledField(kernel.x_grid, u, "real", dict(kernel.meta))


def data_hash(data: SchrodingerScatteringData) -> str:
    h = hashlib.sha256()
    for arr in (data.k, data.rho, data.kappas, data.norming):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


def invert(data: SchrodingerScatteringData, x_grid: Grid1D, refine: int = 1,
           tail_tol: float = TAIL_TOL, keep_rows: bool = False):
    """Scattering data (already at the target time) to ``u`` on ``x_grid``.

    The quadrature spacing is ``2*dx/refine`` so that every ``2x`` is a node
    of the kernel grid. Returns ``(u, kernel)``.
    """
    if refine < 1 or int(refine) != refine:
        raise ValueError("refine must be a positive integer")
    h = 2 * x_grid.dx / refine
    if 1 / h < MIN_QUADRATURE_N:
        raise ValueError(f"quadrature density {1 / h:.2f}/unit is below {MIN_QUADRATURE_N}")
    z0 = 2 * x_grid.x_min
    z_end = 2 * x_grid.x_max + 8.0
    if data.k.size > 1:
        # keep the sampled window inside one aliasing period of the k-quadrature
        z_end = min(z_end, z0 + 0.95 * 2 * np.pi / data.dk)
    n_z = int(math.floor((z_end - z0) / h)) + 1
    z_grid = Grid1D(z0, z0 + (n_z - 1) * h, n_z)
    F = build_F(data, z_grid, tail_tol=tail_tol)
    kernel = glm_kernel(F, x_grid, keep_rows=keep_rows)
    meta = dict(kernel.meta)
    meta.update(source_hash=data_hash(data), t=float(data.meta.get("t", 0.0)),
                sign_convention=data.meta.get("sign_convention"))
    kernel = GlmKernel(kernel.x_grid, kernel.diag_values, kernel.full_rows, meta)
    return reconstruct_potential(kernel), kernel


def write_F_csv(F: MarchenkoF, path):
    rows = ["z,F,F_continuous"]
    rows += [f"{z!r},{v!r},{c!r}" for z, v, c in zip(F.z.tolist(), F.values.tolist(),
                                                     F.continuous.tolist())]
    atomic_write_text(path, "\n".join(rows) + "\n")


def write_diagonal_csv(kernel: GlmKernel, path):
    rows = ["x,K_xx"]
    rows += [f"{x!r},{v!r}" for x, v in zip(kernel.x_grid.x.tolist(), kernel.diag_values.tolist())]
    atomic_write_text(path, "\n".join(rows) + "\n")


def solve_ist(u0: SampledField, times, dk: float = 0.05, k_max: float = 8.0, refine: int = 1,
              tail_tol: float = TAIL_TOL, max_halvings: int = 3, x_grid: Grid1D | None = None):
    """KdV initial-value problem by inverse scattering: scatter ``u0`` once,
    evolve the data in closed form to each time and invert.

    The trapezoid rule over ``k`` is periodic in ``z`` with period
    ``2 pi / dk``; once radiation has dispersed the periodic images fold back
    into the window and the tail check fails. In that case ``dk`` is halved
    (at most ``max_halvings`` times) and the direct problem is re-solved. The
    spacing actually used is recorded as ``meta['dk']``.

    Returns a list of ``(t, SampledField)``.
    """
    from .kdv_evolution import KdvFlowClock, evolve_scattering_data
    from .schrodinger import scatter, symmetric_k_grid

    times = [float(t) for t in times]
    if not times:
        raise errors.ConfigError("no output times requested", where="cli.solve_ist")
    x_grid = x_grid or u0.grid
    cache = {}

    def data_for(step):
        if step not in cache:
            cache[step] = scatter(u0, symmetric_k_grid(dk / 2**step, k_max))
        return cache[step]

    out = []
    for t in times:
        step = 0
        while True:
            data = evolve_scattering_data(data_for(step), KdvFlowClock(t))
            try:
                u, kernel = invert(data, x_grid, refine=refine, tail_tol=tail_tol)
                break
            except errors.TruncationError:
                if step >= max_halvings:
                    raise
                step += 1
        meta = dict(u.meta)
        meta.update(t=t, dk=dk / 2**step, k_max=k_max, origin="solve_ist",
                    n_bound=int(data.n_bound))
        out.append((t, u.with_values(u.values, meta=meta)))
    return out
