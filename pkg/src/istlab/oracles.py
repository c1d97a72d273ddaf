"""Direct integrators used as ground truth.

Nothing here touches the scattering code. All schemes are Fourier
pseudospectral on the periodic box ``grid.period``:

* KdV ``u_t + u_xxx + 6 u u_x = 0`` and mKdV ``q_t + q_xxx + 6 q^2 q_x = 0``
  with an integrating-factor RK4 step (the linear part is exact);
* NLS ``i q_t = -q_xx - 2 sigma |q|^2 q`` with Strang splitting, where
  ``sigma = +1`` is focusing and ``-1`` defocusing;
* the linear Airy flow ``u_t = u_xxx``, used as a control.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import errors
from .fields import Grid1D, SampledField, atomic_write_text, field_norms, write_field_json, read_field_json

__all__ = [
    "IntegratorConfig",
    "integrate_kdv",
    "integrate_mkdv",
    "integrate_nls",
    "integrate_airy",
    "pde_residual",
    "write_trajectory",
    "read_trajectory",
]

EDGE_TOL = 1e-8
EQUATIONS = ("kdv", "mkdv", "nls", "nls_defocusing", "airy")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_end: float
    dealias: bool = True
    snapshot_every: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise errors.ConfigError(f"dt must be positive, got {self.dt}")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise errors.ConfigError(f"t_end must be >= 0, got {self.t_end}")
        if int(self.snapshot_every) != self.snapshot_every or self.snapshot_every < 1:
            raise errors.ConfigError("snapshot_every must be a positive integer")

    def n_steps(self) -> int:
        n = self.t_end / self.dt
        return int(round(n)) if abs(n - round(n)) < 1e-9 * max(1.0, n) else int(math.ceil(n))


def _check_start(f: SampledField, cfg: IntegratorConfig, limit: float, what: str, where: str):
    if f.edge_magnitude() >= EDGE_TOL:
        raise errors.DomainTruncationError(
            f"initial datum not decayed at the box edges ({f.edge_magnitude():.2e})", where=where)
    if cfg.dt > limit * (1 + 1e-12):
        raise errors.ConfigError(f"dt = {cfg.dt:g} exceeds the {what} guard {limit:.3e}", where=where)


def _dealias_mask(grid: Grid1D, on: bool):
    if not on:
        return None
    k = np.abs(np.fft.fftfreq(grid.n_points) * grid.n_points)
    return k < grid.n_points / 3.0


def _run(f0: SampledField, cfg, step, spectral, where, kind):
    grid = f0.grid
    n = cfg.n_steps()
    h = cfg.t_end / n if n else 0.0
    v = np.fft.fft(f0.values)
    traj = [(0.0, f0)]
    for i in range(1, n + 1):
        v = step(v, h)
        if i % cfg.snapshot_every == 0 or i == n:
            if not np.all(np.isfinite(v)):
                raise errors.BlowUpError(f"non-finite values at t = {cfg.t_end * i / n:g}", where=where)
            vals = np.fft.ifft(v)
            t = cfg.t_end * i / n
            traj.append((t, SampledField(grid, vals.real if kind == "real" else vals, kind, {"t": t})))
    return traj


def _if_rk4(grid: Grid1D, lin, nonlinear):
    """Integrating-factor RK4 for ``v_t = lin*v + N(v)`` in Fourier space."""

    def step(v, h):
        e_half = np.exp(lin * h / 2)
        e_full = e_half * e_half
        k1 = nonlinear(v)
        k2 = nonlinear(e_half * (v + h / 2 * k1))
        k3 = nonlinear(e_half * v + h / 2 * k2)
        k4 = nonlinear(e_full * v + h * e_half * k3)
        return e_full * v + h / 6 * (e_full * k1 + 2 * e_half * (k2 + k3) + k4)

    return step


def integrate_kdv(u0: SampledField, cfg: IntegratorConfig):
    """Trajectory ``[(t, u), ...]`` of ``u_t + u_xxx + 6 u u_x = 0``."""
    where = "pde_oracles.integrate_kdv"
    if u0.kind != "real":
        raise ValueError("KdV datum must be real")
    g = u0.grid
    _check_start(u0, cfg, 0.4 * g.dx**3, "0.4*dx^3", where)
    k = g.wavenumbers
    mask = _dealias_mask(g, cfg.dealias)

    def nonlinear(v):
        u = np.fft.ifft(v).real
        w = -3j * k * np.fft.fft(u * u)
        return w * mask if mask is not None else w

    return _run(u0, cfg, _if_rk4(g, 1j * k**3, nonlinear), None, where, "real")


def integrate_mkdv(q0: SampledField, cfg: IntegratorConfig):
    """Trajectory of ``q_t + q_xxx + 6 q^2 q_x = 0`` (written as ``-(2 q^3)_x``)."""
    where = "pde_oracles.integrate_mkdv"
    if q0.kind != "real":
        raise ValueError("mKdV datum must be real")
    g = q0.grid
    _check_start(q0, cfg, 0.4 * g.dx**3, "0.4*dx^3", where)
    k = g.wavenumbers
    mask = _dealias_mask(g, cfg.dealias)

    def nonlinear(v):
        q = np.fft.ifft(v).real
        w = -2j * k * np.fft.fft(q**3)
        return w * mask if mask is not None else w

    return _run(q0, cfg, _if_rk4(g, 1j * k**3, nonlinear), None, where, "real")


def integrate_airy(u0: SampledField, cfg: IntegratorConfig):
    """Linear dispersive flow ``u_t = u_xxx``, solved exactly per Fourier mode."""
    where = "pde_oracles.integrate_airy"
    g = u0.grid
    _check_start(u0, cfg, np.inf, "", where)
    lin = -1j * g.wavenumbers**3

    def step(v, h):
        return np.exp(lin * h) * v

    return _run(u0, cfg, step, None, where, u0.kind)


def integrate_nls(q0: SampledField, sign: str, cfg: IntegratorConfig):
    """Strang split-step for ``i q_t = -q_xx - 2 sigma |q|^2 q``.

    ``sign`` is ``'focusing'`` or ``'defocusing'``. Dealiasing is applied to
    the field after each nonlinear step when enabled.
    """
    where = "pde_oracles.integrate_nls"
    if sign not in ("focusing", "defocusing"):
        raise ValueError(f"sign must be 'focusing' or 'defocusing', got {sign!r}")
    sigma = 1.0 if sign == "focusing" else -1.0
    g = q0.grid
    _check_start(q0, cfg, 0.5 * g.dx**2, "0.5*dx^2", where)
    k = g.wavenumbers
    mask = _dealias_mask(g, cfg.dealias)

    def step(v, h):
        half = np.exp(-1j * k**2 * h / 2)
        q = np.fft.ifft(half * v)
        q = q * np.exp(2j * sigma * np.abs(q) ** 2 * h)
        w = half * np.fft.fft(q)
        return w * mask if mask is not None else w

    f0 = q0 if q0.kind == "complex" else q0.with_values(q0.values, "complex")
    return _run(f0, cfg, step, None, where, "complex")


def _rhs(equation: str, v, grid: Grid1D):
    """Time derivative implied by the equation, from spectral space derivatives."""
    k = grid.wavenumbers
    fv = np.fft.fft(v)

    def d(order):
        fac = (1j * k) ** order
        if order % 2 and grid.n_points % 2 == 0:
            fac = fac.copy()
            fac[grid.n_points // 2] = 0
        return np.fft.ifft(fac * fv)

    if equation == "kdv":
        return -(d(3) + 6 * v * d(1)).real
    if equation == "mkdv":
        return -(d(3) + 6 * v * v * d(1)).real
    if equation in ("nls", "nls_defocusing"):
        sigma = 1.0 if equation == "nls" else -1.0
        return 1j * (d(2) + 2 * sigma * np.abs(v) ** 2 * v)
    if equation == "airy":
        res = d(3)
        return res.real if np.isrealobj(v) else res
    raise ValueError(f"unknown equation {equation!r}; expected one of {EQUATIONS}")


def pde_residual(trajectory: Sequence, equation: str) -> float:
    """Max over interior snapshots of ``||u_t - rhs(u)||_2 / ||u||_2`` with a
    centred time difference (non-uniform spacing allowed)."""
    if equation not in EQUATIONS:
        raise ValueError(f"unknown equation {equation!r}; expected one of {EQUATIONS}")
    if len(trajectory) < 3:
        raise errors.InsufficientDataError(
            f"need at least 3 snapshots, got {len(trajectory)}", where="pde_oracles.pde_residual")
    worst = 0.0
    for (t0, f0), (t1, f1), (t2, f2) in zip(trajectory, trajectory[1:], trajectory[2:]):
        h0, h1 = t1 - t0, t2 - t1
        if h0 <= 0 or h1 <= 0:
            raise ValueError("snapshot times must increase")
        v0, v1, v2 = (np.asarray(f.values) for f in (f0, f1, f2))
        # second-order derivative at t1 on a possibly uneven stencil
        ut = (-h1 / (h0 * (h0 + h1))) * v0 + ((h1 - h0) / (h0 * h1)) * v1 + (h0 / (h1 * (h0 + h1))) * v2
        r = ut - _rhs(equation, v1, f1.grid)
        dx = f1.grid.dx
        norm = math.sqrt(np.sum(np.abs(v1) ** 2) * dx)
        if norm == 0:
            rn = math.sqrt(np.sum(np.abs(r) ** 2) * dx)
            if rn > 0:
                worst = math.inf
            continue
        worst = max(worst, math.sqrt(np.sum(np.abs(r) ** 2) * dx) / norm)
    return worst


def conservation_diagnostics(f: SampledField) -> dict:
    """Mass and L2 norm of one snapshot."""
    l1, l2, linf = field_norms(f)
    mass = complex(np.sum(f.values) * f.grid.dx)
    return {"mass_re": mass.real, "mass_im": mass.imag, "l2_sq": l2 * l2, "max_abs": linf}


def write_trajectory(trajectory, directory, equation: str, cfg: IntegratorConfig):
    """One JSON field file per snapshot plus ``manifest.json``."""
    os.makedirs(directory, exist_ok=True)
    snaps = []
    for i, (t, f) in enumerate(trajectory):
        name = f"snapshot_{i:05d}.json"
        write_field_json(f, os.path.join(directory, name))
        snaps.append({"t": t, "file": name, **conservation_diagnostics(f)})
    manifest = {"equation": equation, "config": asdict(cfg), "snapshots": snaps}
    atomic_write_text(os.path.join(directory, "manifest.json"), json.dumps(manifest, indent=1) + "\n")


def read_trajectory(directory):
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    traj = [(s["t"], read_field_json(os.path.join(directory, s["file"]))) for s in manifest["snapshots"]]
    return traj, manifest
