"""Exact solution generators.

KdV N-solitons come from the degenerate Marchenko kernel
``F(z) = sum_j C_j e^{-kappa_j z}``: then ``K(x,x) = d/dx log det M`` with

    M_ij = delta_ij + sqrt(C_i C_j) e^{-(kappa_i + kappa_j) x} / (kappa_i + kappa_j)

and ``u = 2 d^2/dx^2 log det M``, differentiated in closed form. The
parameterisation is ``kappa_j = eta_j``, ``C_j(t) = 2 eta_j e^{2 eta_j x0_j}
e^{8 eta_j^3 t}``, so an isolated component is ``2 eta^2 sech^2(eta (x - x0 - 4 eta^2 t))``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import errors
from .fields import Grid1D, SampledField, SolitonParams, spectral_derivative

__all__ = [
    "NSolitonSpec",
    "kdv_nsoliton",
    "kdv_kernel_diagonal",
    "nls_soliton",
    "calibrate_nls_motion",
    "linear_motion",
    "virtual_soliton",
]

DEGENERACY_GAP = 1e-8


@dataclass(frozen=True)
class NSolitonSpec:
    components: tuple
    equation: str = "kdv"

    def __post_init__(self):
        if self.equation not in ("kdv", "nls_focusing"):
            raise ValueError(f"equation must be 'kdv' or 'nls_focusing', got {self.equation!r}")
        comps = tuple(c if isinstance(c, SolitonParams) else SolitonParams(**c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if self.equation == "kdv":
            for c in comps:
                c.check_kdv()
            eig = [c.eta for c in comps]
        else:
            eig = [complex(c.xi, c.eta) for c in comps]
        for i in range(len(eig)):
            for j in range(i):
                if abs(eig[i] - eig[j]) < DEGENERACY_GAP:
                    raise errors.DegeneracyError(
                        f"components {j} and {i} share the eigenvalue {eig[i]}",
                        where="soliton_factory.NSolitonSpec")

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        return cls(tuple(SolitonParams(**c) for c in doc["components"]), doc.get("equation", "kdv"))

    def to_json(self) -> dict:
        return {"equation": self.equation,
                "components": [dict(eta=c.eta, xi=c.xi, x0=c.x0, phi0=c.phi0) for c in self.components]}

    def kappas(self) -> np.ndarray:
        return np.array([c.eta for c in self.components])

    def log_norming(self, t: float = 0.0) -> np.ndarray:
        eta = self.kappas()
        x0 = np.array([c.x0 for c in self.components])
        return np.log(2 * eta) + 2 * eta * x0 + 8 * eta**3 * t


def _log_det_derivatives(x, kappas, log_c):
    """First and second x-derivatives of ``log det M`` at the points ``x``.

    Components with ``E_i = sqrt(C_i) e^{-kappa_i x} > 1`` are scaled out of
    ``M`` so that nothing overflows at large ``|x|``.
    """
    x = np.asarray(x, dtype=np.float64)
    n = kappas.size
    logE = 0.5 * log_c[None, :] - kappas[None, :] * x[:, None]
    big = np.maximum(logE, 0.0)
    Eh = np.exp(logE - big)
    ks = kappas[:, None] + kappas[None, :]
    N = (Eh[:, :, None] * Eh[:, None, :]) / ks[None]
    N[:, np.arange(n), np.arange(n)] += np.exp(-2 * big)
    try:
        sol = np.linalg.solve(N, np.concatenate([Eh[:, :, None], ks[None] * Eh[:, None, :] * Eh[:, :, None]],
                                                axis=2))
    except np.linalg.LinAlgError as exc:
        raise errors.DegeneracyError(str(exc), where="soliton_factory.kdv_nsoliton") from exc
    w = sol[:, :, 0]
    quad = np.einsum("xi,xi->x", Eh, w)
    tr = np.einsum("xii->x", sol[:, :, 1:])
    return -quad, tr - quad**2


def kdv_kernel_diagonal(spec: NSolitonSpec, x, t: float = 0.0) -> np.ndarray:
    """``K(x, x)`` of the reflectionless kernel, in closed form."""
    if spec.equation != "kdv":
        raise ValueError("kdv_kernel_diagonal needs a kdv spec")
    if not spec.components:
        return np.zeros(np.shape(x))
    d1, _ = _log_det_derivatives(x, spec.kappas(), spec.log_norming(t))
    return d1


def kdv_nsoliton(spec: NSolitonSpec, grid: Grid1D, t: float = 0.0) -> SampledField:
    """Reflectionless KdV solution ``u(x, t) = 2 (log det M)''`` on ``grid``."""
    if spec.equation != "kdv":
        raise ValueError("kdv_nsoliton needs equation='kdv'")
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    meta = {"t": float(t), "generator": "kdv_nsoliton", "spec": spec.to_json()}
    if not spec.components:
        return SampledField(grid, np.zeros(grid.n_points), "real", meta)
    _, d2 = _log_det_derivatives(grid.x, spec.kappas(), spec.log_norming(t))
    return SampledField(grid, 2.0 * d2, "real", meta)


# -- NLS -----------------------------------------------------------------------

def linear_motion(params: SolitonParams, velocity: float, frequency: float):
    """``(x0(t), phi0(t)) = (x0 + velocity t, phi0 + frequency t)`` as callables."""
    return (lambda t: params.x0 + velocity * t, lambda t: params.phi0 + frequency * t)


def _nls_profile(x, eta, xi, x0, phi0):
    X = x - x0
    return 2 * eta * np.exp(-2j * xi * X - 1j * phi0) / np.cosh(2 * eta * X)


def nls_soliton(params: SolitonParams, grid: Grid1D, t: float = 0.0,
                motion: tuple[Callable, Callable] | None = None) -> SampledField:
    """``q = 2 eta e^{-2 i xi (x - x0(t))} e^{-i phi0(t)} sech(2 eta (x - x0(t)))``.

    ``motion`` supplies ``(x0(t), phi0(t))``; without it the profile is
    static at ``(params.x0, params.phi0)``.
    """
    if motion is None:
        x0, phi0 = params.x0, params.phi0
    else:
        x0, phi0 = float(motion[0](t)), float(motion[1](t))
        if not (math.isfinite(x0) and math.isfinite(phi0)):
            raise ValueError(f"motion returned non-finite values at t = {t}")
    q = _nls_profile(grid.x, params.eta, params.xi, x0, phi0)
    return SampledField(grid, q, "complex", {"t": float(t), "x0": x0, "phi0": phi0})


def calibrate_nls_motion(params: SolitonParams, grid: Grid1D, sign: float = 1.0):
    """Fit ``dx0/dt`` and ``dphi0/dt`` so that the soliton family solves
    ``i q_t = -q_xx - 2 sign |q|^2 q``.

    Along the family ``q_t = -v q_x - i w q``, so the residual is linear in
    ``(v, w)`` and is minimised by least squares over the grid. Returns
    ``(v, w, relative_residual)``.
    """
    q = _nls_profile(grid.x, params.eta, params.xi, params.x0, params.phi0)
    qx = spectral_derivative(q, grid, 1)
    qxx = spectral_derivative(q, grid, 2)
    rest = qxx + 2 * sign * np.abs(q) ** 2 * q
    # residual = i q_t - (-q_xx - 2|q|^2 q) = -i v q_x + w q + rest
    cols = np.column_stack([-1j * qx, q])
    A = np.vstack([cols.real, cols.imag])
    b = -np.concatenate([rest.real, rest.imag])
    (v, w), *_ = np.linalg.lstsq(A, b, rcond=None)
    res = np.linalg.norm(A @ [v, w] - b) / np.linalg.norm(q)
    return float(v), float(w), float(res)


# -- defocusing virtual soliton ---------------------------------------------------

def virtual_soliton(params: SolitonParams, grid: Grid1D) -> SampledField:
    """``q = 2 eta / sinh(2 eta (x - x0))`` with the pole outside the grid."""
    x0 = params.x0
    if grid.x_min <= x0 <= grid.x_max:
        raise errors.SingularityError(
            f"x0 = {x0} lies inside [{grid.x_min}, {grid.x_max}]; the profile is singular there",
            where="soliton_factory.virtual_soliton")
    q = 2 * params.eta / np.sinh(2 * params.eta * (grid.x - x0))
    return SampledField(grid, q, "real", {"x0": x0, "eta": params.eta})
