"""Direct scattering for ``(d^2/dx^2 + u + k^2) psi = 0`` on the whole line.

Conventions
-----------
The left Jost solution ``phi ~ e^{-ikx}`` (x -> -inf) continues to
``phi = a(k) e^{-ikx} + b(k) e^{ikx}`` at x -> +inf, and the right Jost
solution ``psi ~ e^{ikx}`` (x -> +inf) continues to
``psi = a(k) e^{ikx} + b_left(k) e^{-ikx}`` at x -> -inf. The reflection
coefficient is ``rho = b / a``: the amplitude reflected back to the right when
a wave comes in from the right. That is the coefficient whose Fourier
transform enters the Marchenko kernel integrated over ``(x, inf)``.

Bound states are ``lambda = -kappa^2``, zeros of ``a`` at ``k = i kappa``.
The norming constant of each is ``C = 1 / int psi^2`` for the eigenfunction
scaled so that ``psi ~ e^{-kappa x}`` as x -> +inf.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg, optimize

from . import errors
from ._march import fine_samples, march_schrodinger
from .fields import Grid1D, SampledField, atomic_write_text

__all__ = [
    "SchrodingerScatteringData",
    "JostSolutions",
    "symmetric_k_grid",
    "jost_solutions",
    "reflection_coefficient",
    "bound_states",
    "scatter",
    "continued_transmission",
    "transmission_zero_orders",
    "data_to_json",
    "data_from_json",
    "write_data_csv",
]

DECAY_TOL = 1e-10
DEGENERACY_GAP = 1e-8


@dataclass(frozen=True)
class SchrodingerScatteringData:
    k: np.ndarray
    rho: np.ndarray
    a: np.ndarray | None = None
    kappas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    norming: np.ndarray = field(default_factory=lambda: np.zeros(0))
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        k = np.array(self.k, dtype=np.float64).ravel()
        rho = np.array(self.rho, dtype=np.complex128).ravel()
        if k.shape != rho.shape:
            raise ValueError("k and rho must have equal length")
        if k.size and (np.any(k == 0) or np.any(np.diff(k) <= 0)):
            raise ValueError("k grid must be strictly increasing and exclude k = 0")
        a = None
        if self.a is not None:
            a = np.array(self.a, dtype=np.complex128).ravel()
            if a.shape != k.shape:
                raise ValueError("a must match the k grid")
        kap = np.array(self.kappas, dtype=np.float64).ravel()
        cn = np.array(self.norming, dtype=np.float64).ravel()
        if kap.shape != cn.shape:
            raise ValueError("kappas and norming must have equal length")
        if np.any(kap <= 0) or np.any(cn <= 0) or not np.all(np.isfinite(cn)):
            raise ValueError("kappas and norming constants must be positive")
        order = np.argsort(-kap, kind="stable")
        kap, cn = kap[order], cn[order]
        if kap.size > 1 and np.min(-np.diff(kap)) < DEGENERACY_GAP:
            raise errors.DegeneracyError(
                f"bound-state eigenvalues closer than {DEGENERACY_GAP:g}: {kap.tolist()}",
                where="schrodinger_scattering.SchrodingerScatteringData",
            )
        for name, arr in (("k", k), ("rho", rho), ("a", a), ("kappas", kap), ("norming", cn)):
            if arr is not None:
                arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def n_bound(self) -> int:
        return int(self.kappas.size)

    @property
    def dk(self) -> float:
        d = np.diff(self.k)
        return float(d.mean()) if d.size else 0.0

    def replace(self, **changes) -> "SchrodingerScatteringData":
        kw = dict(k=self.k, rho=self.rho, a=self.a, kappas=self.kappas,
                  norming=self.norming, meta=self.meta)
        kw.update(changes)
        return SchrodingerScatteringData(**kw)


@dataclass(frozen=True)
class JostSolutions:
    psi_left: SampledField
    psi_right: SampledField
    a: complex
    b: complex
    b_left: complex
    a_from_right: complex


def symmetric_k_grid(dk: float = 0.05, k_max: float = 8.0) -> np.ndarray:
    """Half-offset grid ``+-(j + 1/2) dk`` with ``|k| < k_max``; never hits 0."""
    if dk <= 0 or k_max <= dk / 2:
        raise ValueError("need dk > 0 and k_max > dk/2")
    pos = (np.arange(int(np.floor(k_max / dk - 0.5)) + 1) + 0.5) * dk
    return np.concatenate([-pos[::-1], pos])


def _substeps(grid: Grid1D, k_abs: float, u_max: float = 0.0) -> int:
    """RK4 substeps per grid cell.

    Two scales limit the step: the plane-wave phase ``2|k|x`` and the coupling
    ``u/(2|k|)``, which is stiff at small ``|k|``. The march error there scales
    like ``(dx/m)^4 u^2 / |k|``, hence the quarter power.
    """
    m = max(2, int(math.ceil(4 * k_abs * grid.dx)))
    if u_max > 0 and k_abs > 0:
        m = max(m, int(math.ceil(44 * grid.dx * (u_max**2 / k_abs) ** 0.25)))
    return min(m, 64)


def _check_potential(u: SampledField, where: str):
    if u.kind != "real":
        raise ValueError(f"{where}: potential must be real-valued")
    edge = u.edge_magnitude()
    if edge >= DECAY_TOL:
        raise errors.DomainTruncationError(
            f"potential not decayed at the box edges (|u| = {edge:.3e} >= {DECAY_TOL:g})",
            where=where,
        )


def _check_k(k, where):
    k = np.atleast_1d(np.asarray(k, dtype=np.float64))
    if np.any(k == 0):
        raise errors.SingularWavenumberError("k = 0 is the singular point", where=where)
    return k


def jost_solutions(u: SampledField, k: float, substeps: int | None = None) -> JostSolutions:
    """Both Jost solutions at one real wavenumber, sampled on ``u``'s grid."""
    where = "schrodinger_scattering.jost_solutions"
    _check_potential(u, where)
    kk = _check_k(k, where)
    g = u.grid
    m = substeps or _substeps(g, abs(kk[0]), u.max_abs())
    xs, us = fine_samples(u.values, g, m)
    kz = kk.astype(np.complex128)
    x = g.x

    A, B, hist = march_schrodinger(xs, us, kz, store_every=m)
    HA = np.array([h[0][0] for h in hist])
    HB = np.array([h[1][0] for h in hist])
    phi = HA * np.exp(-1j * kz[0] * x) + HB * np.exp(1j * kz[0] * x)

    A2, B2, hist2 = march_schrodinger(xs, us, kz, backwards=True, store_every=m)
    RA = np.array([h[0][0] for h in hist2])[::-1]
    RB = np.array([h[1][0] for h in hist2])[::-1]
    psi = RA * np.exp(-1j * kz[0] * x) + RB * np.exp(1j * kz[0] * x)

    return JostSolutions(
        psi_left=SampledField(g, phi, "complex"),
        psi_right=SampledField(g, psi, "complex"),
        a=complex(A[0]), b=complex(B[0]),
        b_left=complex(A2[0]), a_from_right=complex(B2[0]),
    )


def connection_coefficients(u: SampledField, k, substeps: int | None = None):
    """``(a(k), b(k))`` for an array of (possibly complex) wavenumbers."""
    k = np.atleast_1d(np.asarray(k, dtype=np.complex128))
    if substeps:
        ms = np.full(k.size, int(substeps))
    else:
        umax = u.max_abs()
        ms = np.array([_substeps(u.grid, abs(kk), umax) for kk in k], dtype=int)
    A = np.empty(k.size, dtype=np.complex128)
    B = np.empty(k.size, dtype=np.complex128)
    # lanes needing the same refinement are marched together
    for m in np.unique(ms):
        sel = ms == m
        xs, us = fine_samples(u.values, u.grid, int(m))
        A[sel], B[sel], _ = march_schrodinger(xs, us, k[sel])
    return A, B


def reflection_coefficient(u: SampledField, k_grid, substeps: int | None = None) -> SchrodingerScatteringData:
    """Continuous scattering data ``rho(k) = b/a`` and ``a(k)`` on ``k_grid``."""
    where = "schrodinger_scattering.reflection_coefficient"
    _check_potential(u, where)
    k = _check_k(k_grid, where)
    a, b = connection_coefficients(u, k, substeps)
    small = np.abs(a) < 1e-12
    if np.any(small):
        ks = k[small][0]
        raise errors.SpectralSingularityError(f"|a(k)| < 1e-12 at k = {ks}", where=where)
    return SchrodingerScatteringData(k=k, rho=b / a, a=a)


# -- bound states -------------------------------------------------------------

def _fd_candidates(u: SampledField):
    """Positive eigenvalues of the second-order FD operator d^2/dx^2 + u."""
    dx = u.grid.dx
    d = -2.0 / dx**2 + u.values
    e = np.full(u.grid.n_points - 1, 1.0 / dx**2)
    top = float(np.max(u.values))
    if top <= 0:
        return np.zeros(0), np.zeros((u.grid.n_points, 0))
    w, v = linalg.eigh_tridiagonal(d, e, select="v", select_range=(0.0, top + 1.0))
    return w, v


def _shooting_mismatch(xs, us):
    def f(kappa):
        A, _ = march_schrodinger(xs, us, np.array([1j * kappa]))[:2]
        return float(A[0].real)
    return f


def _newton(f, x0, lo, hi, maxiter=40):
    """Newton on the shooting mismatch with a forward-difference slope.

    Returns None if an iterate leaves ``(lo, hi)`` or no convergence.
    """
    x = x0
    for _ in range(maxiter):
        fx = f(x)
        h = 1e-7 * x
        slope = (f(x + h) - fx) / h
        if slope == 0 or not np.isfinite(slope):
            return None
        step = fx / slope
        x_new = x - step
        if not lo < x_new < hi:
            return None
        if abs(step) <= 1e-14 * x_new:
            return x_new
        x = x_new
    return None


def _bracketed(f, guess, lo_lim, hi_lim):
    """Fallback: widen a bracket around ``guess`` and use Brent's method."""
    f0 = f(guess)
    if f0 == 0:
        return guess
    step = 1e-3 * guess + 1e-6
    lo, hi = guess, guess
    for _ in range(60):
        lo_new = max(lo_lim, guess - step)
        hi_new = min(hi_lim, guess + step)
        if f(lo_new) * f0 <= 0:
            return optimize.brentq(f, lo_new, lo, xtol=1e-14, maxiter=200)
        if f(hi_new) * f0 <= 0:
            return optimize.brentq(f, hi, hi_new, xtol=1e-14, maxiter=200)
        lo, hi = lo_new, hi_new
        if lo <= lo_lim and hi >= hi_lim:
            break
        step *= 2
    return None


def _bound_eigenfunction(u: SampledField, kappa: float, match_index: int, m: int):
    """Right-normalised bound state: psi ~ e^{-kappa x} at x -> +inf."""
    xs, us = fine_samples(u.values, u.grid, m)
    x = u.grid.x
    kz = np.array([1j * kappa])
    _, _, hl = march_schrodinger(xs, us, kz, store_every=m)
    _, _, hr = march_schrodinger(xs, us, kz, backwards=True, store_every=m)
    # k = i kappa: e^{-ikx} = e^{kappa x}, e^{ikx} = e^{-kappa x}
    left = np.array([h[0][0] for h in hl]) * np.exp(kappa * x) + np.array([h[1][0] for h in hl]) * np.exp(-kappa * x)
    rA = np.array([h[0][0] for h in hr])[::-1]
    rB = np.array([h[1][0] for h in hr])[::-1]
    right = rA * np.exp(kappa * x) + rB * np.exp(-kappa * x)
    left, right = left.real, right.real
    j = match_index
    psi = right.copy()
    psi[:j] = left[:j] * (right[j] / left[j])
    return psi


def bound_states(u: SampledField, substeps: int | None = None):
    """Bound-state decay rates and norming constants, sorted by descending kappa.

    Candidates come from the dense FD discretisation of ``d^2/dx^2 + u``; each
    is then refined on the shooting mismatch ``a(i kappa) = 0``.
    """
    where = "schrodinger_scattering.bound_states"
    _check_potential(u, where)
    w, vecs = _fd_candidates(u)
    if w.size == 0:
        return np.zeros(0), np.zeros(0)
    guesses = np.sqrt(w)
    order = np.argsort(-guesses)
    guesses, vecs = guesses[order], vecs[:, order]
    m = substeps or max(_substeps(u.grid, float(g), u.max_abs()) for g in guesses)
    xs, us = fine_samples(u.values, u.grid, m)
    f = _shooting_mismatch(xs, us)

    kappas = []
    for i, gss in enumerate(guesses):
        up = guesses[i - 1] if i > 0 else 2 * gss + 1.0
        down = guesses[i + 1] if i + 1 < guesses.size else 0.0
        lo_lim = 0.5 * (gss + down) if down > 0 else 0.25 * gss
        hi_lim = 0.5 * (gss + up)
        kap = _newton(f, gss, lo_lim, hi_lim)
        if kap is None:
            kap = _bracketed(f, gss, lo_lim, hi_lim)
        if kap is not None:
            kappas.append(kap)

    kappas = np.array(sorted(kappas, reverse=True))
    if kappas.size > 1 and np.min(-np.diff(kappas)) < DEGENERACY_GAP:
        raise errors.DegeneracyError(
            f"near-degenerate bound states: {kappas.tolist()}", where=where)

    norming = []
    for kap in kappas:
        j = int(np.argmin(np.abs(guesses - kap)))
        idx = int(np.argmax(np.abs(vecs[:, j])))
        psi = _bound_eigenfunction(u, kap, idx, m)
        norming.append(1.0 / np.trapezoid(psi**2, dx=u.grid.dx))
    return kappas, np.array(norming)


def scatter(u: SampledField, k_grid=None, substeps: int | None = None) -> SchrodingerScatteringData:
    """Full scattering data (continuous and discrete) of a real potential."""
    if k_grid is None:
        k_grid = symmetric_k_grid()
    cont = reflection_coefficient(u, k_grid, substeps)
    kap, cn = bound_states(u, substeps)
    return cont.replace(kappas=kap, norming=cn)


# -- analytic continuation of a(k) ----------------------------------------------

def continued_transmission(data: SchrodingerScatteringData, zeta) -> np.ndarray:
    """``a(zeta)`` in the upper half plane from the product/dispersion formula

        a(z) = prod_j (z - i kappa_j)/(z + i kappa_j)
               * exp(-(1/(2 pi i)) int log(1 - |rho(s)|^2) / (s - z) ds),

    the integral taken by the trapezoid rule over the sampled ``k`` grid.
    """
    z = np.atleast_1d(np.asarray(zeta, dtype=np.complex128))
    if np.any(z.imag <= 0):
        raise ValueError("continued_transmission is defined for Im zeta > 0 only")
    out = np.ones_like(z)
    for kap in data.kappas:
        out *= (z - 1j * kap) / (z + 1j * kap)
    if data.k.size > 1:
        logt = np.log1p(-np.minimum(np.abs(data.rho) ** 2, 1 - 1e-300))
        w = np.full(data.k.size, data.dk)
        w[0] = w[-1] = data.dk / 2
        integral = (w * logt / (data.k[None, :] - z[:, None])).sum(axis=1)
        out *= np.exp(-integral / (2j * np.pi))
    return out


def transmission_zero_orders(data: SchrodingerScatteringData, n_contour: int = 256,
                             resolution: float = 1e-8):
    """Order of the zero of ``a`` at each ``i kappa_j``, by winding number.

    Returns ``[(kappa_j, order), ...]``. A small circle around each bound
    state eigenvalue, radius a third of the distance to its nearest neighbour
    (or to the real axis), is traversed and the phase change of
    :func:`continued_transmission` counted.
    """
    where = "schrodinger_scattering.transmission_zero_orders"
    kap = data.kappas
    report = []
    for j, kj in enumerate(kap):
        gaps = [kj] + [abs(kj - other) for i, other in enumerate(kap) if i != j]
        radius = min(gaps) / 3
        if radius < resolution:
            raise errors.InconclusiveOrderError(
                f"kappa={kj} clustered below resolution (radius {radius:.2e})", where=where)
        theta = np.linspace(0, 2 * np.pi, n_contour + 1)
        z = 1j * kj + radius * np.exp(1j * theta)
        vals = continued_transmission(data, z)
        if np.min(np.abs(vals)) < 1e-300:
            raise errors.InconclusiveOrderError("contour passes through a zero", where=where)
        phase = np.unwrap(np.angle(vals))
        winding = (phase[-1] - phase[0]) / (2 * np.pi)
        order = int(round(winding))
        if abs(winding - order) > 1e-3:
            raise errors.InconclusiveOrderError(
                f"non-integer winding {winding:.4f} around i*{kj}", where=where)
        report.append((float(kj), order))
    return report


# -- serialisation ------------------------------------------------------------

def _pairs(z):
    return [[float(c.real), float(c.imag)] for c in np.asarray(z, dtype=np.complex128)]


def data_to_json(data: SchrodingerScatteringData) -> dict:
    doc = {
        "k": data.k.tolist(),
        "rho": _pairs(data.rho),
        "a": _pairs(data.a) if data.a is not None else None,
        "kappas": data.kappas.tolist(),
        "norming": data.norming.tolist(),
    }
    if data.meta:
        doc["meta"] = dict(data.meta)
    return doc


def data_from_json(doc: Mapping) -> SchrodingerScatteringData:
    def cx(v):
        p = np.asarray(v, dtype=np.float64).reshape(-1, 2)
        return p[:, 0] + 1j * p[:, 1]

    return SchrodingerScatteringData(
        k=np.asarray(doc["k"], dtype=np.float64),
        rho=cx(doc["rho"]),
        a=cx(doc["a"]) if doc.get("a") is not None else None,
        kappas=np.asarray(doc.get("kappas", []), dtype=np.float64),
        norming=np.asarray(doc.get("norming", []), dtype=np.float64),
        meta=doc.get("meta", {}),
    )


def write_data_json(data: SchrodingerScatteringData, path):
    atomic_write_text(path, json.dumps(data_to_json(data), indent=1) + "\n")


def read_data_json(path) -> SchrodingerScatteringData:
    with open(path) as fh:
        return data_from_json(json.load(fh))


def write_data_csv(data: SchrodingerScatteringData, path, bound_path):
    """One row per ``k`` in ``path``; the bound-state table in ``bound_path``."""
    a = data.a if data.a is not None else np.full(data.k.size, np.nan + 0j)
    rows = ["k,rho_re,rho_im,a_re,a_im"]
    rows += [f"{k!r},{r.real!r},{r.imag!r},{t.real!r},{t.imag!r}"
             for k, r, t in zip(data.k.tolist(), data.rho.tolist(), a.tolist())]
    atomic_write_text(path, "\n".join(rows) + "\n")
    rows = ["j,kappa,norming"]
    rows += [f"{j},{kap!r},{c!r}" for j, (kap, c) in
             enumerate(zip(data.kappas.tolist(), data.norming.tolist()), start=1)]
    atomic_write_text(bound_path, "\n".join(rows) + "\n")
