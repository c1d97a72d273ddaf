"""Direct scattering for the Zakharov-Shabat problem

    v1_x + i zeta v1 = q v2,    v2_x - i zeta v2 = r v1,

with the reductions ``r = -conj(q)`` (focusing NLS) and ``r = -q``, ``q``
real (mKdV). The left Jost solution ``v ~ (e^{-i zeta x}, 0)`` continues
to ``(a e^{-i zeta x}, b e^{i zeta x})`` on the right.

For a potential supported in a finite box ``a`` is entire, and bound
states are its zeros in the upper half plane. They are counted with the
argument principle on rectangles, isolated by subdivision and polished by
Newton iteration. The norming constant of a bound state is ``b_j = b(zeta_j)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import errors
from ._march import fine_samples, march_zs
from .fields import Grid1D, SampledField, atomic_write_text

__all__ = [
    "ZSScatteringData",
    "zs_coefficients",
    "zs_eigenvalues",
    "zs_scatter",
    "zs_evolve_data",
    "calibrate_dispersion",
    "DISPERSION",
    "zs_data_to_json",
    "zs_data_from_json",
]

REDUCTIONS = ("focusing_nls", "mkdv_real")
FLOW_REDUCTION = {"nls": "focusing_nls", "mkdv": "mkdv_real"}
DECAY_TOL = 1e-10
CONTOUR_TOL = 1e-8

# theta(zeta) = coeff * zeta**power in b(zeta; t) = b(zeta; 0) e^{i theta t}.
# Values obtained with calibrate_dispersion against the direct integrators;
# the test-suite re-runs that calibration.
DISPERSION = {"nls": (4.0, 2), "mkdv": (8.0, 3)}


@dataclass(frozen=True)
class ZSScatteringData:
    zeta: np.ndarray
    a: np.ndarray
    b: np.ndarray
    reduction: str
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    norming: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    residues: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.reduction not in REDUCTIONS:
            raise ValueError(f"reduction must be one of {REDUCTIONS}, got {self.reduction!r}")
        for name in ("zeta", "a", "b", "eigenvalues", "norming", "residues"):
            v = np.array(getattr(self, name), dtype=np.float64 if name == "zeta" else np.complex128)
            v.flags.writeable = False
            object.__setattr__(self, name, v)
        if not (self.zeta.shape == self.a.shape == self.b.shape):
            raise ValueError("zeta, a and b must have the same length")
        ev = self.eigenvalues
        if ev.size and np.min(ev.imag) <= 1e-10:
            raise ValueError("eigenvalues must lie in the upper half plane")
        for i in range(ev.size):
            for j in range(i):
                if abs(ev[i] - ev[j]) < 1e-8:
                    raise errors.DegeneracyError(f"repeated eigenvalue {ev[i]}", where="zs_scattering")
        object.__setattr__(self, "meta", dict(self.meta))

    def replace(self, **changes) -> "ZSScatteringData":
        d = dict(zeta=self.zeta, a=self.a, b=self.b, reduction=self.reduction,
                 eigenvalues=self.eigenvalues, norming=self.norming, residues=self.residues,
                 meta=self.meta)
        d.update(changes)
        return ZSScatteringData(**d)


def _partner(q: SampledField, reduction: str):
    if reduction not in REDUCTIONS:
        raise ValueError(f"reduction must be one of {REDUCTIONS}, got {reduction!r}")
    if reduction == "focusing_nls":
        return -np.conj(np.asarray(q.values, dtype=np.complex128))
    if q.kind != "real" and np.max(np.abs(np.imag(q.values))) > 0:
        raise ValueError("mkdv_real reduction needs a real potential")
    return -np.asarray(q.values, dtype=np.complex128)


def _check(q: SampledField, where):
    if q.edge_magnitude() >= DECAY_TOL:
        raise errors.DomainTruncationError(
            f"q not decayed at the box edges (|q| = {q.edge_magnitude():.3e})", where=where)


def _substeps(grid: Grid1D, zeta_abs: float, qmax: float) -> int:
    return min(64, max(2, int(math.ceil(14 * zeta_abs * grid.dx)), int(math.ceil(10 * qmax * grid.dx))))


class _Evaluator:
    """Shared fine samples for repeated ``(a, b)`` evaluations."""

    def __init__(self, q: SampledField, reduction: str, m: int):
        self.grid = q.grid
        qv = np.asarray(q.values, dtype=np.complex128)
        rv = _partner(q, reduction)
        self.xs, self.qs = fine_samples(qv, q.grid, m)
        _, self.rs = fine_samples(rv, q.grid, m)

    def __call__(self, zeta):
        zeta = np.atleast_1d(np.asarray(zeta, dtype=np.complex128))
        out_a = np.empty(zeta.size, complex)
        out_b = np.empty(zeta.size, complex)
        # chunks keep the precomputed exponentials small
        for s in range(0, zeta.size, 256):
            A, B, _ = march_zs(self.xs, self.qs, self.rs, zeta[s:s + 256])
            out_a[s:s + 256], out_b[s:s + 256] = A, B
        return out_a, out_b


def zs_coefficients(q: SampledField, reduction: str, zeta_grid, substeps: int | None = None) -> ZSScatteringData:
    """``a(zeta)``, ``b(zeta)`` on a real spectral grid."""
    where = "zs_scattering.zs_coefficients"
    _check(q, where)
    zeta = np.asarray(zeta_grid, dtype=np.float64)
    qmax = q.max_abs()
    ms = np.array([substeps or _substeps(q.grid, abs(z), qmax) for z in zeta], dtype=int)
    a = np.empty(zeta.size, complex)
    b = np.empty(zeta.size, complex)
    for m in np.unique(ms):
        sel = ms == m
        a[sel], b[sel] = _Evaluator(q, reduction, int(m))(zeta[sel])
    return ZSScatteringData(zeta=zeta, a=a, b=b, reduction=reduction)


# -- bound states --------------------------------------------------------------

def _winding(ev, corners, n_side=64, max_points=20000):
    """Winding number of ``a`` along the rectangle boundary, refined until
    consecutive phase increments are below pi/4."""
    z0, z1 = corners
    path = [complex(z0.real, z0.imag), complex(z1.real, z0.imag),
            complex(z1.real, z1.imag), complex(z0.real, z1.imag), complex(z0.real, z0.imag)]
    t = np.concatenate([np.linspace(0, 1, n_side, endpoint=False) + i for i in range(4)] + [[4.0]])

    def point(s):
        i = np.minimum(np.floor(s).astype(int), 3)
        f = s - i
        p = np.array(path)
        return p[i] + f * (p[i + 1] - p[i])

    vals = ev(point(t))[0]
    while True:
        if np.min(np.abs(vals)) < CONTOUR_TOL:
            raise errors.ContourError(
                f"contour passes within {CONTOUR_TOL:g} of a zero of a(zeta)", where="zs_scattering.zs_eigenvalues")
        dphi = np.angle(vals[1:] / vals[:-1])
        bad = np.flatnonzero(np.abs(dphi) > np.pi / 4)
        if bad.size == 0:
            return int(round(dphi.sum() / (2 * np.pi)))
        if t.size > max_points:
            raise errors.ContourError("argument increments not resolved on the contour",
                                      where="zs_scattering.zs_eigenvalues")
        mids = 0.5 * (t[bad] + t[bad + 1])
        new = ev(point(mids))[0]
        t = np.insert(t, bad + 1, mids)
        vals = np.insert(vals, bad + 1, new)


def _newton(ev, z, h=1e-6, maxiter=50):
    for _ in range(maxiter):
        a, _ = ev(np.array([z, z + h, z - h]))
        da = (a[1] - a[2]) / (2 * h)
        if da == 0:
            return None, None
        step = a[0] / da
        z = z - step
        if abs(step) < 1e-14 * max(1.0, abs(z)):
            break
    a, _ = ev(np.array([z + h, z - h]))
    return z, (a[0] - a[1]) / (2 * h)


def _search_box(q: SampledField, reduction: str):
    qmax = q.max_abs()
    spec = np.abs(np.fft.fft(q.values))
    k = np.abs(q.grid.wavenumbers)
    sig = spec > 1e-6 * spec.max() if spec.max() > 0 else np.zeros_like(spec, bool)
    re_max = 0.5 * float(k[sig].max()) + 1.0 if sig.any() else 1.0
    # |Im zeta| <= max|q| for any eigenvalue of the ZS operator
    return complex(-re_max, 1e-3), complex(re_max, qmax * 1.05 + 0.05)


def zs_eigenvalues(q: SampledField, reduction: str, box=None, substeps: int | None = None,
                   max_depth: int = 12):
    """Eigenvalues in the upper half plane with norming constants ``b_j``
    and residues ``b_j / a'(zeta_j)``.

    ``box`` is ``(lower_left, upper_right)``; by default it spans
    ``|Re zeta|`` up to half the significant wavenumber content of ``q`` and
    ``Im zeta`` from 1e-3 to ``max|q|``.
    """
    where = "zs_scattering.zs_eigenvalues"
    _check(q, where)
    lo, hi = box or _search_box(q, reduction)
    lo, hi = complex(lo), complex(hi)
    m = substeps or _substeps(q.grid, abs(hi), q.max_abs())
    ev = _Evaluator(q, reduction, m)
    found = []
    stack = [(lo, hi, _winding(ev, (lo, hi)), 0)]
    while stack:
        z0, z1, n, depth = stack.pop()
        if n <= 0:
            continue
        size = max(z1.real - z0.real, z1.imag - z0.imag)
        if n == 1 and (size < 0.5 or depth >= 3):
            z, da = _newton(ev, 0.5 * (z0 + z1))
            inside = (z is not None and z0.real - 1e-9 <= z.real <= z1.real + 1e-9
                      and z0.imag - 1e-9 <= z.imag <= z1.imag + 1e-9)
            if inside:
                found.append((z, da))
                continue
        if depth >= max_depth:
            raise errors.ContourError(f"could not isolate {n} zero(s) in {z0}..{z1}", where=where)
        # split the longer side; nudge the cut so it is not on a symmetry line
        if z1.real - z0.real >= z1.imag - z0.imag:
            c = z0.real + (0.5 + 0.0137) * (z1.real - z0.real)
            halves = [(z0, complex(c, z1.imag)), (complex(c, z0.imag), z1)]
        else:
            c = z0.imag + (0.5 + 0.0137) * (z1.imag - z0.imag)
            halves = [(z0, complex(z1.real, c)), (complex(z0.real, c), z1)]
        for a0, a1 in halves:
            stack.append((a0, a1, _winding(ev, (a0, a1)), depth + 1))
    found.sort(key=lambda p: (-p[0].imag, p[0].real))
    zs = np.array([p[0] for p in found], dtype=complex)
    das = np.array([p[1] for p in found], dtype=complex)
    bs = ev(zs)[1] if zs.size else np.zeros(0, complex)
    return zs, bs, (bs / das if zs.size else np.zeros(0, complex))


def zs_scatter(q: SampledField, reduction: str, zeta_grid) -> ZSScatteringData:
    data = zs_coefficients(q, reduction, zeta_grid)
    ev, bn, res = zs_eigenvalues(q, reduction)
    return data.replace(eigenvalues=ev, norming=bn, residues=res)


# -- time evolution -------------------------------------------------------------

def zs_evolve_data(data: ZSScatteringData, t: float, flow: str, dispersion=None) -> ZSScatteringData:
    """``b(zeta; t) = b(zeta; 0) e^{i theta(zeta) t}`` for ``b`` and the norming
    constants; ``a`` and the eigenvalues are passed through unchanged."""
    where = "zs_scattering.zs_evolve_data"
    table = DISPERSION if dispersion is None else dispersion
    if flow not in table:
        raise errors.CalibrationMissingError(f"no calibrated dispersion for flow {flow!r}", where=where)
    if FLOW_REDUCTION.get(flow, data.reduction) != data.reduction:
        raise ValueError(f"flow {flow!r} is inconsistent with reduction {data.reduction!r}")
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    c, p = table[flow]
    meta = dict(data.meta)
    meta["t"] = float(meta.get("t", 0.0)) + t
    meta["flow"] = flow
    if t == 0:
        return data.replace(meta=meta)
    b = data.b * np.exp(1j * c * data.zeta**p * t)
    bn = data.norming * np.exp(1j * c * data.eigenvalues**p * t)
    res = data.residues * np.exp(1j * c * data.eigenvalues**p * t)
    return ZSScatteringData(zeta=data.zeta, a=data.a, b=b, reduction=data.reduction,
                            eigenvalues=data.eigenvalues, norming=bn, residues=res, meta=meta)


def calibrate_dispersion(q0: SampledField, q1: SampledField, t: float, reduction: str, power: int,
                         zeta_grid, min_modulus: float = 1e-3):
    """Fit ``theta(zeta) = c zeta^power`` from the continuous data of two
    snapshots of the same flow, ``t`` apart.

    Returns ``(c, max_phase_error)`` over the nodes with ``|b| > min_modulus``.
    """
    d0 = zs_coefficients(q0, reduction, zeta_grid)
    d1 = zs_coefficients(q1, reduction, zeta_grid)
    use = (np.abs(d0.b) > min_modulus) & (np.abs(d0.zeta) > 1e-6)
    if np.count_nonzero(use) < 2:
        raise errors.InsufficientDataError("too few nodes with significant b", where="zs_scattering.calibrate_dispersion")
    z = d0.zeta[use]
    phase = np.unwrap(np.angle(d1.b[use] / d0.b[use]))
    basis = z**power * t
    # phases are only known modulo 2 pi; anchor the branch at the node nearest zero
    i0 = int(np.argmin(np.abs(z)))
    phase = phase - 2 * np.pi * np.round((phase[i0] - 0) / (2 * np.pi))
    c = float(basis @ phase / (basis @ basis))
    err = float(np.max(np.abs(np.angle(np.exp(1j * (phase - c * basis))))))
    return c, err


# -- serialisation ----------------------------------------------------------------

def _pairs(z):
    return [[float(v.real), float(v.imag)] for v in np.asarray(z, dtype=complex)]


def _unpairs(p):
    arr = np.asarray(p, dtype=np.float64).reshape(-1, 2)
    return arr[:, 0] + 1j * arr[:, 1]


def zs_data_to_json(data: ZSScatteringData) -> dict:
    return {"reduction": data.reduction, "zeta": data.zeta.tolist(), "a": _pairs(data.a),
            "b": _pairs(data.b), "eigenvalues": _pairs(data.eigenvalues),
            "norming": _pairs(data.norming), "residues": _pairs(data.residues), "meta": dict(data.meta)}


def zs_data_from_json(doc: Mapping) -> ZSScatteringData:
    return ZSScatteringData(zeta=np.asarray(doc["zeta"], float), a=_unpairs(doc["a"]), b=_unpairs(doc["b"]),
                            reduction=doc["reduction"], eigenvalues=_unpairs(doc.get("eigenvalues", [])),
                            norming=_unpairs(doc.get("norming", [])), residues=_unpairs(doc.get("residues", [])),
                            meta=doc.get("meta", {}))


def write_zs_json(data: ZSScatteringData, path):
    atomic_write_text(path, json.dumps(zs_data_to_json(data), indent=1) + "\n")
