"""Uniform grids, sampled fields and soliton parameter bundles.

Everything here is immutable after construction. Field values are stored as
read-only numpy arrays: ``float64`` for real fields, ``complex128`` otherwise.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "Grid1D",
    "SampledField",
    "SolitonParams",
    "sample",
    "field_norms",
    "field_to_json",
    "field_from_json",
    "write_field_json",
    "read_field_json",
    "write_field_csv",
    "read_field_csv",
    "spectral_derivative",
    "shifted_samples",
    "locate_peaks",
    "atomic_write_text",
]


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid with both endpoints included."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 8:
            raise ValueError(f"n_points must be an integer >= 8, got {self.n_points}")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if not self.x_max > self.x_min:
            raise ValueError(f"x_max must exceed x_min ({self.x_min}, {self.x_max})")
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = np.linspace(self.x_min, self.x_max, self.n_points)
        x.flags.writeable = False
        return x

    @property
    def period(self) -> float:
        """Length of the periodic box used by the spectral routines."""
        return self.n_points * self.dx

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        k = 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)
        k.flags.writeable = False
        return k

    def is_power_of_two(self) -> bool:
        n = self.n_points
        return n & (n - 1) == 0

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n_points": self.n_points}


@dataclass(frozen=True)
class SampledField:
    grid: Grid1D
    values: np.ndarray
    kind: str = "real"
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in ("real", "complex"):
            raise ValueError(f"kind must be 'real' or 'complex', got {self.kind!r}")
        v = np.asarray(self.values)
        if v.ndim != 1 or v.shape[0] != self.grid.n_points:
            raise ValueError(
                f"values length {v.shape} does not match grid.n_points={self.grid.n_points}"
            )
        if self.kind == "real":
            if np.iscomplexobj(v):
                if np.any(v.imag != 0):
                    raise ValueError("kind='real' but values have nonzero imaginary parts")
                v = v.real
            v = np.array(v, dtype=np.float64)
        else:
            v = np.array(v, dtype=np.complex128)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def with_values(self, values, kind=None, meta=None) -> "SampledField":
        return SampledField(self.grid, values, kind or self.kind, self.meta if meta is None else meta)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def edge_magnitude(self) -> float:
        return float(max(abs(self.values[0]), abs(self.values[-1])))


@dataclass(frozen=True)
class SolitonParams:
    """Closed-form soliton parameters: amplitude ``eta``, carrier/velocity
    ``xi``, position ``x0`` and phase ``phi0``."""

    eta: float
    xi: float = 0.0
    x0: float = 0.0
    phi0: float = 0.0

    def __post_init__(self):
        for name in ("eta", "xi", "x0", "phi0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")

    def check_kdv(self):
        if self.xi != 0 or self.phi0 != 0:
            raise ValueError("KdV solitons take no xi/phi0; both must be zero")


def sample(grid: Grid1D, f: Callable, kind: str | None = None) -> SampledField:
    """Evaluate ``f`` at every grid node.

    ``f`` may be vectorised; if calling it on the node array fails or returns
    the wrong shape it is evaluated node by node. With ``kind=None`` the kind
    is inferred from the values.
    """
    x = grid.x
    try:
        vals = np.asarray(f(x))
        if vals.shape != x.shape:
            raise ValueError
    except Exception:
        vals = np.array([f(xi) for xi in x])
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"non-finite sample at node {i} (x={x[i]!r})")
    if kind is None:
        kind = "complex" if np.iscomplexobj(vals) and np.any(vals.imag != 0) else "real"
    return SampledField(grid, vals, kind)


def field_norms(f: SampledField) -> tuple[float, float, float]:
    """Trapezoid L1 and L2 norms and the exact max-abs of the samples."""
    a = np.abs(f.values)
    dx = f.grid.dx
    l1 = float(np.trapezoid(a, dx=dx))
    l2 = float(np.sqrt(np.trapezoid(a * a, dx=dx)))
    return l1, l2, float(a.max())


# -- serialisation -----------------------------------------------------------

def field_to_json(f: SampledField) -> dict:
    v = np.asarray(f.values, dtype=np.complex128)
    doc = {
        "grid": f.grid.to_dict(),
        "kind": f.kind,
        "values": [[float(z.real), float(z.imag)] for z in v],
    }
    if f.meta:
        doc["meta"] = dict(f.meta)
    return doc


def field_from_json(doc: Mapping) -> SampledField:
    g = doc["grid"]
    grid = Grid1D(g["x_min"], g["x_max"], g["n_points"])
    pairs = np.asarray(doc["values"], dtype=np.float64).reshape(-1, 2)
    vals = pairs[:, 0] + 1j * pairs[:, 1]
    kind = doc.get("kind") or ("complex" if np.any(pairs[:, 1] != 0) else "real")
    return SampledField(grid, vals, kind, doc.get("meta", {}))


def atomic_write_text(path, text: str):
    """Write via a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_field_json(f: SampledField, path):
    atomic_write_text(path, json.dumps(field_to_json(f), indent=1) + "\n")


def read_field_json(path) -> SampledField:
    with open(path) as fh:
        return field_from_json(json.load(fh))


def write_field_csv(f: SampledField, path):
    v = np.asarray(f.values, dtype=np.complex128)
    lines = ["x,re,im"]
    lines += [f"{x!r},{z.real!r},{z.imag!r}" for x, z in zip(f.grid.x.tolist(), v.tolist())]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_field_csv(path, kind: str | None = None) -> SampledField:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) < 8:
        raise ValueError(f"{path}: need at least 8 rows, found {len(rows)}")
    x = np.array([float(r["x"]) for r in rows])
    re = np.array([float(r["re"]) for r in rows])
    im = np.array([float(r.get("im") or 0.0) for r in rows])
    grid = Grid1D(x[0], x[-1], len(x))
    if np.max(np.abs(x - grid.x)) > 1e-9 * max(1.0, np.max(np.abs(x))):
        raise ValueError(f"{path}: x column is not a uniform grid")
    if kind is None:
        kind = "complex" if np.any(im != 0) else "real"
    return SampledField(grid, re + 1j * im, kind)


# -- spectral helpers shared by the scattering modules --------------------------

def spectral_derivative(values, grid: Grid1D, order: int = 1) -> np.ndarray:
    """Fourier derivative of periodically-extended samples.

    For odd orders the Nyquist mode is dropped.
    """
    v = np.asarray(values)
    k = grid.wavenumbers
    factor = (1j * k) ** order
    n = grid.n_points
    if order % 2 == 1 and n % 2 == 0:
        factor = factor.copy()
        factor[n // 2] = 0
    out = np.fft.ifft(factor * np.fft.fft(v))
    return out.real if np.isrealobj(v) else out


def shifted_samples(values, grid: Grid1D, fraction: float) -> np.ndarray:
    """Band-limited interpolation of the samples at ``x_i + fraction*dx``."""
    v = np.asarray(values)
    n = grid.n_points
    phase = np.exp(1j * grid.wavenumbers * fraction * grid.dx)
    if n % 2 == 0:
        phase = phase.copy()
        phase[n // 2] = np.cos(np.pi * fraction)
    out = np.fft.ifft(phase * np.fft.fft(v))
    return out.real if np.isrealobj(v) else out


def locate_peaks(f: SampledField, min_height: float = 0.0, n_peaks: int | None = None):
    """Local maxima of ``|f|`` refined to sub-grid accuracy.

    Positions are refined by Newton iteration on the derivative of the
    trigonometric interpolant, so the result is accurate to far below ``dx``
    for smooth decayed fields. Returns ``[(x, value), ...]`` sorted by height.
    """
    grid = f.grid
    a = np.abs(f.values) if f.kind == "complex" else np.asarray(f.values)
    idx = [
        i for i in range(1, grid.n_points - 1)
        if a[i] >= a[i - 1] and a[i] > a[i + 1] and a[i] > min_height
    ]
    coeff = np.fft.fft(a) / grid.n_points
    k = grid.wavenumbers
    x0 = grid.x_min

    def derivs(x):
        e = np.exp(1j * k * (x - x0))
        c = coeff * e
        return (c.sum().real, (1j * k * c).sum().real, (-(k ** 2) * c).sum().real)

    peaks = []
    for i in idx:
        x = grid.x[i]
        for _ in range(30):
            _, d1, d2 = derivs(x)
            if d2 >= 0:
                break
            step = -d1 / d2
            step = max(-grid.dx, min(grid.dx, step))
            x += step
            if abs(step) < 1e-14 * max(1.0, abs(x)):
                break
        peaks.append((float(x), float(derivs(x)[0])))
    peaks.sort(key=lambda p: -p[1])
    if n_peaks is not None:
        peaks = peaks[:n_peaks]
    return peaks
