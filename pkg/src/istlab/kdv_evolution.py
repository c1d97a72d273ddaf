"""Closed-form time dependence of KdV scattering data.

For ``u_t + u_xxx + 6 u u_x = 0`` written with ``psi'' + (u + k^2) psi = 0``:

    rho(k; t) = rho(k; 0) e^{8 i k^3 t}
    C_j(t)    = C_j(0) e^{s 8 kappa_j^3 t}
    kappa_j   unchanged.

The sign ``s`` depends on how ``C_j`` is normalised. With ``C = 1/int psi^2``
and ``psi ~ e^{-kappa x}`` at +inf, a single soliton has ``C = 2 eta e^{2 eta x0}``,
and a soliton moving right at speed ``4 eta^2`` needs ``s = +1``. This was
confirmed against the pseudospectral integrator and is hard-coded as
``RESOLVED_SIGN``; see ``tests/test_kdv_evolution.py`` for the check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import errors
from .fields import SampledField
from .schrodinger import SchrodingerScatteringData, bound_states

__all__ = ["KdvFlowClock", "RESOLVED_SIGN", "evolve_scattering_data", "isospectrality_check"]

SIGNS = {"minus": -1, "resolved_plus": +1}
RESOLVED_SIGN = "resolved_plus"
EXP_LIMIT = 700.0


@dataclass(frozen=True)
class KdvFlowClock:
    t: float
    sign_convention: str = RESOLVED_SIGN

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ValueError(f"t must be finite, got {self.t}")
        if self.sign_convention not in SIGNS:
            raise ValueError(f"unknown sign convention {self.sign_convention!r}")

    @property
    def sign(self) -> int:
        return SIGNS[self.sign_convention]


def evolve_scattering_data(data: SchrodingerScatteringData, clock: KdvFlowClock) -> SchrodingerScatteringData:
    """Advance scattering data by ``clock.t``; the time recorded in
    ``data.meta['t']`` (default 0) is advanced likewise."""
    t = float(clock.t)
    s = clock.sign
    expo = s * 8.0 * data.kappas**3 * t
    bad = np.flatnonzero(np.abs(expo) > EXP_LIMIT)
    if bad.size:
        j = int(bad[0])
        raise errors.EvolutionRangeError(
            f"bound state j={j} (kappa={data.kappas[j]:g}): |8 kappa^3 t| = {abs(expo[j]):.1f} "
            f"exceeds {EXP_LIMIT:g}", where="kdv_evolution.evolve_scattering_data")
    if t == 0:
        rho, cn = data.rho, data.norming
    else:
        rho = data.rho * np.exp(8j * data.k**3 * t)
        cn = data.norming * np.exp(expo)
    meta = dict(data.meta)
    meta["t"] = float(meta.get("t", 0.0)) + t
    meta["sign_convention"] = clock.sign_convention
    return SchrodingerScatteringData(k=data.k, rho=rho, a=data.a, kappas=data.kappas,
                                     norming=cn, meta=meta)


def isospectrality_check(trajectory: Sequence[tuple[float, SampledField]]) -> float:
    """Worst drift of the bound-state eigenvalues along a trajectory."""
    ref = None
    worst = 0.0
    for t, u in trajectory:
        kap, _ = bound_states(u)
        if ref is None:
            ref = kap
            continue
        if kap.size != ref.size:
            raise errors.SpectralCountError(
                f"bound-state count changed from {ref.size} to {kap.size} at t = {t}",
                where="kdv_evolution.isospectrality_check")
        if kap.size:
            worst = max(worst, float(np.max(np.abs(kap - ref))))
    return worst
