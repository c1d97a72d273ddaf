"""Fixed-step RK4 marching of two-component linear systems along a grid.

Both eigenvalue problems are written in variation-of-constants form: the
solution is split onto the two free plane waves, ``A(x) e^{-ikx} + B(x) e^{ikx}``
(or the ZS analogue), so ``(A, B)`` is constant wherever the potential has
decayed. The connection coefficients are then simply the values of ``A`` and
``B`` at the far end of the march.

Potential values between nodes come from band-limited (FFT) interpolation of
the node samples, which keeps the stage values as accurate as the samples.
All spectral parameters advance together as one vector.
"""

import numpy as np

from .fields import Grid1D, shifted_samples


def fine_samples(values, grid: Grid1D, substeps: int):
    """Samples on the grid refined by ``2*substeps`` (RK4 needs half steps)."""
    m2 = 2 * substeps
    n = grid.n_points
    v = np.asarray(values)
    out = np.empty((n - 1) * m2 + 1, dtype=v.dtype)
    for j in range(m2):
        if j == 0:
            out[0::m2] = v
        else:
            out[j::m2] = shifted_samples(v, grid, j / m2)[: n - 1]
    xs = grid.x_min + np.arange(out.size) * (grid.dx / m2)
    xs[-1] = grid.x_max
    return xs, out


# Below this many lanes the per-call numpy overhead dominates; plain Python
# complex arithmetic is several times faster.
_SCALAR_LANES = 6


def _scalar_lanes(lane, x, coeffs, A, B, store_every):
    xl = x.tolist()
    outA, outB, hists = [], [], []
    for j in range(A.size):
        cols = [c[:, j].tolist() for c in coeffs]
        a, b, h = lane(xl, cols, complex(A[j]), complex(B[j]), store_every)
        outA.append(a)
        outB.append(b)
        hists.append(h)
    A = np.array(outA, dtype=np.complex128)
    B = np.array(outB, dtype=np.complex128)
    if not store_every:
        return A, B, None
    hist = [(np.array([h[i][0] for h in hists]), np.array([h[i][1] for h in hists]))
            for i in range(len(hists[0]))]
    return A, B, hist


def _schrodinger_lane(x, cols, A, B, store_every):
    c, E, Ei = cols
    hist = [(A, B)] if store_every else None
    count = 0
    for l in range(0, len(x) - 1, 2):
        h = x[l + 2] - x[l]
        hh = 0.5 * h
        c0, c1, c2 = c[l], c[l + 1], c[l + 2]
        e0, e1, e2 = E[l], E[l + 1], E[l + 2]
        i0, i1, i2 = Ei[l], Ei[l + 1], Ei[l + 2]
        k1a = -c0 * (A + B * e0)
        k1b = c0 * (A * i0 + B)
        a2 = A + hh * k1a
        b2 = B + hh * k1b
        k2a = -c1 * (a2 + b2 * e1)
        k2b = c1 * (a2 * i1 + b2)
        a3 = A + hh * k2a
        b3 = B + hh * k2b
        k3a = -c1 * (a3 + b3 * e1)
        k3b = c1 * (a3 * i1 + b3)
        a4 = A + h * k3a
        b4 = B + h * k3b
        k4a = -c2 * (a4 + b4 * e2)
        k4b = c2 * (a4 * i2 + b4)
        A = A + (h / 6) * (k1a + 2 * k2a + 2 * k3a + k4a)
        B = B + (h / 6) * (k1b + 2 * k2b + 2 * k3b + k4b)
        count += 1
        if hist is not None and count % store_every == 0:
            hist.append((A, B))
    return A, B, hist


def _zs_lane(x, cols, A, B, store_every):
    q, r = cols
    hist = [(A, B)] if store_every else None
    count = 0
    for l in range(0, len(x) - 1, 2):
        h = x[l + 2] - x[l]
        hh = 0.5 * h
        q1, r1 = q[l + 1], r[l + 1]
        k1a = q[l] * B
        k1b = r[l] * A
        k2a = q1 * (B + hh * k1b)
        k2b = r1 * (A + hh * k1a)
        k3a = q1 * (B + hh * k2b)
        k3b = r1 * (A + hh * k2a)
        k4a = q[l + 2] * (B + h * k3b)
        k4b = r[l + 2] * (A + h * k3a)
        A = A + (h / 6) * (k1a + 2 * k2a + 2 * k3a + k4a)
        B = B + (h / 6) * (k1b + 2 * k2b + 2 * k3b + k4b)
        count += 1
        if hist is not None and count % store_every == 0:
            hist.append((A, B))
    return A, B, hist


def _stages(xs, lam, backwards):
    last = xs.size - 1
    idx = np.arange(last, -1, -1) if backwards else np.arange(last + 1)
    e = np.exp(2j * np.outer(xs[idx], lam))
    return idx, e


def march_schrodinger(xs, us, k, backwards=False, store_every=0):
    """March ``psi'' + (u + k^2) psi = 0`` in the ``(A, B)`` split.

    Forward marches start from ``psi = e^{-ikx}`` (A=1, B=0) at the left end;
    backward marches start from ``psi = e^{ikx}`` (A=0, B=1) at the right end.
    ``k`` may be a complex array. Returns ``(A, B, history)`` where history
    holds ``(A, B)`` every ``store_every`` steps (starting point included).
    """
    k = np.atleast_1d(np.asarray(k, dtype=np.complex128))
    idx, E = _stages(xs, k, backwards)
    Einv = 1.0 / E
    c = (0.5j / k)[None, :] * np.asarray(us)[idx][:, None]
    x = xs[idx]
    if backwards:
        A, B = np.zeros_like(k), np.ones_like(k)
    else:
        A, B = np.ones_like(k), np.zeros_like(k)
    if k.size <= _SCALAR_LANES:
        return _scalar_lanes(_schrodinger_lane, x, (c, E, Einv), A, B, store_every)
    hist = [(A, B)] if store_every else None
    count = 0
    for l in range(0, idx.size - 1, 2):
        h = x[l + 2] - x[l]
        c0, c1, c2 = c[l], c[l + 1], c[l + 2]
        e0, e1, e2 = E[l], E[l + 1], E[l + 2]
        i0, i1, i2 = Einv[l], Einv[l + 1], Einv[l + 2]
        k1a = -c0 * (A + B * e0)
        k1b = c0 * (A * i0 + B)
        a2, b2 = A + 0.5 * h * k1a, B + 0.5 * h * k1b
        k2a = -c1 * (a2 + b2 * e1)
        k2b = c1 * (a2 * i1 + b2)
        a3, b3 = A + 0.5 * h * k2a, B + 0.5 * h * k2b
        k3a = -c1 * (a3 + b3 * e1)
        k3b = c1 * (a3 * i1 + b3)
        a4, b4 = A + h * k3a, B + h * k3b
        k4a = -c2 * (a4 + b4 * e2)
        k4b = c2 * (a4 * i2 + b4)
        A = A + (h / 6) * (k1a + 2 * k2a + 2 * k3a + k4a)
        B = B + (h / 6) * (k1b + 2 * k2b + 2 * k3b + k4b)
        count += 1
        if hist is not None and count % store_every == 0:
            hist.append((A, B))
    return A, B, hist


def march_zs(xs, qs, rs, zeta, store_every=0):
    """March the ZS system from the left with ``v = (e^{-i zeta x}, 0)``.

    With ``v1 = A e^{-i zeta x}`` and ``v2 = B e^{i zeta x}``:
    ``A' = q B e^{2 i zeta x}``, ``B' = r A e^{-2 i zeta x}``.
    """
    zeta = np.atleast_1d(np.asarray(zeta, dtype=np.complex128))
    idx, E = _stages(xs, zeta, False)
    Einv = 1.0 / E
    q = np.asarray(qs, dtype=np.complex128)[:, None] * E
    r = np.asarray(rs, dtype=np.complex128)[:, None] * Einv
    x = xs
    A, B = np.ones_like(zeta), np.zeros_like(zeta)
    if zeta.size <= _SCALAR_LANES:
        return _scalar_lanes(_zs_lane, x, (q, r), A, B, store_every)
    hist = [(A, B)] if store_every else None
    count = 0
    for l in range(0, xs.size - 1, 2):
        h = x[l + 2] - x[l]
        q0, q1, q2 = q[l], q[l + 1], q[l + 2]
        r0, r1, r2 = r[l], r[l + 1], r[l + 2]
        k1a, k1b = q0 * B, r0 * A
        a2, b2 = A + 0.5 * h * k1a, B + 0.5 * h * k1b
        k2a, k2b = q1 * b2, r1 * a2
        a3, b3 = A + 0.5 * h * k2a, B + 0.5 * h * k2b
        k3a, k3b = q1 * b3, r1 * a3
        a4, b4 = A + h * k3a, B + h * k3b
        k4a, k4b = q2 * b4, r2 * a4
        A = A + (h / 6) * (k1a + 2 * k2a + 2 * k3a + k4a)
        B = B + (h / 6) * (k1b + 2 * k2b + 2 * k3b + k4b)
        count += 1
        if hist is not None and count % store_every == 0:
            hist.append((A, B))
    return A, B, hist
