"""Independent reference computations for the test-suite.

None of these share code with the package: they use piecewise-constant
transfer matrices, dense finite-difference or Fourier matrices, and a Sturm
count, all on their own grids.
"""

import numpy as np
from scipy import linalg, optimize


def _cells(f, x_min, x_max, n_cells):
    h = (x_max - x_min) / n_cells
    mid = x_min + h * (np.arange(n_cells) + 0.5)
    return h, f(mid)


def schrodinger_transfer(f, k, x_min=-30.0, x_max=30.0, n_cells=20000):
    """(a, b) for psi'' + (u + k^2) psi = 0 with psi = e^{-ikx} at x_min,
    using exact propagation through cells of constant u."""
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    h, u = _cells(f, x_min, x_max, n_cells)
    psi = np.exp(-1j * k * x_min)
    dpsi = -1j * k * psi
    for uc in u:
        p = np.sqrt(uc + k * k + 0j)
        c = np.cos(p * h)
        s = np.where(np.abs(p) > 1e-12, np.sin(p * h) / np.where(p == 0, 1, p), h)
        psi, dpsi = c * psi + s * dpsi, -p * p * s * psi + c * dpsi
    e = np.exp(1j * k * x_max)
    a = (1j * k * psi - dpsi) * e / (2j * k)
    b = (1j * k * psi + dpsi) / e / (2j * k)
    return a, b


def schrodinger_rho(f, k, **kw):
    """rho = b/a from two transfer-matrix resolutions with Richardson
    extrapolation (the cell rule is second order)."""
    n = kw.pop("n_cells", 20000)
    a1, b1 = schrodinger_transfer(f, k, n_cells=n, **kw)
    a2, b2 = schrodinger_transfer(f, k, n_cells=2 * n, **kw)
    r1, r2 = b1 / a1, b2 / a2
    return (4 * r2 - r1) / 3


def fd_matrix(f, x_min, x_max, n):
    x = np.linspace(x_min, x_max, n)
    h = x[1] - x[0]
    return x, h, -2.0 / h**2 + f(x), np.full(n - 1, 1.0 / h**2)


def sturm_count(f, x_min=-30.0, x_max=30.0, n=3000, shift=0.0):
    """Number of eigenvalues of the FD operator d^2/dx^2 + u above ``shift``
    (Dirichlet ends), from the signs of the LDL^T pivots."""
    _, _, d, e = fd_matrix(f, x_min, x_max, n)
    # eigenvalues of T above shift = negative pivots of (shift I - T)
    count = 0
    piv = shift - d[0]
    count += piv < 0
    for i in range(1, n):
        piv = (shift - d[i]) - e[i - 1] ** 2 / piv
        count += piv < 0
    return int(count)


def fd_bound_states(f, x_min=-30.0, x_max=30.0, n=6000, fit_at=10.0):
    """(kappa, C) from a dense FD eigenproblem: C = c^2 where the unit-norm
    eigenfunction behaves as c e^{-kappa x} in the right tail."""
    x, h, d, e = fd_matrix(f, x_min, x_max, n)
    w, v = linalg.eigh_tridiagonal(d, e, select="v", select_range=(1e-8, float(np.max(d + 2 / h**2)) + 1))
    out = []
    for lam, vec in zip(w[::-1], v.T[::-1]):
        vec = vec / np.sqrt(np.sum(vec**2) * h)
        kap = np.sqrt(lam)
        i = np.argmin(np.abs(x - fit_at))
        c = vec[i] * np.exp(kap * x[i])
        out.append((kap, c * c))
    return out


def richardson_bound_states(f, n=6000, **kw):
    lo = fd_bound_states(f, n=n, **kw)
    hi = fd_bound_states(f, n=2 * n - 1, **kw)
    return [((4 * k2 - k1) / 3, (4 * c2 - c1) / 3) for (k1, c1), (k2, c2) in zip(lo, hi)]


def zs_transfer(q, r, zeta, x_min=-30.0, x_max=30.0, n_cells=20000):
    """(a, b) for the ZS system through cells with constant (q, r)."""
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    h, qc = _cells(q, x_min, x_max, n_cells)
    _, rc = _cells(r, x_min, x_max, n_cells)
    v1 = np.exp(-1j * zeta * x_min)
    v2 = np.zeros_like(v1)
    for qq, rr in zip(qc, rc):
        lam = np.sqrt(qq * rr - zeta * zeta + 0j)
        ch = np.cosh(lam * h)
        sh = np.where(np.abs(lam) > 1e-14, np.sinh(lam * h) / np.where(lam == 0, 1, lam), h)
        v1, v2 = ch * v1 + sh * (-1j * zeta * v1 + qq * v2), ch * v2 + sh * (rr * v1 + 1j * zeta * v2)
    return v1 * np.exp(1j * zeta * x_max), v2 * np.exp(-1j * zeta * x_max)


def zs_dense_eigenvalues(q, r, x_min=-30.0, x_max=30.0, n=512, min_imag=0.05):
    """Eigenvalues of [[i d/dx, -i q], [i r, -i d/dx]] with Fourier
    differentiation. Only those with Im > min_imag and |Re| below a quarter
    of the Nyquist wavenumber are kept; the discretised continuum produces
    spurious modes with small imaginary parts near the real axis and near
    the Nyquist edge."""
    L = x_max - x_min
    x = x_min + L * np.arange(n) / n
    k = 2 * np.pi * np.fft.fftfreq(n, d=L / n)
    F = np.fft.fft(np.eye(n), axis=0)
    D = np.fft.ifft(1j * k[:, None] * F, axis=0)
    Q = np.diag(q(x).astype(complex))
    R = np.diag(r(x).astype(complex))
    M = np.block([[1j * D, -1j * Q], [1j * R, -1j * D]])
    w = np.linalg.eigvals(M)
    w = w[(w.imag > min_imag) & (np.abs(w.real) < 0.25 * np.pi * n / L)]
    return np.sort_complex(w)


def kdv_soliton(x, eta, x0, t):
    """Travelling KdV soliton moving at 4 eta^2."""
    return 2 * eta**2 / np.cosh(eta * (x - x0 - 4 * eta**2 * t)) ** 2


def root(f, lo, hi):
    return optimize.brentq(f, lo, hi, xtol=1e-15)
