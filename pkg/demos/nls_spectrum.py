"""Nonlinear Fourier spectrum of an NLS pulse.

A sech pulse of amplitude A under the focusing Zakharov-Shabat operator has
eigenvalues i(A - n - 1/2) for n < A - 1/2. Each one is a soliton that
survives propagation; the rest of the energy is radiation.
"""

import numpy as np

from istlab.fields import sample
from istlab.fixtures import REFERENCE_GRID
from istlab.zs import zs_coefficients, zs_eigenvalues

grid = REFERENCE_GRID
for A in (0.4, 1.0, 1.2, 2.3):
    q = sample(grid, lambda x: A / np.cosh(x) + 0j, "complex")
    z, b, _ = zs_eigenvalues(q, "focusing_nls")
    expected = [round(A - n - 0.5, 10) for n in range(int(np.ceil(A - 0.5)))]
    d = zs_coefficients(q, "focusing_nls", np.linspace(-3, 3, 61))
    print(f"A = {A}: eigenvalues {np.round(z, 8).tolist()}  expected Im = {expected}  "
          f"max |b| on the real line = {np.max(np.abs(d.b)):.3e}")
