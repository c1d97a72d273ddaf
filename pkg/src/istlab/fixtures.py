"""Named initial data used by the command line and the test-suite."""

import numpy as np

from .fields import Grid1D, SampledField, sample

REFERENCE_GRID = Grid1D(-30.0, 30.0, 1024)

_FIXTURES = {
    "zero": (lambda x: np.zeros_like(x), "real"),
    "sech2_h1": (lambda x: 2.0 / np.cosh(x) ** 2, "real"),
    "sech2_h6": (lambda x: 6.0 / np.cosh(x) ** 2, "real"),
    "gauss_small": (lambda x: 0.5 * np.exp(-x**2), "real"),
    # focusing NLS soliton with eta = 1/2: 2 eta sech(2 eta x)
    "nls_sol_h05": (lambda x: (1.0 / np.cosh(x)).astype(complex), "complex"),
    "mkdv_odd": (lambda x: x * np.exp(-x**2), "real"),
}

NAMES = tuple(_FIXTURES)


def fixture(name: str, grid: Grid1D = REFERENCE_GRID) -> SampledField:
    try:
        f, kind = _FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(NAMES)}") from None
    out = sample(grid, f, kind)
    return SampledField(grid, out.values, kind, {"fixture": name})
