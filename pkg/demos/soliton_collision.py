"""Two KdV solitons overtake each other and come out unchanged but shifted.

The exact two-soliton comes from the degenerate Marchenko kernel. Running
the same initial state through the pseudospectral integrator and tracking
the crests shows the position shifts: the tall soliton jumps forward by
(1/2) ln 3, the short one back by ln 3.
"""

import math

from istlab.fields import Grid1D, SolitonParams, locate_peaks
from istlab.oracles import IntegratorConfig, integrate_kdv
from istlab.solitons import NSolitonSpec, kdv_nsoliton

grid = Grid1D(-40.0, 40.0, 1024)
spec = NSolitonSpec((SolitonParams(eta=1.0, x0=-9.0), SolitonParams(eta=2.0, x0=-18.0)))
T = 1.5

u0 = kdv_nsoliton(spec, grid, 0.0)
run = integrate_kdv(u0, IntegratorConfig(dt=0.4 * grid.dx**3, t_end=T, snapshot_every=2000))


def crests(f):
    return sorted(locate_peaks(f, min_height=0.5, n_peaks=2), key=lambda p: p[1])


start = crests(u0)
for t, f in run:
    print(f"t = {t:5.3f}  crests: " + ", ".join(f"x = {x:8.4f} (h = {h:.4f})" for x, h in crests(f)))

end = crests(run[-1][1])
for (x0, h), (x1, _) in zip(start, end):
    free = x0 + 2 * h * T
    print(f"height {h:.3f}: shift {x1 - free:+.5f}")
print(f"expected: {-math.log(3):+.5f} and {math.log(3) / 2:+.5f}")
