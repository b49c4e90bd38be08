import math

import numpy as np

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo, hi, tol):
    """Maximize a unimodal ``f`` on [lo, hi]; returns (x, f(x), evaluations)."""
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        evals += 1
    # the bracket ends are candidates too: optima on the boundary are common
    cands = [(fc, c), (fd, d), (f(lo), float(lo)), (f(hi), float(hi))]
    evals += 2
    best_f, best_x = max(cands, key=lambda t: t[0])
    return best_x, best_f, evals


def grid_then_golden(f, lo, hi, tol, n_grid):
    """Dense grid scan, then golden-section inside the best grid cell's neighbours."""
    grid = np.linspace(lo, hi, n_grid)
    vals = np.array([f(x) for x in grid])
    i = int(np.argmax(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n_grid - 1)]
    x, fx, evals = golden_section_max(f, a, b, tol)
    if vals[i] > fx:
        x, fx = float(grid[i]), float(vals[i])
    return x, fx, evals + n_grid
