"""Small shared numerics helpers."""

import numpy as np


def log_star(x):
    """max(1, log x), elementwise; defined as 1 for x <= e (and any x <= 0)."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    np.log(x, out=out, where=x > np.e)
    if out.ndim == 0:
        return float(out)
    return out


def complex_grid(radius, n, center=0j, jitter=0.0, seed=0):
    """n*n points covering the square [-radius, radius]^2 around center,
    restricted to the disk of that radius.  Optional jitter (as a fraction of
    the cell size) breaks lattice-symmetry artifacts in audits."""
    step = 2.0 * radius / n
    ax = -radius + step * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(ax, ax)
    pts = X.ravel() + 1j * Y.ravel()
    if jitter > 0.0:
        rng = np.random.Generator(np.random.Philox(key=seed))
        dx, dy = rng.uniform(-jitter, jitter, size=(2, pts.size)) * step
        pts = pts + dx + 1j * dy
    pts = pts + center
    return pts[np.abs(pts - center) <= radius]


def kahan_sum(values):
    """Compensated sum of a 1-d complex array (values assumed pre-sorted)."""
    total = 0.0 + 0.0j
    comp = 0.0 + 0.0j
    for v in values:
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total
