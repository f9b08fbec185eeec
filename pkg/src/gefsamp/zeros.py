"""Zero extraction for truncated GEF samples, with winding-number certification."""

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ContourError, DomainError, NonConvergenceError
from .gef import eval_gef, eval_gef_ratio

_RESIDUAL_TOL = 1e-8
_MERGE_RADIUS = 1e-7
_BOUNDARY_EPS = 1e-9
_CONTOUR_MIN = 1e-6


@dataclass(frozen=True)
class ZeroSet:
    """Zeros of a sample inside a disk, with a count certificate."""

    points: np.ndarray
    disk_radius: float
    source: dict
    certified: bool
    residuals: np.ndarray
    multiplicities: np.ndarray
    near_boundary: np.ndarray
    diagnostic: str = ""

    def __len__(self):
        return int(self.multiplicities.sum())

    @classmethod
    def from_points(cls, points, disk_radius, source=None):
        """Wrap an externally generated point configuration (fixtures)."""
        pts = np.asarray(points, dtype=complex)
        return cls(
            points=pts,
            disk_radius=float(disk_radius),
            source=source or {"kind": "fixture"},
            certified=False,
            residuals=np.zeros(pts.size),
            multiplicities=np.ones(pts.size, dtype=int),
            near_boundary=np.zeros(pts.size, dtype=bool),
        )


def _newton_polygon_init(log_mags):
    """Initial Aberth guesses from the upper convex hull of (n, log|b_n|).

    Each hull edge estimates the moduli of the roots it accounts for; guesses
    are spread over three concentric circles per modulus class so clustered
    starts do not lock onto the same root.
    """
    finite = np.isfinite(log_mags)
    idx = np.nonzero(finite)[0]
    pts = [(int(i), float(log_mags[i])) for i in idx]
    # upper convex hull, left to right
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (p[0] - x1) >= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    guesses = []
    ring_factors = (0.85, 1.0, 1.18)
    golden = 0.7639320225
    for (n1, y1), (n2, y2) in zip(hull, hull[1:]):
        k = n2 - n1
        radius = math.exp((y1 - y2) / k)
        for j in range(k):
            fac = ring_factors[j % 3]
            ang = 2.0 * math.pi * (j / k + golden * (j % 3))
            guesses.append(radius * fac * np.exp(1j * ang))
    return np.asarray(guesses, dtype=complex)


def _horner_pair(coeffs, w):
    p = np.zeros(w.shape, dtype=complex)
    dp = np.zeros(w.shape, dtype=complex)
    for c in coeffs[::-1]:
        dp = dp * w + p
        p = p * w + c
    return p, dp


def _newton_ratio(coeffs, w):
    """p(w)/p'(w) without overflow: direct Horner inside the unit disk,
    reversed-polynomial Horner at 1/w outside it.  Returns (ratio, p_is_zero)."""
    n = coeffs.size - 1
    ratio = np.empty(w.shape, dtype=complex)
    zero = np.zeros(w.shape, dtype=bool)
    inner = np.abs(w) <= 1.0
    if np.any(inner):
        p, dp = _horner_pair(coeffs, w[inner])
        z = p == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio[inner] = np.where(z, 0.0, p / np.where(dp == 0, 1.0, dp))
        zero[inner] = z
    if np.any(~inner):
        u = 1.0 / w[~inner]
        q, dq = _horner_pair(coeffs[::-1], u)
        z = q == 0
        denom = n * q - u * dq
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio[~inner] = np.where(
                z, 0.0, w[~inner] * q / np.where(denom == 0, 1.0, denom)
            )
        zero[~inner] = z
    return ratio, zero


def aberth_roots(coeffs, tol=5e-14, max_iter=160):
    """All roots of sum_n coeffs[n] w^n by Aberth-Ehrlich simultaneous iteration.

    Returns (roots, origin_multiplicity).  Raises NonConvergenceError with the
    per-sweep correction trace if the iteration stalls.
    """
    b = np.asarray(coeffs, dtype=complex)
    mags = np.abs(b)
    peak = mags.max()
    if peak == 0:
        raise DomainError("zero polynomial")
    keep = mags > peak * 1e-250
    first = int(np.argmax(keep))
    last = len(b) - 1 - int(np.argmax(keep[::-1]))
    origin_mult = first
    b = b[first : last + 1]
    if b.size == 1:
        return np.empty(0, dtype=complex), origin_mult
    with np.errstate(divide="ignore"):
        logm = np.log(np.abs(b))
    w = _newton_polygon_init(logm)
    n = b.size - 1
    if w.size != n:  # degenerate hull; fall back to a single circle
        w = 1.2 * np.exp(2j * math.pi * (np.arange(n) + 0.37) / n)
    trace = []
    for _ in range(max_iter):
        newton, _ = _newton_ratio(b, w)
        with np.errstate(divide="ignore", invalid="ignore"):
            diff = w[:, None] - w[None, :]
            np.fill_diagonal(diff, np.inf)
            s = np.sum(1.0 / diff, axis=1)
            corr = newton / (1.0 - newton * s)
        corr = np.where(np.isfinite(corr), corr, newton)
        w = w - corr
        worst = float(np.max(np.abs(corr) / (1.0 + np.abs(w))))
        trace.append(worst)
        if worst < tol:
            return w, origin_mult
    raise NonConvergenceError(
        f"Aberth stalled at correction {trace[-1]:.3g} after {max_iter} sweeps",
        trace=trace,
    )


class WindingResult(NamedTuple):
    count: int
    radius: float
    min_modulus: float


def argument_increment(fn: Callable, radius, center=0j, initial_nodes=256,
                       max_rounds=14, step_limit=math.pi / 4):
    """Total argument increment of fn around a circle, over 2*pi.

    Adaptively bisects angular intervals until all successive phase steps are
    below ``step_limit``.  Returns (integer winding, min |fn| seen).
    """
    theta = np.linspace(0.0, 2.0 * math.pi, initial_nodes, endpoint=False)
    vals = fn(center + radius * np.exp(1j * theta))
    for _ in range(max_rounds):
        phases = np.angle(vals)
        diffs = np.diff(np.append(phases, phases[0]))
        diffs = (diffs + math.pi) % (2.0 * math.pi) - math.pi
        bad = np.abs(diffs) >= step_limit
        if not np.any(bad):
            total = diffs.sum() / (2.0 * math.pi)
            count = int(round(total))
            if abs(total - count) > 0.05:
                bad = np.ones_like(bad)
            else:
                return count, float(np.min(np.abs(vals)))
        idx = np.nonzero(bad)[0]
        thetas_next = np.append(theta, theta[0] + 2.0 * math.pi)
        mids = 0.5 * (thetas_next[idx] + thetas_next[idx + 1])
        mid_vals = fn(center + radius * np.exp(1j * mids))
        pos = np.searchsorted(theta, mids)
        theta = np.insert(theta, pos, mids)
        vals = np.insert(vals, pos, mid_vals)
    raise ContourError("argument increment failed to settle; contour too close to a zero")


def winding_count(F, R):
    """Zeros of F enclosed by |z| = R via the argument principle.

    If the contour passes too close to a zero the radius is nudged by +-0.3%
    steps (up to 8 tries) to maximize the contour minimum; the radius actually
    used is reported in the result.
    """
    if R + 0.1 > F.validity_radius:
        raise DomainError("contour radius exceeds validity disk")

    def fstar(zs):
        return eval_gef(F, zs, normalized=True)

    # enough initial nodes that no interval can hide a full phase turn
    expected = min(F.truncation_N, math.ceil(F.intensity_L * R * R) + 16)
    nodes = max(256, 8 * expected)
    radii = [R]
    for k in range(1, 5):
        radii.extend([R * (1 + 0.003 * k), R * (1 - 0.003 * k)])
    radii = [r for r in radii[:9] if r + 0.1 <= F.validity_radius or r <= R]
    best = None
    for r in radii:
        theta = np.linspace(0.0, 2.0 * math.pi, 512, endpoint=False)
        m = float(np.min(np.abs(fstar(r * np.exp(1j * theta)))))
        if best is None or m > best[1]:
            best = (r, m)
        if m >= _CONTOUR_MIN:
            break
    r_used, min_mod = best
    if min_mod < _CONTOUR_MIN:
        raise ContourError(
            f"contour minimum {min_mod:.3g} below {_CONTOUR_MIN} after nudging"
        )
    count, seen_min = argument_increment(fstar, r_used, initial_nodes=nodes)
    return WindingResult(count, r_used, min(min_mod, seen_min))


def _merge_clusters(points):
    """Group points closer than the merge radius; returns (reps, multiplicities)."""
    pts = list(points)
    used = np.zeros(len(pts), dtype=bool)
    reps, mult = [], []
    for i, p in enumerate(pts):
        if used[i]:
            continue
        cluster = [p]
        used[i] = True
        for j in range(i + 1, len(pts)):
            if not used[j] and abs(pts[j] - p) < _MERGE_RADIUS:
                cluster.append(pts[j])
                used[j] = True
        reps.append(np.mean(cluster))
        mult.append(len(cluster))
    return np.asarray(reps, dtype=complex), np.asarray(mult, dtype=int)


def find_zeros(F, R):
    """All zeros of F in the closed disk of radius R, winding-certified.

    Roots are found by Aberth iteration on the rescaled variable w = z/(R+0.5)
    and polished with Newton steps on the full series.
    """
    rho = R + 0.5
    if rho > F.validity_radius * (1 + 1e-12):
        raise DomainError("need R + 0.5 <= validity radius")
    ns = np.arange(F.truncation_N + 1)
    log_b = F.log_mags + ns * math.log(rho)
    norm = np.max(log_b)
    with np.errstate(under="ignore"):
        b = F.phases * np.exp(log_b - norm)
    roots_w, origin_mult = aberth_roots(b)
    roots = roots_w * rho
    # polish candidates near the target disk on the original series
    cand = roots[np.abs(roots) <= (R + 0.4)]
    for _ in range(3):
        if cand.size == 0:
            break
        step = eval_gef_ratio(F, cand)
        step = np.where(np.isfinite(step), step, 0.0)
        cand = cand - step
    all_roots = np.concatenate([np.zeros(origin_mult, dtype=complex), cand])
    wind = winding_count(F, R)
    inside = all_roots[np.abs(all_roots) <= wind.radius]
    kept = all_roots[np.abs(all_roots) <= R + _BOUNDARY_EPS]
    points, mult = _merge_clusters(kept)
    near_boundary = np.abs(np.abs(points) - R) <= _BOUNDARY_EPS
    residuals = np.abs(eval_gef(F, points, normalized=True)) if points.size else np.zeros(0)
    diagnostic = ""
    certified = True
    if inside.size != wind.count:
        certified = False
        diagnostic = (
            f"winding count {wind.count} at radius {wind.radius:.6g} but "
            f"{inside.size} roots located"
        )
    if points.size and float(np.max(residuals)) >= _RESIDUAL_TOL:
        certified = False
        diagnostic = (diagnostic + "; " if diagnostic else "") + (
            f"max residual {np.max(residuals):.3g} above {_RESIDUAL_TOL}"
        )
    if F.source == "gef" and np.any(mult > 1):
        warnings.warn(
            "multiple zero reported for a GEF sample; almost surely a numerical artifact",
            stacklevel=2,
        )
    return ZeroSet(
        points=points,
        disk_radius=float(R),
        source={"kind": F.source, "seed": F.seed, "L": F.intensity_L, "N": F.truncation_N,
                "winding_radius": wind.radius},
        certified=certified,
        residuals=residuals,
        multiplicities=mult,
        near_boundary=near_boundary,
        diagnostic=diagnostic,
    )
