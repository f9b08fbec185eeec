"""Separation statistics, lattice matching, and growth-profile condition audits."""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .assignment import certify_optimal, min_cost_assignment
from .errors import DomainError, InsufficientPointsError
from .util import log_star


@dataclass(frozen=True)
class GrowthProfile:
    """The slowly-growing profiles steering the perturbed-lattice and
    separation conditions:

        T(r) = log*(r)^(1/4) * log*(log*(r))
        S(r) = exp(-T(r)^2 * log*(T(r))^4)
        kappa(r) = r^2 / log*(r)^2

    together with the crossover radius r0 solving 2 T(r0) = r0.
    """

    beta: float = 1.0

    def __post_init__(self):
        if self.beta < 1:
            raise ValueError("beta must be >= 1")

    @staticmethod
    def log_star(x):
        return log_star(x)

    def T(self, r):
        ls = log_star(r)
        return ls**0.25 * log_star(ls)

    def S(self, r):
        t = self.T(r)
        return np.exp(-(t**2) * log_star(t) ** 4)

    def kappa(self, r):
        r = np.asarray(r, dtype=float)
        out = r**2 / log_star(r) ** 2
        return float(out) if out.ndim == 0 else out

    @cached_property
    def r0(self):
        """Unique solution of 2 T(r) = r on [2, inf); bisection to 1e-12."""
        def u(r):
            return r - 2.0 * self.T(r)

        lo, hi = 2.0, 1e6
        if u(lo) >= 0.0:
            return lo
        if u(hi) <= 0.0:
            raise DomainError("no crossover radius below 1e6")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if u(mid) <= 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-12:
                break
        return 0.5 * (lo + hi)


def _points_of(Z):
    return np.asarray(Z.points if hasattr(Z, "points") else Z, dtype=complex)


def nearest_separation(Z):
    """Distance from each point to its closest neighbor, aligned with Z.points."""
    pts = _points_of(Z)
    if pts.size < 2:
        raise InsufficientPointsError("need at least 2 points")
    xy = np.column_stack([pts.real, pts.imag])
    tree = cKDTree(xy)
    dists, _ = tree.query(xy, k=2)
    return dists[:, 1]


def product_separation(Z, radius=1.0):
    """Product of distances to all neighbors within ``radius``; empty product = 1."""
    pts = _points_of(Z)
    out = np.ones(pts.size)
    if pts.size < 2:
        return out
    xy = np.column_stack([pts.real, pts.imag])
    tree = cKDTree(xy)
    for i, nbrs in enumerate(tree.query_ball_point(xy, radius)):
        ds = [abs(pts[i] - pts[j]) for j in nbrs if j != i]
        if ds:
            out[i] = float(np.prod(ds))
    return out


@dataclass(frozen=True)
class LatticeMatching:
    """Minimum total squared displacement coupling of zeros to lattice sites."""

    lattice_spacing: float
    window_radius: float
    pairs: list                    # ((m, n), zero_index)
    displacements: np.ndarray      # xi = sqrt(L) * (z - lambda), aligned with pairs
    unmatched_zeros: list
    unmatched_sites: list
    intensity_L: float
    optimal_certified: bool
    total_cost: float

    def site(self, m, n):
        return self.lattice_spacing * (m + 1j * n)

    def node_positions(self, points):
        """(m, n) -> matched zero position, for every pair."""
        return {mn: complex(points[i]) for mn, i in self.pairs}


def lattice_sites(L, radius):
    """All (m, n) with |lambda_mn| <= radius, and their positions."""
    spacing = math.sqrt(math.pi / L)
    k = int(math.floor(radius / spacing)) + 1
    mm = np.arange(-k, k + 1)
    M, N = np.meshgrid(mm, mm, indexing="ij")
    lam = spacing * (M + 1j * N)
    keep = np.abs(lam) <= radius + 1e-12
    return list(zip(M[keep].tolist(), N[keep].tolist())), lam[keep]


def match_lattice(Z, L, window):
    """Couple zeros to the lattice sqrt(pi/L) Z^2 inside a window.

    Candidate edges are limited to 6 * spacing * log*(window); sites or zeros
    that can only be matched beyond that range are reported as unmatched
    rather than forced into bad pairs.
    """
    spacing = math.sqrt(math.pi / L)
    pts = _points_of(Z)
    disk = getattr(Z, "disk_radius", np.inf)
    if window + 3.0 * spacing > disk * (1 + 1e-12):
        raise DomainError("window + 3 spacings must fit inside the zero-set disk")
    sites, lam = lattice_sites(L, window)
    cand = np.abs(pts) <= window + 3.0 * spacing
    zero_idx = np.nonzero(cand)[0]
    zpts = pts[zero_idx]
    max_edge = 6.0 * spacing * log_star(window)
    if zpts.size == 0 or lam.size == 0:
        return LatticeMatching(spacing, window, [], np.zeros(0, complex),
                               zero_idx.tolist(), sites, L, True, 0.0)
    dist = np.abs(zpts[:, None] - lam[None, :])
    big = max(1.0, max_edge**2) * 1e6
    cost = np.where(dist <= max_edge, dist**2, big)
    transposed = cost.shape[0] > cost.shape[1]
    work = cost.T if transposed else cost
    col4row, u, v = min_cost_assignment(work)
    certified = certify_optimal(work, col4row, u, v)
    pairs = []
    matched_rows = set()
    matched_cols = set()
    for r_i, c_i in enumerate(col4row):
        zi, si = (c_i, r_i) if transposed else (r_i, c_i)
        if dist[zi, si] <= max_edge:
            pairs.append((sites[si], int(zero_idx[zi])))
            matched_rows.add(zi)
            matched_cols.add(si)
    xi = np.array(
        [math.sqrt(L) * (pts[i] - spacing * (mn[0] + 1j * mn[1])) for mn, i in pairs],
        dtype=complex,
    )
    unmatched_zeros = [int(zero_idx[i]) for i in range(zpts.size) if i not in matched_rows]
    unmatched_sites = [sites[j] for j in range(lam.size) if j not in matched_cols]
    total = float(np.sum(np.abs(xi / math.sqrt(L)) ** 2))
    return LatticeMatching(spacing, window, pairs, xi, unmatched_zeros,
                           unmatched_sites, L, certified, total)


@dataclass(frozen=True)
class ConditionReport:
    """Structured outcome of the perturbed-lattice / separation audits."""

    violations_perturbed: list           # ((m, n), zero_index, |z - lambda|, threshold)
    n_pairs: int
    max_ratio_shifted: float             # threshold S(2e|w| + R_offset)
    max_ratio_plain: float               # threshold S(|w|)
    n_bad_shifted: int
    n_bad_plain: int
    radii: np.ndarray
    empirical_c: float

    @property
    def perturbed_ok(self):
        return not self.violations_perturbed


def condition_report(Z, M, P, R_offset, radii=None):
    """Audit the perturbed-lattice and separation conditions on real data.

    Part (I) lists matched pairs whose displacement exceeds T(|lambda| + R).
    Part (II) slides balls over a hexagonal center grid and reports the worst
    ratio of badly-separated point counts to kappa(r), for both threshold
    variants in circulation (shifted argument and plain |w|).
    """
    pts = _points_of(Z)
    violations = []
    for mn, i in M.pairs:
        lam = M.site(*mn)
        thresh = float(P.T(abs(lam) + R_offset))
        gap = abs(pts[i] - lam)
        if gap > thresh:
            violations.append((mn, i, gap, thresh))
    sz = product_separation(Z)
    bad_shift = sz <= P.S(2.0 * math.e * np.abs(pts) + R_offset)
    bad_plain = sz <= P.S(np.abs(pts))
    window = M.window_radius
    if radii is None:
        r_lo = max(float(P.T(math.e * window + R_offset)), M.lattice_spacing)
        r_hi = max(window / 2.0, r_lo * 1.5)
        radii = np.geomspace(r_lo, r_hi, 4)
    radii = np.asarray(radii, dtype=float)
    xy = np.column_stack([pts.real, pts.imag])
    tree_shift = cKDTree(xy[bad_shift]) if np.any(bad_shift) else None
    tree_plain = cKDTree(xy[bad_plain]) if np.any(bad_plain) else None
    max_shift = 0.0
    max_plain = 0.0
    for r in radii:
        centers = _hex_centers(window - min(r, window / 2), pitch=r / 2.0)
        ok = r >= P.T(math.e * np.abs(centers) + R_offset)
        centers = centers[ok]
        if centers.size == 0:
            continue
        cxy = np.column_stack([centers.real, centers.imag])
        kap = P.kappa(r)
        if tree_shift is not None:
            counts = tree_shift.query_ball_point(cxy, r, return_length=True)
            max_shift = max(max_shift, float(counts.max()) / kap)
        if tree_plain is not None:
            counts = tree_plain.query_ball_point(cxy, r, return_length=True)
            max_plain = max(max_plain, float(counts.max()) / kap)
    return ConditionReport(
        violations_perturbed=violations,
        n_pairs=len(M.pairs),
        max_ratio_shifted=max_shift,
        max_ratio_plain=max_plain,
        n_bad_shifted=int(bad_shift.sum()),
        n_bad_plain=int(bad_plain.sum()),
        radii=radii,
        empirical_c=max_shift,
    )


def _hex_centers(radius, pitch):
    """Hexagonal packing of ball centers covering the disk of given radius."""
    if radius <= 0:
        return np.zeros(1, dtype=complex)
    rows = int(math.ceil(radius / (pitch * math.sqrt(3) / 2))) + 1
    out = []
    for j in range(-rows, rows + 1):
        y = j * pitch * math.sqrt(3) / 2
        offset = (j % 2) * pitch / 2
        cols = int(math.ceil(radius / pitch)) + 1
        for i in range(-cols, cols + 1):
            x = i * pitch + offset
            if x * x + y * y <= radius * radius + 1e-12:
                out.append(x + 1j * y)
    return np.asarray(out, dtype=complex) if out else np.zeros(1, dtype=complex)


class PairScalingFit(NamedTuple):
    slope: float
    stderr: float
    radii: np.ndarray
    counts: np.ndarray
    dropped: list


def pair_count_scaling(ensemble, radii, buffer=1.0):
    """Least-squares exponent of the small-distance ordered-pair counts.

    Pairs are counted with the first point inside the buffered window, pooled
    over the ensemble, normalized per unit area, and fitted as
    log N(r) ~ slope * log r.  Radii with zero pooled counts are dropped with
    a warning entry.
    """
    if len(ensemble) < 100:
        raise InsufficientPointsError("need at least 100 zero sets")
    radii = np.asarray(sorted(radii), dtype=float)
    if radii.size < 4 or radii.max() > 0.5 or radii.min() <= 0:
        raise DomainError("need >= 4 radii in (0, 0.5]")
    counts = np.zeros(radii.size)
    area = 0.0
    for Z in ensemble:
        pts = _points_of(Z)
        disk = getattr(Z, "disk_radius", np.max(np.abs(pts)) if pts.size else 0.0)
        area += math.pi * max(disk - buffer, 0.0) ** 2
        if pts.size < 2:
            continue
        xy = np.column_stack([pts.real, pts.imag])
        tree = cKDTree(xy)
        inner = np.abs(pts) <= disk - buffer
        if not np.any(inner):
            continue
        in_xy = xy[inner]
        for k, r in enumerate(radii):
            n_near = tree.query_ball_point(in_xy, r, return_length=True)
            counts[k] += float(np.sum(n_near - 1))
    dens = counts / area
    keep = dens > 0
    dropped = radii[~keep].tolist()
    if keep.sum() < 2:
        raise InsufficientPointsError("too few radii with nonzero pair counts")
    x = np.log(radii[keep])
    y = np.log(dens[keep])
    coef, cov = np.polyfit(x, y, 1, cov=True)
    return PairScalingFit(float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0))),
                          radii[keep], dens[keep], dropped)
