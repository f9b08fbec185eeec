"""Weierstrass sigma function for the square lattice, the good-set partition
of a zero configuration, and the sigma-like canonical product g built over it.

The primary sigma evaluator uses the lemniscatic theta closed form with
quasi-periodic reduction, which is exact to machine precision at any point;
the literal truncated lattice product is kept alongside as a slow independent
cross-check.  The canonical product g is truncated in the zero data only: the
lattice factors beyond the truncation radius are summed in closed form via
sigma, so growing the truncation through data-free annuli changes nothing.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, EvaluationOverflowError
from .pointstats import lattice_sites, product_separation
from .util import complex_grid

_THETA_Q = math.exp(-math.pi)
_THETA_TERMS = 9


def _theta1(v):
    """Jacobi theta_1(v, q = e^-pi), vectorized; argument already reduced."""
    v = np.asarray(v, dtype=complex)
    out = np.zeros(v.shape, dtype=complex)
    for n in range(_THETA_TERMS):
        out += (-1) ** n * _THETA_Q ** ((n + 0.5) ** 2) * np.sin((2 * n + 1) * v)
    return 2.0 * out


@lru_cache(maxsize=1)
def _theta1_prime0():
    return 2.0 * sum(
        (-1) ** n * (2 * n + 1) * _THETA_Q ** ((n + 0.5) ** 2)
        for n in range(_THETA_TERMS)
    )


def _sigma_unit(u):
    """sigma for the unit square lattice Z + iZ.

    Reduce to the fundamental cell with the quasi-periodicity
    sigma(u + l) = (-1)^(m+n+mn) sigma(u) exp(pi conj(l) (u + l/2)), then use
    sigma(u) = e^{pi u^2 / 2} theta1(pi u) / (pi theta1'(0)) in the cell.
    """
    u = np.asarray(u, dtype=complex)
    m = np.round(u.real)
    n = np.round(u.imag)
    lam = m + 1j * n
    u0 = u - lam
    exponent = math.pi * (np.conj(lam) * (u0 + lam / 2.0) + u0 * u0 / 2.0)
    if np.any(exponent.real > 700.0):
        raise EvaluationOverflowError(float(np.max(exponent.real)), where="weierstrass_sigma")
    sign = np.where((m + n + m * n) % 2 == 0, 1.0, -1.0)
    cell = _theta1(math.pi * u0) / (math.pi * _theta1_prime0())
    return sign * cell * np.exp(exponent)


def weierstrass_sigma(z, L, tol=1e-6):
    """sigma(z) for the lattice sqrt(pi/L) Z^2 (density L/pi).

    Evaluated through the closed form, whose error is far below any admissible
    ``tol``; exact lattice points return exactly 0.
    """
    if not (0 < tol <= 1e-4):
        raise DomainError("tol must lie in (0, 1e-4]")
    s = math.sqrt(math.pi / L)
    zq = np.asarray(z, dtype=complex)
    # componentwise scaling keeps exact lattice points exact
    u = zq.real / s + 1j * (zq.imag / s)
    on_lattice = (zq.real == np.round(u.real) * s) & (zq.imag == np.round(u.imag) * s)
    out = np.where(on_lattice, 0.0, s * _sigma_unit(np.where(on_lattice, 0.25, u)))
    return complex(out) if out.ndim == 0 else out


def weierstrass_sigma_product(z, L, tol=1e-4):
    """The literal truncated product z * prod' (1 - z/l) e^{z/l + z^2/(2 l^2)}.

    Factors are paired (l, -l) before multiplying, which cancels the odd terms
    and leaves quartic log-tails; the truncation radius is chosen from that
    paired tail bound.  Slow; used to cross-check the closed form.
    """
    if not (0 < tol <= 1e-4):
        raise DomainError("tol must lie in (0, 1e-4]")
    z = complex(z)
    s = math.sqrt(math.pi / L)
    r = abs(z)
    M = max(2.0 * r + 2.0 * s, s + r * r * math.sqrt(0.7 * math.pi / (s * s * tol)))
    _, lam = lattice_sites(L, M)
    lam = lam[lam != 0]
    if np.any(np.abs(lam - z) == 0.0):
        return 0.0 + 0.0j
    half = lam[(lam.real > 0) | ((lam.real == 0) & (lam.imag > 0))]
    w2 = (z / half) ** 2
    total = np.sum(np.log(1.0 - w2) + w2)
    return z * np.exp(complex(total))


@dataclass(frozen=True)
class SigmaAudit:
    empirical_c: float
    argmin: complex
    n_points: int

    @property
    def positive(self):
        return self.empirical_c > 0.0


@dataclass(frozen=True)
class GridSpec:
    """Jittered square grid over a disk, for audit infima."""

    radius: float
    n: int = 64
    jitter: float = 0.25
    seed: int = 0
    exclusion: float = 1e-6

    def points(self):
        return complex_grid(self.radius, self.n, jitter=self.jitter, seed=self.seed)


def lattice_distance(z, L):
    """d(z, sqrt(pi/L) Z^2), elementwise."""
    s = math.sqrt(math.pi / L)
    zq = np.asarray(z, dtype=complex)
    u = zq.real / s + 1j * (zq.imag / s)
    red = u - (np.round(u.real) + 1j * np.round(u.imag))
    out = s * np.abs(red)
    return float(out) if out.ndim == 0 else out


def sigma_lower_audit(L, grid):
    """inf over the grid of |e^{-L|z|^2/2} sigma(z)| / d(z, lattice)."""
    pts = grid.points()
    d = lattice_distance(pts, L)
    keep = d >= grid.exclusion
    pts, d = pts[keep], d[keep]
    vals = np.abs(weierstrass_sigma(pts, L)) * np.exp(-0.5 * L * np.abs(pts) ** 2)
    ratios = vals / d
    k = int(np.argmin(ratios))
    return SigmaAudit(float(ratios[k]), complex(pts[k]), int(pts.size))


@dataclass(frozen=True)
class GoodSetPartition:
    """Bad zeros E, the good index set A, and everything g needs to know."""

    e_indices: frozenset
    a_sites: tuple                 # ((m, n), ...) sorted
    nodes: dict                    # (m, n) -> matched zero position, for A sites
    r0: float
    profile: object
    window_radius: float
    intensity_L: float
    spacing: float
    disk_radius: float


def good_set(Z, M, P):
    """Threshold product separations against S(|z|) and assemble E and A."""
    pts = np.asarray(Z.points, dtype=complex)
    sz = product_separation(Z)
    bad = sz <= P.S(np.abs(pts))
    e_indices = frozenset(int(i) for i in np.nonzero(bad)[0])
    r0 = P.r0
    a_sites = []
    nodes = {}
    for mn, i in M.pairs:
        lam = M.site(*mn)
        if abs(lam) >= r0 and i not in e_indices:
            a_sites.append(mn)
            nodes[mn] = complex(pts[i])
    a_sites.sort()
    return GoodSetPartition(
        e_indices=e_indices,
        a_sites=tuple(a_sites),
        nodes=nodes,
        r0=float(r0),
        profile=P,
        window_radius=float(M.window_radius),
        intensity_L=float(M.intensity_L),
        spacing=float(M.lattice_spacing),
        disk_radius=float(Z.disk_radius),
    )


def product_sites(partition, M_trunc):
    """Sites entering the truncated product: A sites with their matched zeros,
    plus lattice fallback sites beyond the matching window out to M_trunc."""
    out = []
    for mn in partition.a_sites:
        lam = partition.spacing * (mn[0] + 1j * mn[1])
        if abs(lam) <= M_trunc:
            out.append((mn, lam, partition.nodes[mn], "zero"))
    sites, lam_all = lattice_sites(partition.intensity_L, M_trunc)
    for mn, lam in zip(sites, lam_all):
        if abs(lam) > partition.window_radius and abs(lam) >= partition.r0:
            out.append((mn, complex(lam), complex(lam), "lattice"))
    return out


def _removed_sites(partition, M_trunc):
    """Lattice sites inside M_trunc whose factors are absent from g."""
    present = {mn for mn in partition.a_sites
               if abs(partition.spacing * (mn[0] + 1j * mn[1])) <= M_trunc}
    sites, lam_all = lattice_sites(partition.intensity_L, M_trunc)
    out = []
    for mn, lam in zip(sites, lam_all):
        if mn == (0, 0):
            continue
        if abs(lam) > partition.window_radius and abs(lam) >= partition.r0:
            continue  # fallback site, present
        if mn in present:
            continue
        out.append(complex(lam))
    return np.asarray(out, dtype=complex)


def _log_factor(z, node, lam):
    """log[(1 - z/node) exp(z/node + z^2/(2 lam^2))], principal branch."""
    return np.log(1.0 - z / node) + z / node + z * z / (2.0 * lam * lam)


def _log_sigma_factor(z, lam):
    return np.log(1.0 - z / lam) + z / lam + z * z / (2.0 * lam * lam)


def g_eval(z, partition, M_trunc, include_lattice_tail=True, _exclude=None):
    """The canonical product over the good set, evaluated at z.

    With the lattice tail included (default) the product over all lattice
    sites beyond M_trunc is folded in exactly through sigma; factor bookkeeping
    then reduces to per-site corrections against sigma.  z equal to a product
    node returns exactly 0.
    """
    if M_trunc > partition.disk_radius + 1e-9:
        raise DomainError("M_trunc must not exceed the zero-data disk")
    zq = np.asarray(z, dtype=complex)
    scalar = zq.ndim == 0
    zq = np.atleast_1d(zq).astype(complex)
    total = np.zeros(zq.shape, dtype=complex)
    hit = np.zeros(zq.shape, dtype=bool)
    if include_lattice_tail:
        # g = prod_A [fac(node)/fac(lambda)] * sigma(z) / (z * prod_removed fac(lambda))
        for mn in partition.a_sites:
            lam = partition.spacing * (mn[0] + 1j * mn[1])
            if abs(lam) > M_trunc or (_exclude is not None and mn == _exclude):
                continue
            v = partition.nodes[mn]
            hit |= zq == v
            with np.errstate(divide="ignore", invalid="ignore"):
                total += np.log((1.0 - zq / v) / (1.0 - zq / lam)) + zq * (1.0 / v - 1.0 / lam)
        removed = _removed_sites(partition, M_trunc)
        if _exclude is not None:
            lam_own = partition.spacing * (_exclude[0] + 1j * _exclude[1])
            removed = np.append(removed, lam_own)
        if np.any(np.isclose(np.abs(zq[:, None] - removed[None, :]), 0.0, atol=1e-12)) if removed.size else False:
            raise DomainError("query coincides with a lattice site removed from g")
        for lam in removed:
            total -= _log_sigma_factor(zq, lam)
        sig = weierstrass_sigma(zq, partition.intensity_L)
        small = np.abs(zq) < 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            log_tail = np.where(small, 0.0, np.log(np.where(small, 1.0, sig / np.where(small, 1.0, zq))))
        total += log_tail
    else:
        for mn, lam, v, _kind in product_sites(partition, M_trunc):
            if _exclude is not None and mn == _exclude:
                continue
            hit |= zq == v
            with np.errstate(divide="ignore", invalid="ignore"):
                total += _log_factor(zq, v, lam)
    out = np.where(hit, 0.0, np.exp(total))
    return complex(out[0]) if scalar else out


def g_prime(mn, partition, M_trunc, include_lattice_tail=True):
    """Analytic derivative of g at the simple zero attached to site mn."""
    sites = {s: (lam, v) for s, lam, v, _k in product_sites(partition, M_trunc)}
    if mn not in sites:
        raise DomainError(f"site {mn} is not part of the truncated product")
    lam, v = sites[mn]
    if v == 0:
        raise DomainError("product node at the origin violates the r0 exclusion")
    rest = g_eval(v, partition, M_trunc, include_lattice_tail, _exclude=mn)
    own = (-1.0 / v) * np.exp(1.0 + v * v / (2.0 * lam * lam))
    return complex(own * rest)


@dataclass(frozen=True)
class GBoundAudit:
    inf_ratio_raw: float            # inf |e^{-L|z|^2/2} g| / d(z, nodes)
    inf_ratio_adjusted: float       # same, against the profile envelope with c_hat
    sup_small_disk: float           # sup |g| on |z| <= sqrt(2 pi / L)
    sup_bound: float                # e^{c_hat T(1)}
    n_points: int

    @property
    def positive(self):
        return self.inf_ratio_raw > 0.0


def g_bound_audit(partition, grid, M_trunc, c_hat=10.0):
    """Empirical constants for the lower and upper envelopes of g."""
    P = partition.profile
    L = partition.intensity_L
    nodes = np.asarray(
        [v for _mn, _lam, v, _k in product_sites(partition, M_trunc)], dtype=complex
    )
    pts = grid.points()
    d = np.min(np.abs(pts[:, None] - nodes[None, :]), axis=1)
    keep = d >= grid.exclusion
    pts, d = pts[keep], d[keep]
    gv = g_eval(pts, partition, M_trunc)
    weighted = np.abs(gv) * np.exp(-0.5 * L * np.abs(pts) ** 2)
    raw = weighted / d
    t1 = float(P.T(1.0))
    envelope = np.exp(
        -c_hat * P.beta * (t1**2 * P.log_star(t1) ** 4 + np.abs(pts) ** 2 / P.log_star(t1))
    )
    adjusted = raw / envelope
    r_small = math.sqrt(2.0 * math.pi / L)
    small_pts = complex_grid(r_small, 48, jitter=0.3, seed=grid.seed + 1)
    ok = np.min(np.abs(small_pts[:, None] - nodes[None, :]), axis=1) >= grid.exclusion
    sup_g = float(np.max(np.abs(g_eval(small_pts[ok], partition, M_trunc))))
    return GBoundAudit(
        inf_ratio_raw=float(raw.min()),
        inf_ratio_adjusted=float(adjusted.min()),
        sup_small_disk=sup_g,
        sup_bound=math.exp(c_hat * t1),
        n_points=int(pts.size),
    )
