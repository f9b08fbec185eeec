"""k-point intensities of GAF zero sets.

The Kac-Rice route reduces the defining Gaussian integral to a permanent of
the conditional covariance (values conditioned to vanish), evaluated exactly
by Ryser's formula; a Monte Carlo importance-sampling oracle keeps the literal
integral honest for k <= 2, and the hyperbolic model's determinantal closed
form provides a golden cross-check.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CoincidentPointError, DegenerateModelError, DomainError


@dataclass(frozen=True)
class GAFModel:
    """Gaussian analytic function sum_n a_n zeta_n z^n with a_n >= 0."""

    kind: str                      # "gef" | "hyperbolic" | "truncated"
    L: float = 1.0
    coeffs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("gef", "hyperbolic", "truncated"):
            raise DomainError(f"unknown GAF kind {self.kind!r}")
        if self.kind == "gef" and not self.L > 0:
            raise DomainError("GEF intensity parameter must be positive")
        if self.kind == "truncated":
            c = tuple(float(a) for a in self.coeffs)
            if not c or any(a < 0 for a in c):
                raise DomainError("truncated model needs nonnegative coefficients")
            object.__setattr__(self, "coeffs", c)

    @classmethod
    def gef(cls, L):
        return cls("gef", L=float(L))

    @classmethod
    def hyperbolic(cls):
        return cls("hyperbolic")

    @classmethod
    def truncated(cls, coeffs):
        return cls("truncated", coeffs=tuple(coeffs))

    def coefficient(self, n):
        if self.kind == "gef":
            return self.L ** (n / 2.0) / math.sqrt(math.factorial(n)) if n < 170 else math.exp(
                0.5 * n * math.log(self.L) - 0.5 * math.lgamma(n + 1)
            )
        if self.kind == "hyperbolic":
            return 1.0
        return self.coeffs[n] if n < len(self.coeffs) else 0.0


@dataclass(frozen=True)
class CovarianceBlock:
    """Value/derivative covariance blocks of a GAF at k points."""

    k: int
    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    coincident: bool

    def assemble(self):
        top = np.hstack([self.A, self.B])
        bot = np.hstack([self.B.conj().T, self.D])
        return np.vstack([top, bot])


def gamma_matrix(model, points):
    """Closed-form covariance blocks at the given points.

    Coincident points are allowed but flagged, since they make the value
    block singular.
    """
    z = np.asarray(points, dtype=complex)
    k = z.size
    zw = z[:, None] * z[None, :].conj()   # z_i conj(z_j)
    if model.kind == "gef":
        e = np.exp(model.L * zw)
        A = e
        B = model.L * z[:, None] * e
        D = model.L * (1.0 + model.L * zw) * e
    elif model.kind == "hyperbolic":
        if np.any(np.abs(z) >= 1.0):
            raise DomainError("hyperbolic GAF requires |z| < 1")
        A = 1.0 / (1.0 - zw)
        B = z[:, None] / (1.0 - zw) ** 2
        D = (1.0 + zw) / (1.0 - zw) ** 3
    else:
        a2 = np.asarray(model.coeffs, dtype=float) ** 2
        ns = np.arange(a2.size)
        A = np.zeros((k, k), dtype=complex)
        B = np.zeros((k, k), dtype=complex)
        D = np.zeros((k, k), dtype=complex)
        zi = z[:, None]
        zjc = z[None, :].conj()
        for n, w in zip(ns, a2):
            if w == 0.0:
                continue
            A += w * zw**n
            if n >= 1:
                B += w * n * zi**n * zjc ** (n - 1)
                D += w * n * n * zw ** (n - 1)
    dist = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(dist, np.inf)
    return CovarianceBlock(k, A, B, D, bool(np.any(dist == 0.0)))


class ConfluentDeterminants(NamedTuple):
    det_mv: complex
    det_mc: float
    det_mv_direct: complex
    det_mc_direct: float


def confluent_determinants(points):
    """Closed forms and direct LU determinants of the confluent Vandermonde
    and Cauchy matrices built on the given points (Cauchy needs |z| < 1)."""
    z = np.asarray(points, dtype=complex)
    k = z.size
    if np.any(np.abs(z) >= 1.0):
        raise DomainError("confluent Cauchy determinant requires |z| < 1")
    diffs = z[None, :] - z[:, None]       # z_j - z_i above the diagonal
    iu = np.triu_indices(k, 1)
    det_mv = (-1.0) ** (k * (k - 1) // 2) * complex(np.prod(diffs[iu] ** 4)) if k > 1 else 1.0 + 0j
    zw = z[:, None] * z[None, :].conj()
    det_mc = float(np.prod(np.abs(diffs[iu]) ** 8) / np.abs(np.prod((1.0 - zw) ** 4))) if k > 0 else 1.0
    # direct matrices
    powers = np.arange(2 * k)
    V_top = z[:, None] ** powers[None, :]
    V_bot = powers[None, :] * np.where(
        powers[None, :] >= 1, z[:, None] ** np.maximum(powers[None, :] - 1, 0), 0.0
    )
    M_V = np.vstack([V_top, V_bot])
    det_mv_direct = complex(np.linalg.det(M_V))
    C_tl = 1.0 / (1.0 - zw)
    C_tr = z[:, None] / (1.0 - zw) ** 2
    C_bl = z[None, :].conj() / (1.0 - zw) ** 2
    C_br = (1.0 + zw) / (1.0 - zw) ** 3
    M_C = np.vstack([np.hstack([C_tl, C_tr]), np.hstack([C_bl, C_br])])
    det_mc_direct = float(np.linalg.det(M_C).real)
    return ConfluentDeterminants(det_mv, det_mc, det_mv_direct, det_mc_direct)


def permanent(a):
    """Permanent of a small square matrix by Ryser's formula with Gray-code
    rowsum updates; hard-capped at 8x8."""
    a = np.asarray(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DomainError("permanent needs a square matrix")
    if n == 0:
        return 1.0 + 0.0j
    if n > 8:
        raise DomainError("permanent capped at k <= 8")
    rowsums = np.zeros(n, dtype=complex)
    total = 0.0 + 0.0j
    gray = 0
    popcount = 0
    for k in range(1, 2**n):
        new_gray = k ^ (k >> 1)
        bit = new_gray ^ gray
        j = bit.bit_length() - 1
        if new_gray & bit:
            rowsums += a[:, j]
            popcount += 1
        else:
            rowsums -= a[:, j]
            popcount -= 1
        gray = new_gray
        total += (-1.0) ** popcount * np.prod(rowsums)
    return (-1.0) ** n * total


def _schur_complement(block):
    if block.coincident:
        raise CoincidentPointError("coincident points make the value block singular")
    A = block.A
    try:
        AinvB = np.linalg.solve(A, block.B)
    except np.linalg.LinAlgError as exc:
        raise CoincidentPointError("value covariance block is singular") from exc
    return block.D - block.B.conj().T @ AinvB


def rho_k(model, points):
    """k-point intensity via the permanent of the conditional covariance."""
    block = gamma_matrix(model, points)
    schur = _schur_complement(block)
    det_a = np.linalg.det(block.A)
    per = permanent(schur)
    val = per / (math.pi**block.k * det_a)
    if abs(val) > 0 and abs(val.imag) > 1e-8 * abs(val):
        raise DomainError(f"intensity came out non-real: {val}")
    out = float(val.real)
    if out < -1e-10 * max(1.0, abs(val)):
        raise DomainError(f"intensity came out negative: {out}")
    return max(out, 0.0)


def rho_hyperbolic_determinantal(points):
    """Closed form (1/pi^k) det[(1 - z_i conj(z_j))^-2] for the hyperbolic GAF."""
    z = np.asarray(points, dtype=complex)
    if np.any(np.abs(z) >= 1.0):
        raise DomainError("hyperbolic GAF requires |z| < 1")
    kern = 1.0 / (1.0 - z[:, None] * z[None, :].conj()) ** 2
    return float(np.linalg.det(kern).real) / math.pi ** z.size


class RhoEstimate(NamedTuple):
    value: float
    stderr: float
    samples: int


def rho_k_oracle(model, points, samples, seed=0):
    """Monte Carlo estimate of the intensity integral for k <= 2.

    Importance-samples the 2k-real-dimensional integral with the conditional
    Gaussian as proposal, which leaves E[prod |v_i|^2] / (pi^k det A) as an
    unbiased estimator."""
    z = np.asarray(points, dtype=complex)
    if z.size > 2:
        raise DomainError("oracle supports k <= 2 only")
    block = gamma_matrix(model, z)
    schur = _schur_complement(block)
    schur = 0.5 * (schur + schur.conj().T)
    try:
        W = np.linalg.cholesky(schur)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(schur)
        W = vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None)))
    det_a = float(np.linalg.det(block.A).real)
    rng = np.random.Generator(np.random.Philox(key=seed))
    k = z.size
    block_size = 200_000
    remaining = samples
    s1 = 0.0
    s2 = 0.0
    while remaining > 0:
        m = min(block_size, remaining)
        g = rng.standard_normal((m, 2 * k))
        xi = (g[:, 0::2] + 1j * g[:, 1::2]) / math.sqrt(2.0)
        v = xi @ W.T
        w = np.prod(np.abs(v) ** 2, axis=1)
        s1 += float(w.sum())
        s2 += float((w * w).sum())
        remaining -= m
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0)
    norm = math.pi**k * det_a
    return RhoEstimate(mean / norm, math.sqrt(var / samples) / abs(norm), samples)


class RhoBound(NamedTuple):
    lhs: float
    rhs: float
    passed: bool


def rho_bound_audit(model, points, tau):
    """Check the intensity against the pair-distance product bound.

    For the GEF the explicit constants (2k)^{4k^2} e^{8 tau^2 L k}
    max(1, L^{-4k^2}) are used; other models fall back to the coefficient-ratio
    form.  Coincident points pass by the closed-diagonal convention."""
    z = np.asarray(points, dtype=complex)
    k = z.size
    if tau < 2:
        raise DomainError("tau must be >= 2")
    if np.any(np.abs(z) > tau):
        raise DomainError("points must lie in the closed disk of radius tau")
    iu = np.triu_indices(k, 1)
    dist2 = np.abs(z[None, :] - z[:, None])[iu] ** 2
    prod_d2 = float(np.prod(dist2)) if dist2.size else 1.0
    if k > 1 and prod_d2 == 0.0:
        return RhoBound(0.0, 0.0, True)
    if model.kind == "gef":
        L = model.L
        const = (2.0 * k) ** (4 * k * k) * math.exp(8.0 * tau * tau * L * k) * max(1.0, L ** (-4 * k * k))
    else:
        lo = min(model.coefficient(n) for n in range(2 * k))
        if lo == 0.0:
            raise DegenerateModelError("a coefficient below 2k vanishes")
        if model.kind == "hyperbolic" and 2.0 * tau > 1.0:
            const = math.inf
        else:
            hi = _sup_scaled_coefficient(model, 2.0 * tau)
            const = (hi / lo) ** (4 * k)
    rhs = const * prod_d2
    lhs = rho_k(model, points)
    return RhoBound(lhs, rhs, lhs <= rhs)


def _sup_scaled_coefficient(model, r):
    if model.kind == "truncated":
        return max(a * r**n for n, a in enumerate(model.coeffs))
    if model.kind == "gef":
        return math.exp(0.5 * model.L * r * r / 2.0)
    return math.inf if r > 1 else 1.0
