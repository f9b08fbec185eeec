"""Sampling and evaluation of truncated Gaussian entire functions.

A sample is the random power series sum_n zeta_n (sqrt(L) z)^n / sqrt(n!)
truncated at an adaptively chosen degree N, together with a certificate that
the discarded tail is below tolerance on the validity disk.  Coefficients are
stored as (unit phase, log magnitude) pairs so evaluation never overflows.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError, EvaluationOverflowError, ResourceLimitError

_HARD_CAP = 5000
_ENVELOPE = 6.0  # sup bound 6*sqrt(log n) for undrawn |zeta_n|; per-coefficient
                 # failure probability is below n^-18


@dataclass(frozen=True)
class GEFSample:
    """Truncated random power series with a tail-error certificate."""

    intensity_L: float
    seed: int
    truncation_N: int
    phases: np.ndarray       # unit complex, phase of c_n
    log_mags: np.ndarray     # log |c_n|, -inf for exact zeros
    validity_radius: float
    tail_certificate: float
    zetas: np.ndarray | None = None
    source: str = "gef"

    def __post_init__(self):
        if self.phases.shape != self.log_mags.shape:
            raise ValueError("phase and magnitude arrays must align")

    @property
    def coefficients(self):
        """Plain complex c_n (may underflow to 0 for deep-tail entries)."""
        with np.errstate(over="ignore"):
            return self.phases * np.exp(self.log_mags)

    @classmethod
    def inject(cls, coeffs, L=0.0, validity_radius=math.inf, seed=-1):
        """Test hook: build a sample from explicit power-series coefficients,
        bypassing the RNG entirely."""
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
        mags = np.abs(c)
        with np.errstate(divide="ignore"):
            log_mags = np.log(mags)
        phases = np.where(mags > 0, c / np.where(mags > 0, mags, 1.0), 1.0)
        return cls(
            intensity_L=float(L),
            seed=seed,
            truncation_N=c.size - 1,
            phases=phases.astype(complex),
            log_mags=log_mags,
            validity_radius=float(validity_radius),
            tail_certificate=0.0,
            zetas=None,
            source="injected",
        )


def _complex_normals(rng, count):
    g = rng.standard_normal(2 * count)
    return (g[0::2] + 1j * g[1::2]) / math.sqrt(2.0)


def _log_envelope_tail(m_start, log_x):
    """log of sum_{n >= m_start} 6 sqrt(log n) x^n / sqrt(n!), via a geometric
    bound on the term ratio (valid because m_start sits beyond e*x^2)."""
    a0 = (
        math.log(_ENVELOPE)
        + 0.5 * math.log(math.log(m_start))
        + m_start * log_x
        - 0.5 * gammaln(m_start + 1)
    )
    q = math.exp(log_x) / math.sqrt(m_start + 1)
    q *= math.sqrt(math.log(m_start + 1) / math.log(m_start))
    if q >= 0.9:
        return math.inf
    return a0 - math.log1p(-q)


def sample_gef(L, R, tol, seed):
    """Draw a truncated GEF realization of intensity L/pi, valid on |z| <= R+1.

    zeta_n come from a counter-based (Philox) stream keyed by ``seed``; the
    stream is prefix-stable, so enlarging the truncation never redraws earlier
    coefficients and regeneration is bit-exact.
    """
    if not (0 < L <= 16):
        raise DomainError("L must lie in (0, 16]")
    if not (0 < R <= 12):
        raise DomainError("R must lie in (0, 12]")
    if not (0 < tol <= 1e-6):
        raise DomainError("tol must lie in (0, 1e-6]")
    x = math.sqrt(L) * (R + 1.0)
    log_x = math.log(x)
    n0 = math.ceil(math.e * L * (R + 1.0) ** 2)
    if n0 > _HARD_CAP:
        raise ResourceLimitError(
            f"truncation {n0} exceeds cap {_HARD_CAP}; reduce L*R^2"
        )
    rng = np.random.Generator(np.random.Philox(key=seed & (2**64 - 1)))
    zetas = _complex_normals(rng, 2 * n0 + 1)
    n = n0
    while True:
        idx = np.arange(n + 1, 2 * n + 1)
        log_terms = (
            np.log(np.abs(zetas[idx]))
            + idx * log_x
            - 0.5 * gammaln(idx + 1)
        )
        log_tail = logsumexp(
            np.append(log_terms, _log_envelope_tail(2 * n + 1, log_x))
        )
        cert = math.exp(log_tail - 0.5 * x * x)
        if cert < tol:
            break
        n_new = min(math.ceil(n * 1.25) + 8, _HARD_CAP)
        if n_new <= n:
            raise ResourceLimitError(
                f"tail certificate {cert:.3g} > tol at cap {_HARD_CAP}; reduce L*R^2"
            )
        extra = 2 * n_new - (zetas.size - 1)
        if extra > 0:
            zetas = np.append(zetas, _complex_normals(rng, extra))
        n = n_new
    ns = np.arange(n + 1)
    head = zetas[: n + 1]
    mags = np.abs(head)
    with np.errstate(divide="ignore"):
        log_mags = np.log(mags) + 0.5 * ns * math.log(L) - 0.5 * gammaln(ns + 1)
    phases = np.where(mags > 0, head / np.where(mags > 0, mags, 1.0), 1.0)
    return GEFSample(
        intensity_L=float(L),
        seed=int(seed),
        truncation_N=int(n),
        phases=phases,
        log_mags=log_mags,
        validity_radius=R + 1.0,
        tail_certificate=cert,
        zetas=head.copy(),
    )


def _term_parts(F, z):
    """Log-magnitudes and unit phases of the series terms at a scalar z."""
    ns = np.arange(F.truncation_N + 1)
    r = abs(z)
    if r == 0:
        mags = np.full(ns.size, -math.inf)
        mags[0] = F.log_mags[0]
        return mags, F.phases.copy()
    log_mags = F.log_mags + ns * math.log(r)
    phases = F.phases * np.exp(1j * ns * np.angle(z))
    return log_mags, phases


def eval_gef(F, z, normalized=False):
    """Evaluate F (or e^{-L|z|^2/2} F) at z inside the validity disk.

    Scalar arguments use compensated summation over magnitude-sorted terms;
    array arguments use a vectorized compensated sweep in term order.
    """
    z_arr = np.asarray(z, dtype=complex)
    if np.any(np.abs(z_arr) > F.validity_radius * (1 + 1e-12)):
        raise DomainError(
            f"|z| exceeds validity radius {F.validity_radius}; tail certificate void"
        )
    if z_arr.ndim == 0:
        return _eval_scalar(F, complex(z_arr), normalized)
    return _eval_batch(F, z_arr, normalized)


def _eval_scalar(F, z, normalized):
    log_mags, phases = _term_parts(F, z)
    shift = 0.5 * F.intensity_L * abs(z) ** 2
    if normalized:
        log_mags = log_mags - shift
    scale = np.max(log_mags)
    if not np.isfinite(scale):
        return 0.0 + 0.0j
    with np.errstate(under="ignore"):
        terms = phases * np.exp(log_mags - scale)
    order = np.argsort(np.abs(terms))
    total = 0.0 + 0.0j
    comp = 0.0 + 0.0j
    for t in terms[order]:
        y = t - comp
        s = total + y
        comp = (s - total) - y
        total = s
    if scale > 700.0 and abs(total) * math.exp(min(scale, 710.0) - 710.0) > 1e-300:
        if scale + math.log(max(abs(total), 1e-300)) > 709.0:
            raise EvaluationOverflowError(scale + math.log(abs(total)), where="eval_gef")
    return total * math.exp(scale)


def _eval_batch(F, zs, normalized):
    flat = zs.ravel()
    out = np.zeros(flat.shape, dtype=complex)
    r = np.abs(flat)
    nz = r > 0
    shift = 0.5 * F.intensity_L * r**2 if normalized else np.zeros_like(r)
    # z = 0 rows: only the constant term
    out[~nz] = F.phases[0] * np.exp(F.log_mags[0])
    if np.any(nz):
        w = flat[nz]
        log_r = np.log(r[nz])
        theta = np.angle(w)
        total = np.zeros(w.shape, dtype=complex)
        comp = np.zeros(w.shape, dtype=complex)
        scale = F.log_mags[np.argmax(F.log_mags)] + F.truncation_N * np.maximum(log_r, 0.0)
        # per-point scale: peak term magnitude estimate keeps exponents sane
        ns = np.arange(F.truncation_N + 1)
        peak = np.max(F.log_mags[None, :] + ns[None, :] * log_r[:, None], axis=1)
        peak = peak - shift[nz]
        with np.errstate(under="ignore"):
            for n in range(F.truncation_N + 1):
                mag = np.exp(F.log_mags[n] + n * log_r - shift[nz] - peak)
                t = F.phases[n] * mag * np.exp(1j * n * theta)
                y = t - comp
                s = total + y
                comp = (s - total) - y
                total = s
        if np.any(peak + np.log(np.abs(total) + 1e-300) > 709.0):
            bad = peak + np.log(np.abs(total) + 1e-300)
            raise EvaluationOverflowError(np.max(bad), where="eval_gef")
        out[nz] = total * np.exp(peak)
    return out.reshape(zs.shape)


def eval_gef_ratio(F, z):
    """F(z) / F'(z) for Newton polishing, vectorized over z.

    Both series are evaluated under a shared per-point scale, so the ratio is
    finite wherever F' does not vanish.
    """
    zs = np.asarray(z, dtype=complex)
    flat = zs.ravel()
    r = np.abs(flat)
    log_r = np.where(r > 0, np.log(np.where(r > 0, r, 1.0)), -math.inf)
    theta = np.angle(flat)
    ns = np.arange(F.truncation_N + 1)
    with np.errstate(invalid="ignore"):
        peak = np.max(F.log_mags[None, :] + ns[None, :] * np.where(r > 0, log_r, 0.0)[:, None], axis=1)
    p = np.zeros(flat.shape, dtype=complex)
    dp = np.zeros(flat.shape, dtype=complex)
    with np.errstate(under="ignore"):
        for n in range(F.truncation_N + 1):
            if n == 0:
                mag = np.exp(F.log_mags[0] - peak)
                p = p + F.phases[0] * mag
                continue
            mag = np.exp(F.log_mags[n] + n * log_r - peak)
            term = F.phases[n] * mag * np.exp(1j * n * theta)
            p = p + term
            # derivative term n c_n z^{n-1}
            safe = np.where(r > 0, flat, 1.0)
            dp = dp + n * term / safe
    out = p / dp
    return out.reshape(zs.shape) if zs.ndim else complex(out[0])
