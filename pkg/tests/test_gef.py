import math

import numpy as np
import pytest

from gefsamp.errors import DomainError, ResourceLimitError
from gefsamp.gef import GEFSample, eval_gef, eval_gef_ratio, sample_gef


class TestSampling:
    def test_truncation_floor_and_certificate(self):
        F = sample_gef(1.0, 5.0, 1e-12, seed=42)
        assert F.truncation_N >= math.ceil(math.e * 36)
        assert F.tail_certificate < 1e-12
        assert F.validity_radius == 6.0

    def test_bit_exact_regeneration(self):
        a = sample_gef(1.3, 4.0, 1e-10, seed=77)
        b = sample_gef(1.3, 4.0, 1e-10, seed=77)
        assert np.array_equal(a.log_mags, b.log_mags)
        assert np.array_equal(a.phases, b.phases)
        assert a.truncation_N == b.truncation_N

    def test_philox_stream_is_prefix_stable(self):
        # growing the truncation must never redraw earlier coefficients
        g1 = np.random.Generator(np.random.Philox(key=5))
        g2 = np.random.Generator(np.random.Philox(key=5))
        short = g1.standard_normal(10)
        long = g2.standard_normal(1000)
        assert np.array_equal(short, long[:10])

    def test_distinct_seeds_differ(self):
        a = sample_gef(1.0, 2.0, 1e-8, seed=1)
        b = sample_gef(1.0, 2.0, 1e-8, seed=2)
        assert not np.allclose(a.zetas[:5], b.zetas[:5])

    def test_resource_cap(self):
        with pytest.raises(ResourceLimitError):
            sample_gef(16.0, 12.0, 1e-8, seed=0)

    def test_parameter_validation(self):
        with pytest.raises(DomainError):
            sample_gef(0.0, 2.0, 1e-8, seed=0)
        with pytest.raises(DomainError):
            sample_gef(1.0, 13.0, 1e-8, seed=0)
        with pytest.raises(DomainError):
            sample_gef(1.0, 2.0, 1e-3, seed=0)

    def test_mean_square_at_origin(self):
        vals = np.array(
            [abs(sample_gef(1.0, 0.5, 1e-8, seed=s).zetas[0]) ** 2 for s in range(4000)]
        )
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean() - 1.0) <= 3 * se


class TestEvaluation:
    def test_origin_is_zeta0(self):
        F = sample_gef(1.0, 2.0, 1e-10, seed=3)
        assert eval_gef(F, 0.0) == pytest.approx(F.zetas[0], rel=1e-14)

    def test_scalar_matches_batch(self):
        F = sample_gef(1.5, 3.0, 1e-10, seed=8)
        zs = np.array([0.1 + 0.2j, 1.0 - 1.0j, 2.5, 0.0])
        batch = eval_gef(F, zs)
        for z, v in zip(zs, batch):
            assert eval_gef(F, complex(z)) == pytest.approx(v, rel=1e-12)

    def test_normalized_form(self):
        F = sample_gef(2.0, 3.0, 1e-10, seed=8)
        z = 1.7 - 0.4j
        plain = eval_gef(F, z)
        weighted = eval_gef(F, z, normalized=True)
        assert weighted == pytest.approx(plain * math.exp(-abs(z) ** 2), rel=1e-12)

    def test_out_of_disk_rejected(self):
        F = sample_gef(1.0, 2.0, 1e-10, seed=0)
        with pytest.raises(DomainError):
            eval_gef(F, 3.5)

    def test_rescaling_law(self):
        L, R = 2.0, 3.0
        FL = sample_gef(L, R, 1e-12, seed=7)
        F1 = sample_gef(1.0, math.sqrt(L) * (R + 1) - 1, 1e-12, seed=7)
        for z in (0.5 + 0.5j, 2.0 - 1.0j, 3.0, 0.1j):
            a = eval_gef(FL, z)
            b = eval_gef(F1, math.sqrt(L) * z)
            assert abs(a - b) <= 1e-10 * abs(b)

    def test_covariance_monte_carlo(self):
        z, w = 0.5, 0.3 + 0.2j
        n = 4000
        prods = np.empty(n, dtype=complex)
        sq = np.empty(n)
        z_far = 2.0
        for s in range(n):
            F = sample_gef(1.0, 2.0, 1e-8, seed=s)
            prods[s] = eval_gef(F, z) * np.conj(eval_gef(F, w))
            sq[s] = abs(eval_gef(F, z_far, normalized=True)) ** 2
        target = np.exp(z * np.conj(w))
        for comp, t in ((prods.real, target.real), (prods.imag, target.imag)):
            se = comp.std(ddof=1) / math.sqrt(n)
            assert abs(comp.mean() - t) <= 3.5 * se
        # normalized second moment is 1 everywhere
        se = sq.std(ddof=1) / math.sqrt(n)
        assert abs(sq.mean() - 1.0) <= 3.5 * se

    def test_translation_invariance_proxy(self):
        # mean/variance of Re F*, Im F* look the same across grid points
        zs = [0.0, 0.9, 1.4j, -1.0 - 0.8j]
        n = 2500
        stats = []
        for z in zs:
            vals = np.empty(n, dtype=complex)
            for s in range(n):
                F = sample_gef(1.0, 2.0, 1e-8, seed=10_000 + s)
                vals[s] = eval_gef(F, z, normalized=True)
            stats.append((vals.real.mean(), vals.real.var(), vals.imag.mean(), vals.imag.var()))
        stats = np.asarray(stats)
        tol = 4.5 / math.sqrt(n)
        assert np.all(np.abs(stats[:, 0]) < tol)
        assert np.all(np.abs(stats[:, 2]) < tol)
        assert np.all(np.abs(stats[:, 1] - 0.5) < tol)
        assert np.all(np.abs(stats[:, 3] - 0.5) < tol)

    def test_newton_ratio_linearizes_near_zero(self):
        F = sample_gef(1.0, 4.0, 1e-10, seed=21)
        from gefsamp.zeros import find_zeros

        z0 = find_zeros(F, 3.0).points[0]
        z = z0 + 1e-4
        ratio = eval_gef_ratio(F, z)
        assert abs((z - ratio) - z0) < 1e-7
