import itertools
import math

import numpy as np
import pytest

from gefsamp.errors import CoincidentPointError, DegenerateModelError, DomainError
from gefsamp.intensity import (
    GAFModel,
    confluent_determinants,
    gamma_matrix,
    permanent,
    rho_bound_audit,
    rho_hyperbolic_determinantal,
    rho_k,
    rho_k_oracle,
)


class TestPermanent:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_matches_permutation_sum(self, n):
        rng = np.random.default_rng(n)
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        brute = sum(
            np.prod([a[i, p[i]] for i in range(n)])
            for p in itertools.permutations(range(n))
        )
        assert permanent(a) == pytest.approx(brute, rel=1e-10)

    def test_identity(self):
        assert permanent(np.eye(4)) == pytest.approx(1.0)

    def test_cap(self):
        with pytest.raises(DomainError):
            permanent(np.eye(9))


class TestGamma:
    def test_gef_k1_origin(self):
        blk = gamma_matrix(GAFModel.gef(1.0), [0.0])
        assert blk.A[0, 0] == pytest.approx(1.0)
        assert blk.B[0, 0] == pytest.approx(0.0)
        assert blk.D[0, 0] == pytest.approx(1.0)

    def test_gef_k1_matches_series(self):
        # direct series summation oracle for the closed forms
        L, z = 1.3, 0.4 + 0.3j
        ns = np.arange(120)
        a2 = L**ns / np.array([math.factorial(int(n)) for n in ns])
        zz = z * np.conj(z)
        A = np.sum(a2 * zz**ns)
        B = np.sum(a2[1:] * ns[1:] * z ** ns[1:] * np.conj(z) ** (ns[1:] - 1))
        D = np.sum(a2[1:] * ns[1:] ** 2 * zz ** (ns[1:] - 1))
        blk = gamma_matrix(GAFModel.gef(L), [z])
        assert blk.A[0, 0] == pytest.approx(A, rel=1e-12)
        assert blk.B[0, 0] == pytest.approx(B, rel=1e-12)
        assert blk.D[0, 0] == pytest.approx(D, rel=1e-12)

    def test_hyperbolic_k1_origin(self):
        blk = gamma_matrix(GAFModel.hyperbolic(), [0.0])
        assert blk.A[0, 0] == pytest.approx(1.0)
        assert blk.D[0, 0] == pytest.approx(1.0)

    def test_truncated_two_terms(self):
        blk = gamma_matrix(GAFModel.truncated((1.0, 1.0)), [1.0])
        assert blk.A[0, 0] == pytest.approx(2.0)
        assert blk.B[0, 0] == pytest.approx(1.0)
        assert blk.D[0, 0] == pytest.approx(1.0)

    def test_hermitian_psd(self):
        rng = np.random.default_rng(2)
        for model in (GAFModel.gef(1.5), GAFModel.hyperbolic(), GAFModel.truncated((1, 0.5, 0.2))):
            for k in (1, 2, 3):
                z = 0.5 * (rng.uniform(-1, 1, k) + 1j * rng.uniform(-1, 1, k))
                G = gamma_matrix(model, z).assemble()
                scale = np.abs(G).max()
                assert np.abs(G - G.conj().T).max() < 1e-10 * scale
                assert np.linalg.eigvalsh(G).min() > -1e-10 * scale

    def test_coefficient_ordering_gives_matrix_ordering(self):
        rng = np.random.default_rng(4)
        small = GAFModel.truncated((0.5, 0.3, 0.7, 0.1))
        big = GAFModel.truncated((0.8, 0.5, 0.7, 0.4))
        for k in (1, 2, 3):
            z = 0.6 * (rng.uniform(-1, 1, k) + 1j * rng.uniform(-1, 1, k))
            G1 = gamma_matrix(small, z).assemble()
            G2 = gamma_matrix(big, z).assemble()
            diff = G2 - G1
            scale = max(np.abs(G2).max(), 1.0)
            assert np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)).min() > -1e-10 * scale

    def test_hyperbolic_domain(self):
        with pytest.raises(DomainError):
            gamma_matrix(GAFModel.hyperbolic(), [1.2])

    def test_coincident_flagged(self):
        assert gamma_matrix(GAFModel.gef(1.0), [0.5, 0.5]).coincident


class TestConfluentDeterminants:
    def test_k2_hand_value(self):
        # direct 4x4 with rows [1,0,0,0],[1,1,1,1],[0,1,0,0],[0,1,2,3]
        z2 = 0.999999
        cd = confluent_determinants([0.0, z2])
        assert cd.det_mv == pytest.approx((-1.0) * z2**4, rel=1e-9)
        hand = np.linalg.det(
            np.array(
                [[1, 0, 0, 0], [1, z2, z2**2, z2**3], [0, 1, 0, 0], [0, 1, 2 * z2, 3 * z2**2]],
                dtype=float,
            )
        )
        assert cd.det_mv_direct == pytest.approx(hand, rel=1e-9)

    def test_k1_cauchy_at_origin(self):
        cd = confluent_determinants([0.0])
        assert cd.det_mc == pytest.approx(1.0)
        assert cd.det_mc_direct == pytest.approx(1.0)

    def test_repeated_point_vanishes(self):
        cd = confluent_determinants([0.3 + 0.1j, 0.3 + 0.1j])
        assert cd.det_mv == 0

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_closed_matches_direct(self, k):
        rng = np.random.default_rng(10 + k)
        for _ in range(25):
            z = 0.55 * (rng.uniform(-1, 1, k) + 1j * rng.uniform(-1, 1, k))
            cd = confluent_determinants(z)
            assert abs(cd.det_mv - cd.det_mv_direct) <= 1e-8 * max(1.0, abs(cd.det_mv))
            assert abs(cd.det_mc - cd.det_mc_direct) <= 1e-8 * max(1.0, abs(cd.det_mc))


class TestRho:
    @pytest.mark.parametrize("L", [0.5, 1.0, 1.5, 2.0])
    def test_rho1_is_intensity(self, L):
        for z in (0.0, 0.7 + 0.2j, 1.5j):
            assert rho_k(GAFModel.gef(L), [z]) == pytest.approx(L / math.pi, abs=1e-13)

    def test_hyperbolic_k1(self):
        assert rho_k(GAFModel.hyperbolic(), [0.0]) == pytest.approx(1 / math.pi, rel=1e-12)
        z = 0.3
        assert rho_k(GAFModel.hyperbolic(), [z]) == pytest.approx(
            1.0 / (math.pi * (1 - z * z) ** 2), rel=1e-12
        )

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_hyperbolic_matches_determinantal(self, k):
        rng = np.random.default_rng(7 + k)
        for _ in range(10):
            z = 0.6 * (rng.uniform(-1, 1, k) + 1j * rng.uniform(-1, 1, k))
            a = rho_k(GAFModel.hyperbolic(), z)
            b = rho_hyperbolic_determinantal(z)
            assert abs(a - b) <= 1e-8 * abs(b)

    def test_permutation_symmetry(self):
        z = [0.1, 0.3 + 0.2j, -0.4j]
        a = rho_k(GAFModel.gef(1.0), z)
        b = rho_k(GAFModel.gef(1.0), [z[2], z[0], z[1]])
        assert a == pytest.approx(b, rel=1e-12)

    def test_gef_rigid_motion_invariance(self):
        base = rho_k(GAFModel.gef(1.0), [0.1, 0.1 + 0.25j])
        for a, th in [(0.5 - 0.3j, 0.7), (1.0j, 2.1), (-0.4, 0.0)]:
            rot = np.exp(1j * th)
            moved = [a + rot * 0.1, a + rot * (0.1 + 0.25j)]
            assert rho_k(GAFModel.gef(1.0), moved) == pytest.approx(base, rel=1e-8)

    def test_coincident_rejected(self):
        with pytest.raises(CoincidentPointError):
            rho_k(GAFModel.gef(1.0), [0.2, 0.2])


class TestOracle:
    def test_gef_k1(self):
        est = rho_k_oracle(GAFModel.gef(1.0), [0.0], 200_000, seed=5)
        assert abs(est.value - 1 / math.pi) <= 3 * est.stderr

    def test_hyperbolic_k2_matches_closed_form(self):
        est = rho_k_oracle(GAFModel.hyperbolic(), [0.0, 0.3], 200_000, seed=6)
        closed = rho_hyperbolic_determinantal([0.0, 0.3])
        assert abs(est.value - closed) <= 3 * est.stderr

    def test_near_coincident_vanishes(self):
        est = rho_k_oracle(GAFModel.gef(1.0), [0.0, 1e-3], 100_000, seed=8)
        assert est.value <= 1e-5

    def test_k3_unsupported(self):
        with pytest.raises(DomainError):
            rho_k_oracle(GAFModel.gef(1.0), [0.0, 0.1, 0.2], 100)


class TestBoundAudit:
    def test_k1_explicit_constants(self):
        rb = rho_bound_audit(GAFModel.gef(1.0), [0.0], 2.0)
        assert rb.lhs == pytest.approx(1 / math.pi, rel=1e-12)
        assert rb.rhs == pytest.approx(16 * math.exp(32), rel=1e-12)
        assert rb.passed

    def test_coincident_convention(self):
        rb = rho_bound_audit(GAFModel.gef(1.0), [0.1, 0.1], 2.0)
        assert rb == (0.0, 0.0, True)

    def test_sweep(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            k = int(rng.integers(1, 4))
            z = rng.uniform(-1.4, 1.4, k) + 1j * rng.uniform(-1.4, 1.4, k)
            L = float(rng.uniform(0.5, 2.0))
            assert rho_bound_audit(GAFModel.gef(L), z, 2.0).passed

    def test_degenerate_model(self):
        with pytest.raises(DegenerateModelError):
            rho_bound_audit(GAFModel.truncated((0.0, 1.0)), [0.1, 0.2], 2.0)
