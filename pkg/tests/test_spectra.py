"""Unit tests for the spectra module, oracles first."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dckrr.spectra import (
    Spectrum,
    TruncationError,
    additive,
    check_prop31_ratio,
    check_tail_sum,
    eval_eigenfunction,
    eval_kernel_K,
    eval_kernel_R,
    explicit_spectrum,
    feature_matrix,
    gaussian_rkhs,
    gram_R,
    periodic_sobolev,
    spectral_sums,
    thin_plate,
    truncation_level,
)

RNG = np.random.default_rng(1234)


class TestEigenvalueLaws:
    def test_periodic_pairs(self):
        spec = periodic_sobolev(2, M=8)
        mu = spec.eigenvalues
        # oracle: (2*pi*k)^(-4), each value shared by the sin/cos pair
        expected = [(2 * math.pi * k) ** -4 for k in (1, 1, 2, 2, 3, 3, 4, 4)]
        np.testing.assert_allclose(mu, expected, rtol=1e-15)

    def test_nonincreasing_positive(self):
        for spec in (
            periodic_sobolev(1, M=32),
            periodic_sobolev(3, M=32),
            additive(2, 2, M=32),
            gaussian_rkhs(1, 1.0, M=32),
            thin_plate(2, 2, M=32),
        ):
            mu = spec.eigenvalues
            assert np.all(mu > 0)
            assert np.all(np.diff(mu) <= 0)

    def test_gaussian_golden_decay(self):
        spec = gaussian_rkhs(1, M=5)
        q = (math.sqrt(5) - 1) / 2
        np.testing.assert_allclose(
            spec.eigenvalues, [q ** (2 * nu + 1) for nu in range(1, 6)], rtol=1e-15
        )

    def test_thin_plate_law(self):
        spec = thin_plate(2, 2, M=5)
        np.testing.assert_allclose(
            spec.eigenvalues, [nu ** -2.0 for nu in range(1, 6)], rtol=1e-15
        )

    def test_additive_interleaves_components_fastest(self):
        spec = additive(2, 2, M=8)
        # index j = (p-1)*d + k: eigenvalue depends only on p, so each of the
        # M/d per-component levels repeats d times
        mu_p = [(2 * math.pi * math.ceil(p / 2)) ** -4 for p in (1, 2, 3, 4)]
        np.testing.assert_allclose(spec.eigenvalues, np.repeat(mu_p, 2), rtol=1e-15)

    def test_additive_d1_equals_spline_arrays(self):
        a = additive(2, 1, M=64)
        s = periodic_sobolev(2, M=64)
        assert np.array_equal(a.eigenvalues, s.eigenvalues)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            periodic_sobolev(0)
        with pytest.raises(ValueError):
            periodic_sobolev(2, M=7)  # odd
        with pytest.raises(ValueError):
            additive(2, 2, M=10)  # not a multiple of 2d
        with pytest.raises(ValueError):
            thin_plate(1, 2)  # 2m <= d
        with pytest.raises(TruncationError):
            periodic_sobolev(2, M=2 * 16384)


class TestEigenfunctions:
    def test_periodic_values(self):
        spec = periodic_sobolev(2, M=8)
        x = np.array([0.3])
        root2 = math.sqrt(2)
        assert eval_eigenfunction(spec, 0, x) == pytest.approx(1.0)
        assert eval_eigenfunction(spec, 1, x)[0] == pytest.approx(root2 * math.sin(2 * math.pi * 0.3))
        assert eval_eigenfunction(spec, 2, x)[0] == pytest.approx(root2 * math.cos(2 * math.pi * 0.3))
        assert eval_eigenfunction(spec, 3, x)[0] == pytest.approx(root2 * math.sin(4 * math.pi * 0.3))

    def test_additive_index_map(self):
        spec = additive(2, 2, M=8)
        pts = np.array([[0.3, 0.7]])
        root2 = math.sqrt(2)
        # nu = p*d + k: nu=3 -> (p=1, k=1), nu=4 -> (p=1, k=2), nu=5 -> (p=2, k=1)
        assert eval_eigenfunction(spec, 3, pts)[0] == pytest.approx(root2 * math.sin(2 * math.pi * 0.3))
        assert eval_eigenfunction(spec, 4, pts)[0] == pytest.approx(root2 * math.sin(2 * math.pi * 0.7))
        assert eval_eigenfunction(spec, 5, pts)[0] == pytest.approx(root2 * math.cos(2 * math.pi * 0.3))

    def test_orthonormality_quadrature(self):
        spec = periodic_sobolev(2, M=256)
        grid = (np.arange(4096) + 0.5) / 4096
        phi = feature_matrix(spec, grid)
        G = phi.T @ phi / 4096
        assert np.max(np.abs(G - np.eye(256))) < 1e-3

    def test_feature_matrix_matches_pointwise_eval(self):
        spec = periodic_sobolev(2, M=16)
        x = RNG.uniform(size=5)
        phi = feature_matrix(spec, x)
        for nu in range(1, 17):
            np.testing.assert_allclose(phi[:, nu - 1], eval_eigenfunction(spec, nu, x), rtol=1e-12)

    def test_gaussian_hermite_orthogonal(self):
        # the Hermite system is orthogonal on R with a constant L2 norm
        # (it is orthonormal under the Gaussian base measure, not Lebesgue)
        spec = gaussian_rkhs(1, 1.0, M=6)
        x = np.linspace(-12, 12, 20001)
        phi = np.column_stack([eval_eigenfunction(spec, nu, x) for nu in range(1, 7)])
        G = phi.T @ phi * (x[1] - x[0])
        off = G - np.diag(np.diag(G))
        assert np.max(np.abs(off)) < 1e-6
        diag = np.diag(G)
        np.testing.assert_allclose(diag, diag[0], rtol=1e-9)

    def test_thin_plate_has_no_eigenfunctions(self):
        spec = thin_plate(2, 2)
        with pytest.raises(ValueError):
            eval_eigenfunction(spec, 1, np.array([[0.5, 0.5]]))
        with pytest.raises(ValueError):
            eval_kernel_R(spec, np.array([0.5, 0.5]), np.array([0.5, 0.5]))

    def test_index_bounds(self):
        spec = periodic_sobolev(2, M=8)
        with pytest.raises(ValueError):
            eval_eigenfunction(spec, 9, np.array([0.5]))
        gauss = gaussian_rkhs(1, M=8)
        with pytest.raises(ValueError):
            eval_eigenfunction(gauss, 0, np.array([0.5]))


class TestKernels:
    def test_gaussian_closed_form(self):
        spec = gaussian_rkhs(2, scale=1.5)
        x = np.array([0.2, 0.4])
        y = np.array([0.7, 0.1])
        expected = math.exp(-1.5 * float(np.sum((x - y) ** 2)))
        assert eval_kernel_R(spec, x, y) == pytest.approx(expected, rel=1e-15)

    def test_periodic_R_is_shift_invariant_sum(self):
        spec = periodic_sobolev(2, M=64)
        # oracle: R(x,y) = sum_k 2 (2 pi k)^(-4) cos(2 pi k (x - y))
        x, y = 0.37, 0.81
        k = np.arange(1, 33)
        oracle = float(np.sum(2 * (2 * np.pi * k) ** -4.0 * np.cos(2 * np.pi * k * (x - y))))
        assert eval_kernel_R(spec, np.array([x]), np.array([y])) == pytest.approx(oracle, rel=1e-12)

    def test_K_large_lambda_limit(self):
        spec = periodic_sobolev(2, M=32)
        x, y = np.array([0.2]), np.array([0.6])
        # each nonconstant term vanishes as lam -> inf; only the constant's 1 remains
        small = eval_kernel_K(spec, 1e-4, x, y) - 1.0
        large = eval_kernel_K(spec, 1e12, x, y) - 1.0
        assert abs(large) < 1e-6 * abs(small)

    def test_K_mercer_consistency(self):
        spec = periodic_sobolev(2, M=16)
        lam = 1e-3
        x, y = np.array([0.15]), np.array([0.92])
        acc = 1.0  # constant term
        for nu in range(1, 17):
            acc += (
                eval_eigenfunction(spec, nu, x)[0]
                * eval_eigenfunction(spec, nu, y)[0]
                / (1 + lam / spec.eigenvalues[nu - 1])
            )
        assert eval_kernel_K(spec, lam, x, y) == pytest.approx(acc, abs=1e-12)

    def test_kernel_bound_over_grid(self):
        spec = periodic_sobolev(2, M=128)
        lam = 1e-3
        h_inv = spectral_sums(spec, lam).h_inv
        grid = (np.arange(256) + 0.5) / 256
        kxx = [eval_kernel_K(spec, lam, np.array([g]), np.array([g])) for g in grid]
        assert max(kxx) <= 2.0 * h_inv  # c_phi^2 = 2

    def test_gram_consistency(self):
        spec = periodic_sobolev(2, M=32)
        X = RNG.uniform(size=6)
        G = gram_R(spec, X, X)
        assert np.allclose(G, G.T)
        for i in range(6):
            assert G[i, i] == pytest.approx(
                eval_kernel_R(spec, np.array([X[i]]), np.array([X[i]])), rel=1e-12
            )


class TestSpectralSums:
    def test_hand_summed_example(self):
        spec = explicit_spectrum([1.0, 0.25, 1.0 / 9.0])
        sums = spectral_sums(spec, 1.0)
        assert sums.h_inv == pytest.approx(0.5 + 0.2 + 0.1, rel=1e-14)
        assert sums.h_inv2 == pytest.approx(0.25 + 0.04 + 0.01, rel=1e-14)

    def test_constant_contributes_one(self):
        spec = periodic_sobolev(2, M=64)
        big = spectral_sums(spec, 1.0)  # huge lam kills every finite term
        assert big.h_inv == pytest.approx(1.0, abs=1e-2)
        assert big.h_inv2 == pytest.approx(1.0, abs=1e-2)

    def test_h_scaling_band(self):
        # h_inv * lam^{1/(2m)} stays within a fixed band across the grid
        vals = []
        for lam in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
            spec = periodic_sobolev(2, M=truncation_level(2, lam, (2 * math.pi) ** -4))
            vals.append(spectral_sums(spec, lam).h_inv * lam**0.25)
        assert max(vals) / min(vals) < 3.0

    def test_monotone_in_lambda(self):
        spec = periodic_sobolev(2, M=64)
        lams = np.logspace(-4, 0, 9)
        hs = [spectral_sums(spec, lam).h_inv for lam in lams]
        assert all(a > b for a, b in zip(hs, hs[1:]))

    @given(st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=25, deadline=None)
    def test_sums_bounded_by_M_property(self, lam):
        spec = explicit_spectrum(np.logspace(0, -3, 12))
        sums = spectral_sums(spec, lam)
        assert 0 < sums.h_inv2 <= sums.h_inv <= 12

    def test_truncation_error_raised(self):
        spec = periodic_sobolev(2, M=64)
        with pytest.raises(TruncationError):
            spectral_sums(spec, 1e-8)

    def test_truncation_level_rule(self):
        mu1 = (2 * math.pi) ** -4
        # floor at 64 when the ratio is moderate
        assert truncation_level(2, mu1 * 0.5, mu1) == 64
        # grows for small lam, never odd, capped with an error
        M = truncation_level(2, mu1 * 1e-5, mu1)
        assert M >= 2 * math.ceil(10 * (1e-5) ** -0.25) - 2 and M % 2 == 0
        with pytest.raises(TruncationError):
            truncation_level(2, mu1 * 1e-18, mu1)

    def test_thin_plate_sums_are_partial_sums(self):
        spec = thin_plate(2, 2, M=4096)
        sums = spectral_sums(spec, 1e-6)  # exempt from the tail error
        assert sums.h_inv > 100


class TestRegularityChecks:
    def test_geometric_tail_ratio(self):
        spec = explicit_spectrum([2.0**-nu for nu in range(1, 21)])
        assert 0 < check_tail_sum(spec) <= 1.0

    def test_single_eigenvalue_convention(self):
        assert check_tail_sum(explicit_spectrum([1.0])) == 0.0

    def test_periodic_tail_sup_finite_and_limit(self):
        spec = periodic_sobolev(2, M=2048)
        sup = check_tail_sum(spec)
        assert sup < 1.2  # sup sits at k=1 (paired twin), 2*zeta(4) - 1
        mu = spec.eigenvalues
        k = 200
        tail_ratio = float(np.sum(mu[k:]) / (k * mu[k - 1]))
        assert tail_ratio == pytest.approx(1.0 / 3.0, rel=0.1)  # 1/(2m-1) limit

    def test_prop31_ratios_at_most_one(self):
        for spec in (
            periodic_sobolev(2, M=256),
            gaussian_rkhs(1, M=64),
            thin_plate(2, 2, M=2048),
        ):
            ratios = check_prop31_ratio(spec, [1e-2, 1e-3])
            assert np.all(ratios > 0) and np.all(ratios <= 1.0)

    def test_prop31_spline_band(self):
        lam_grid = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
        spec = periodic_sobolev(
            2, M=truncation_level(2, min(lam_grid), (2 * math.pi) ** -4)
        )
        ratios = check_prop31_ratio(spec, lam_grid)
        assert np.all(ratios >= 0.2) and np.all(ratios <= 1.0)

    def test_prop31_thin_plate_nonvanishing(self):
        spec = thin_plate(2, 2, M=4096)
        ratios = check_prop31_ratio(spec, [1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
        assert np.min(ratios) > 0.1


def test_spectrum_equality_semantics():
    assert periodic_sobolev(2, M=16) == periodic_sobolev(2, M=16)
    assert periodic_sobolev(2, M=16) != periodic_sobolev(2, M=32)
    assert periodic_sobolev(2, M=16) != Spectrum(
        family="periodic_sobolev", m=2, d=1, scale=0.0,
        eigenvalues=np.ones(16), has_constant=True, has_eigenfunctions=True,
    )
