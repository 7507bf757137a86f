import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rocketlab.errors import DimensionError, SpanError, UndefinedCoherenceError, ValidationError
from rocketlab.kernels import KernelSpec, convolve
from rocketlab.sensing import (
    _pair_stats,
    build_toeplitz,
    coherence,
    coherence_bound,
    compare_dilation_coherence,
    cross_basis_coherence,
    dft_basis,
    overlap_sum,
    overlap_theta,
    raw_overlap_max,
    recoverability,
    t01_variance,
    t01_variance_monte_carlo,
    verify_bound_monte_carlo,
)


def dense_stats(H, axis):
    """Brute-force max raw and normalized inner product over distinct vectors."""
    V = H.T if axis == "columns" else H
    G = V @ V.T
    norms = np.sqrt(np.diag(G))
    raw, best = 0.0, 0.0
    for i in range(V.shape[0]):
        for j in range(i + 1, V.shape[0]):
            raw = max(raw, abs(G[i, j]))
            if norms[i] > 0 and norms[j] > 0:
                best = max(best, abs(G[i, j]) / (norms[i] * norms[j]))
    return raw, best


class TestToeplitz:
    def test_shape_and_structure(self):
        k = KernelSpec([1.0, 2.0, 3.0], dilation=2)
        H = build_toeplitz(k, 9).rows
        assert H.shape == (5, 9)
        for r in range(5):
            assert np.count_nonzero(H[r]) == 3
            assert np.array_equal(H[r], np.roll(H[0], r))
        assert H[0].tolist() == [3.0, 0, 2.0, 0, 1.0, 0, 0, 0, 0]

    def test_identity_kernel(self):
        assert np.array_equal(build_toeplitz(KernelSpec([1.0]), 3).rows, np.eye(3))

    def test_row_layout_of_two_tap_filter(self):
        # taps [h1, h0] in convolution order put [h0, h1] at the row start
        h0, h1 = 0.7, -0.2
        H = build_toeplitz(KernelSpec([h1, h0]), 4).rows
        assert H.tolist() == [[h0, h1, 0, 0], [0, h0, h1, 0], [0, 0, h0, h1]]

    def test_matches_convolution(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(5, 60))
            K = int(rng.integers(1, 6))
            d = int(rng.integers(1, max(2, (n - 1) // max(1, K - 1)) + 1)) if K > 1 else 1
            k = KernelSpec(rng.normal(size=K), bias=rng.normal(), dilation=d, padding="zero")
            if k.span > n:
                continue
            x = rng.normal(size=n)
            view = build_toeplitz(k, n)
            ref = convolve(x, k.with_bias(0.0).with_padding("none"))
            np.testing.assert_allclose(view.matvec(x), ref, rtol=0, atol=1e-12)

    def test_sparse_matvec_above_dense_limit(self):
        rng = np.random.default_rng(1)
        k = KernelSpec(rng.normal(size=5), dilation=3)
        view = build_toeplitz(k, 50, max_dense=10)
        assert view.rows is None
        x = rng.normal(size=50)
        np.testing.assert_allclose(view.matvec(x), build_toeplitz(k, 50).rows @ x, atol=1e-12)

    def test_span_too_long(self):
        with pytest.raises(SpanError):
            build_toeplitz(KernelSpec(np.ones(5), dilation=3), 10)

    def test_matvec_dimension(self):
        with pytest.raises(DimensionError):
            build_toeplitz(KernelSpec([1.0, 2.0]), 5).matvec(np.ones(4))


class TestCoherence:
    def test_orthonormal_is_zero(self):
        assert coherence(np.eye(4))[0] == 0.0

    def test_two_tap_ones(self):
        H = build_toeplitz(KernelSpec([1.0, 1.0]), 3).rows
        assert H.T.tolist() == [[1, 0], [1, 1], [0, 1]]
        assert coherence(H)[0] == pytest.approx(1 / math.sqrt(2))

    def test_basis_against_itself(self):
        B = np.random.default_rng(0).normal(size=(4, 6))
        assert cross_basis_coherence(B, B) == pytest.approx(1.0)

    def test_parallel_columns(self):
        mu, pair = coherence(np.array([[1.0, 2.0, 0.0], [1.0, 2.0, 1.0]]))
        assert mu == pytest.approx(1.0)
        assert pair == (0, 1)

    def test_zero_columns_skipped_with_warning(self):
        m = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
        with pytest.warns(RuntimeWarning):
            mu, pair = coherence(m)
        assert mu == pytest.approx(1 / math.sqrt(2))
        assert pair == (0, 2)

    def test_fewer_than_two_vectors(self):
        with pytest.raises(UndefinedCoherenceError):
            coherence(np.ones((3, 1)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(UndefinedCoherenceError):
                coherence(np.array([[1.0, 0.0], [0.0, 0.0]]))

    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100), st.booleans())
    @settings(max_examples=60, deadline=None)
    def test_scale_invariant(self, seed, c, negate):
        rng = np.random.default_rng(seed)
        m = rng.normal(size=(6, 5))
        scaled = m.copy()
        j = int(rng.integers(5))
        scaled[:, j] *= -c if negate else c
        assert coherence(scaled)[0] == pytest.approx(coherence(m)[0], abs=1e-12)

    @pytest.mark.parametrize("n", [4, 16, 64])
    def test_dft_vs_identity(self, n):
        assert abs(cross_basis_coherence(dft_basis(n), np.eye(n)) - 1 / math.sqrt(n)) <= 1e-9

    def test_dft_is_unitary(self):
        F = dft_basis(8)
        np.testing.assert_allclose(F @ F.conj().T, np.eye(8), atol=1e-12)

    def test_real_dft_basis_would_not_reach_one_over_sqrt_n(self):
        # cosine atoms normalized to unit length peak at sqrt(2/N), not 1/sqrt(N)
        n = 16
        t = np.arange(n)
        cos_atom = np.cos(2 * np.pi * t / n)
        assert cross_basis_coherence(cos_atom, np.eye(n)) == pytest.approx(math.sqrt(2 / n))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_cross_basis_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.normal(size=(4, 7)), rng.normal(size=(5, 7))
        assert cross_basis_coherence(a, b) == pytest.approx(cross_basis_coherence(b, a), abs=1e-15)

    def test_cross_basis_dimension(self):
        with pytest.raises(DimensionError):
            cross_basis_coherence(np.eye(3), np.eye(4))


class TestPairStats:
    @pytest.mark.parametrize("axis", ["columns", "rows"])
    def test_matches_dense_gram(self, axis):
        rng = np.random.default_rng(2)
        for _ in range(60):
            K = int(rng.integers(2, 8))
            d = int(rng.integers(1, 4))
            n = (K - 1) * d + 1 + int(rng.integers(1, 20))
            w = rng.normal(size=K)
            H = build_toeplitz(KernelSpec(w, dilation=d), n).rows
            raw, norm, _ = _pair_stats(w[None, :], d, n, axis)
            exp_raw, exp_norm = dense_stats(H, axis)
            assert raw[0] == pytest.approx(exp_raw, abs=1e-12)
            assert norm[0] == pytest.approx(exp_norm, abs=1e-12)

    def test_arg_pair_achieves_mu(self):
        rng = np.random.default_rng(3)
        w = rng.normal(size=6)
        H = build_toeplitz(KernelSpec(w), 20).rows
        _, norm, pairs = _pair_stats(w[None, :], 1, 20, "columns")
        i, j = pairs[0]
        a, b = H[:, i], H[:, j]
        assert abs(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b)) == pytest.approx(norm[0])

    def test_raw_overlap_max_of_kernel(self):
        k = KernelSpec([1.0, 1.0, 1.0])
        # adjacent columns share two taps in the interior
        assert raw_overlap_max(k, 10) == pytest.approx(2.0)

    def test_normalized_within_unit_interval(self):
        rng = np.random.default_rng(4)
        _, norm, _ = _pair_stats(rng.normal(size=(200, 9)), 1, 30, "columns")
        assert np.all((norm >= 0) & (norm <= 1))


class TestOverlap:
    def test_theta(self):
        assert overlap_theta(0, 3, 9) == 6
        assert overlap_theta(0, 9, 9) == 0
        assert overlap_theta(0, 1, 3) == 2
        assert overlap_theta(0, 3, 3) == 0
        with pytest.raises(ValidationError):
            overlap_theta(2, 2, 3)

    @given(st.integers(1, 60), st.integers(1, 60))
    @settings(max_examples=80, deadline=None)
    def test_cyclic_sum(self, n, k):
        if k > n:
            n, k = k, n
        assert overlap_sum(n, k) == n * k * (k - 1) // 2

    @pytest.mark.parametrize("cyclic", [True, False])
    def test_matches_scalar_loop(self, cyclic):
        for n in range(1, 25):
            for k in range(1, n + 1):
                expected = 0
                for i in range(n):
                    for j in range(i + 1, i + n if cyclic else n):
                        expected += overlap_theta(i, j, k)
                assert overlap_sum(n, k, cyclic) == expected

    def test_linear_sum_is_smaller(self):
        # non-cyclic pairs lose the windows that run off the right edge
        n, k = 20, 5
        assert overlap_sum(n, k, cyclic=False) == n * k * (k - 1) // 2 - k * (k - 1) * (k + 1) // 6


class TestBound:
    def test_bound_formula(self):
        assert coherence_bound(80, 9, 2.0) == pytest.approx(80 * 8 / (2 * 9 * 4))
        assert coherence_bound(100, 5, 1.0) == pytest.approx(40.0)
        assert coherence_bound(100, 5, 10.0) == pytest.approx(0.4)

    def test_bound_increases_with_n_and_k(self):
        for alpha in (1.0, 2.0, 5.0):
            grid = np.array([[coherence_bound(n, k, alpha) for k in (2, 3, 5, 9, 21)]
                             for n in (10, 20, 80, 200)])
            assert np.all(np.diff(grid, axis=0) > 0) and np.all(np.diff(grid, axis=1) > 0)

    def test_variance_examples(self):
        assert t01_variance(2) == 0.25
        assert t01_variance(9) == pytest.approx(0.098765, abs=1e-6)

    def test_large_alpha_never_exceeded(self):
        rep = verify_bound_monte_carlo(50, 9, 1e6, trials=200)
        assert rep.empirical_exceed_rate == 0.0

    def test_vacuous_auto_pass_is_flagged(self):
        rep = verify_bound_monte_carlo(10, 2, 0.9, trials=5000)
        assert rep.bound_value == pytest.approx(10 / (4 * 0.81))
        assert rep.vacuous and rep.passed

    def test_n50_k9_alpha2(self):
        rep = verify_bound_monte_carlo(50, 9, 2.0, trials=2000)
        ref = min(1.0, 50 * 8 / (2 * 9 * 4))
        assert rep.empirical_exceed_rate <= ref + 3 * math.sqrt(ref * (1 - ref) / 2000)

    @pytest.mark.parametrize("args", [(80, 9, 0.0), (80, 1, 1.0), (0, 9, 1.0)])
    def test_bound_validation(self, args):
        with pytest.raises(ValidationError):
            coherence_bound(*args)

    def test_variance_formula(self):
        assert t01_variance(9) == pytest.approx(8 / 81)

    def test_variance_monte_carlo_small(self):
        mc = t01_variance_monte_carlo(5, 40_000, seed=1)
        assert abs(mc - t01_variance(5)) / t01_variance(5) < 0.05

    def test_report_fields(self):
        rep = verify_bound_monte_carlo(20, 5, 4.0, trials=300, seed=2)
        assert rep.bound_value == pytest.approx(0.5)
        assert not rep.vacuous
        assert 0 <= rep.empirical_exceed_rate <= 1
        assert 0 <= rep.mu <= 1
        assert rep.exceed_count == round(rep.empirical_exceed_rate * 300)
        assert rep.passed

    def test_vacuous_flag(self):
        rep = verify_bound_monte_carlo(80, 9, 1.0, trials=50)
        assert rep.vacuous and rep.standard_error == 0.0

    def test_rows_axis(self):
        rep = verify_bound_monte_carlo(30, 5, 2.0, trials=100, axis="rows")
        assert rep.axis == "rows" and rep.passed

    def test_deterministic(self):
        a = verify_bound_monte_carlo(20, 5, 2.0, trials=100, seed=7)
        b = verify_bound_monte_carlo(20, 5, 2.0, trials=100, seed=7)
        assert a == b


class TestRecoverability:
    def test_verdicts_recomputable(self):
        v = recoverability(2, 80, 20, c_s=1.0, mu=0.2)
        assert v.rip_threshold == pytest.approx(4 * math.log(80))
        assert v.rip_ok == (v.k > v.rip_threshold)
        assert v.coherence_ok == (v.mu_used < 1 / 3)

    def test_threshold_example(self):
        assert recoverability(2, 100, 9).rip_threshold == pytest.approx(18.42, abs=0.01)
        assert not recoverability(2, 100, 9).rip_ok
        assert recoverability(2, 100, 20).rip_ok
        assert recoverability(2, 100, 9, mu=0.2).coherence_ok

    def test_single_spike_coherence_condition(self):
        assert recoverability(1, 100, 9, mu=0.999).coherence_ok

    def test_larger_c_s_relaxes(self):
        assert not recoverability(3, 100, 20, 1.0).rip_ok
        assert recoverability(3, 100, 20, 10.0).rip_ok

    @pytest.mark.parametrize("kwargs", [{"s": 0}, {"c_s": 0.0}, {"mu": 1.5}])
    def test_validation(self, kwargs):
        args = {"s": 2, "n": 80, "k_len": 9, "c_s": 1.0, "mu": 0.0, **kwargs}
        with pytest.raises(ValidationError):
            recoverability(**args)


def test_dilation_lowers_cross_coherence():
    cmp = compare_dilation_coherence(k_len=9, n=64, dilation=4, pairs=40, seed=3)
    assert cmp.dilated_lower
    assert 0 < cmp.mean_dilated < cmp.mean_undilated <= 1
