import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vbsmc.exceptions import ConfigError, DataError, FactorizationError
from vbsmc.fgn import (
    FgnPredictor,
    FgnSpec,
    factor_fgn,
    fgn_autocorrelation,
    fgn_conditional,
    fgn_covariance,
    sample_fgn,
)

# 40-digit mpmath evaluations of the closed form
RHO_07 = {1: 0.31950791077289425937, 2: 0.18875253932725099266, 3: 0.1461734422113117931, 10: 0.070389262701115283483}
RHO_08 = {1: 0.51571656651039808235, 2: 0.36833993437684796259, 5: 0.25262255271986849681}

hursts = st.floats(min_value=0.01, max_value=0.99)


class TestAutocorrelation:
    def test_lag_zero_is_one(self):
        assert fgn_autocorrelation(0, 0.7) == 1.0

    def test_white_noise_at_half(self):
        assert fgn_autocorrelation(1, 0.5) == 0.0

    @pytest.mark.parametrize("lag,expected", sorted(RHO_07.items()))
    def test_against_mpmath_h07(self, lag, expected):
        assert fgn_autocorrelation(lag, 0.7) == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("lag,expected", sorted(RHO_08.items()))
    def test_against_mpmath_h08(self, lag, expected):
        assert fgn_autocorrelation(lag, 0.8) == pytest.approx(expected, rel=1e-13)

    def test_vectorized(self):
        got = fgn_autocorrelation(np.array([0, 1, 2, -1]), 0.7)
        np.testing.assert_allclose(got, [1.0, RHO_07[1], RHO_07[2], RHO_07[1]], rtol=1e-13)

    @given(tau=st.integers(-500, 500), h=hursts)
    def test_symmetric(self, tau, h):
        assert fgn_autocorrelation(tau, h) == fgn_autocorrelation(-tau, h)

    @given(h=hursts)
    def test_normalized(self, h):
        assert fgn_autocorrelation(0, h) == 1.0

    def test_half_is_memoryless(self):
        assert np.max(np.abs(fgn_autocorrelation(np.arange(1, 200), 0.5))) <= 1e-12

    @pytest.mark.parametrize("h", [0.0, 1.0, -0.2, 1.5, float("nan")])
    def test_rejects_boundary_hurst(self, h):
        with pytest.raises(ConfigError):
            fgn_autocorrelation(1, h)

    def test_rejects_fractional_lag(self):
        with pytest.raises(DataError):
            fgn_autocorrelation(0.5, 0.7)

    def test_float_integer_lag_accepted(self):
        assert fgn_autocorrelation(2.0, 0.7) == fgn_autocorrelation(2, 0.7)


class TestCovariance:
    def test_single_entry(self):
        np.testing.assert_array_equal(fgn_covariance(1, FgnSpec(0.7, 1.0)), [[1.0]])

    def test_white_noise_identity(self):
        np.testing.assert_array_equal(fgn_covariance(3, FgnSpec(0.5, 1.0)), np.eye(3))

    def test_two_by_two(self):
        np.testing.assert_allclose(
            fgn_covariance(2, FgnSpec(0.7, 1.0)), [[1.0, RHO_07[1]], [RHO_07[1], 1.0]], rtol=1e-13
        )

    def test_scales_with_sigma2(self):
        np.testing.assert_allclose(fgn_covariance(4, FgnSpec(0.8, 2.5)), 2.5 * fgn_covariance(4, FgnSpec(0.8, 1.0)))

    def test_rejects_empty_horizon(self):
        with pytest.raises(ConfigError):
            fgn_covariance(0, FgnSpec())

    @settings(max_examples=25, deadline=None)
    @given(h=hursts, t=st.integers(1, 256))
    def test_toeplitz_symmetric_psd(self, h, t):
        c = fgn_covariance(t, FgnSpec(h, 1.0))
        np.testing.assert_array_equal(c, c.T)
        np.testing.assert_array_equal(c[1:, 1:], c[:-1, :-1])
        assert np.linalg.eigvalsh(c).min() >= -1e-10 * np.trace(c)


class TestSampling:
    def test_zero_variance(self):
        rng = np.random.default_rng(0)
        np.testing.assert_array_equal(sample_fgn(17, FgnSpec(0.7, 0.0), rng), np.zeros(17))

    def test_deterministic(self):
        spec = FgnSpec(0.8, 1.0)
        a = sample_fgn(20, spec, np.random.default_rng(5))
        b = sample_fgn(20, spec, np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    def test_shapes(self):
        rng = np.random.default_rng(0)
        assert sample_fgn(6, FgnSpec(), rng).shape == (6,)
        assert sample_fgn(6, FgnSpec(), rng, size=3).shape == (3, 6)

    def test_factor_reproduces_correlation(self):
        f = factor_fgn(64, 0.9)
        assert f.jitter == 0.0
        np.testing.assert_allclose(f.lower @ f.lower.T, fgn_covariance(64, FgnSpec(0.9, 1.0)), atol=1e-12)

    def test_factorization_failure_reports_pivot(self, monkeypatch):
        import vbsmc.fgn as fgn_mod

        calls = []

        def broken(a):
            calls.append(a.copy())
            return a, 3

        monkeypatch.setattr(fgn_mod, "_cholesky", broken)
        with pytest.raises(FactorizationError) as err:
            factor_fgn(5, 0.7)
        assert err.value.pivot == 3
        # second attempt carried the diagonal jitter
        np.testing.assert_allclose(np.diag(calls[1]) - np.diag(calls[0]), 1e-10)

    def test_jitter_recorded_on_retry(self, monkeypatch):
        import vbsmc.fgn as fgn_mod

        real = fgn_mod._cholesky
        state = {"n": 0}

        def flaky(a):
            state["n"] += 1
            return (a, 2) if state["n"] == 1 else real(a)

        monkeypatch.setattr(fgn_mod, "_cholesky", flaky)
        assert factor_fgn(4, 0.7).jitter == 1e-10

    @pytest.mark.slow
    @pytest.mark.parametrize("h", [0.5, 0.8])
    def test_monte_carlo_covariance(self, h):
        spec = FgnSpec(h, 1.0)
        draws = sample_fgn(32, spec, np.random.default_rng(11), size=200_000)
        emp = draws.T @ draws / draws.shape[0]
        assert np.max(np.abs(emp - fgn_covariance(32, spec))) < 0.02


class TestConditional:
    def test_white_noise_memoryless(self):
        mean, var = fgn_conditional(4, [0.3, -2.0, 1.5], FgnSpec(0.5, 2.0))
        assert mean == 0.0 and var == 2.0

    def test_unconditional_first_step(self):
        assert fgn_conditional(1, [], FgnSpec(0.7, 1.7)) == (0.0, 1.7)

    def test_two_by_two_conditioning(self):
        mean, var = fgn_conditional(2, [1.0], FgnSpec(0.7, 1.0))
        assert mean == pytest.approx(0.31950791077289425937, rel=1e-13)
        assert var == pytest.approx(0.89791469495354024048, rel=1e-13)

    def test_three_step_against_mpmath(self):
        mean, var = fgn_conditional(3, [0.3, -1.2], FgnSpec(0.8, 1.0))
        assert mean == pytest.approx(-0.4907061199873166412, rel=1e-12)
        assert var == pytest.approx(0.71975795096943052063, rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            fgn_conditional(3, [1.0], FgnSpec(0.7))

    @pytest.mark.parametrize("h", [0.2, 0.7, 0.95])
    def test_matches_dense_solve(self, h):
        pred = FgnPredictor(h)
        r = fgn_covariance(40, FgnSpec(h, 1.0))
        for k in (1, 7, 25, 39):
            coef = np.linalg.solve(r[:k, :k], r[:k, k])
            np.testing.assert_allclose(pred.coefficients(k), coef, atol=1e-10)
            assert pred.variance(k) == pytest.approx(1.0 - r[:k, k] @ coef, abs=1e-10)

    def test_batched_history(self):
        spec = FgnSpec(0.7, 1.0)
        hist = np.random.default_rng(1).standard_normal((5, 3))
        means, _ = fgn_conditional(4, hist, spec)
        for row, m in zip(hist, means):
            assert fgn_conditional(4, row, spec)[0] == pytest.approx(m, rel=1e-14)

    @pytest.mark.slow
    def test_chained_sampling_matches_joint_law(self):
        spec = FgnSpec(0.8, 1.0)
        t, n = 12, 100_000
        rng = np.random.default_rng(3)
        pred = FgnPredictor(spec.hurst)
        u = np.empty((n, t))
        for k in range(t):
            mean, var = fgn_conditional(k + 1, u[:, :k], spec, pred)
            u[:, k] = mean + np.sqrt(var) * rng.standard_normal(n)
        emp = u.T @ u / n
        assert np.max(np.abs(emp - fgn_covariance(t, spec))) < 0.03
