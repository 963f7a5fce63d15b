import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import lfilter

from vbsmc.arma import (
    BENCHMARK_MODELS,
    ArmaModel,
    arma_recursion,
    benchmark_model,
    build_transition_matrices,
    simulate_recursive,
    state_covariance,
    transfer_matrix,
)
from vbsmc.exceptions import ConfigError
from vbsmc.fgn import FgnSpec, fgn_covariance, sample_fgn


def textbook(model, u):
    """Direct-form IIR filter: x = (1 + sum varphi B^j) / (1 - sum phi B^i) u."""
    return lfilter(np.r_[1.0, model.varphi], np.r_[1.0, -model.phi], u)


class TestModel:
    def test_orders(self):
        m = benchmark_model("ARMA(2,1)")
        assert (m.m, m.n) == (2, 1)
        assert m.innovations == FgnSpec(0.8, 1.0)

    def test_benchmark_table(self):
        rows = {name: benchmark_model(name) for name in BENCHMARK_MODELS}
        assert rows["ARMA(1,1)"].phi.tolist() == [0.85] and rows["ARMA(1,1)"].varphi.tolist() == [0.8]
        assert rows["MA(2)"].varphi.tolist() == [0.49, 0.47] and rows["MA(2)"].innovations.hurst == 0.8
        assert rows["AR(2)"].phi.tolist() == [0.49, 0.45]

    def test_rejects_non_finite(self):
        with pytest.raises(ConfigError):
            ArmaModel([np.nan])

    def test_unknown_benchmark(self):
        with pytest.raises(ConfigError):
            benchmark_model("ARMA(9,9)")

    def test_default_name(self):
        assert ArmaModel([0.1, 0.2], [0.3]).name == "ARMA(2,1)"


class TestTransitionMatrices:
    def test_memoryless(self):
        tm = build_transition_matrices(ArmaModel(), 3)
        np.testing.assert_array_equal(tm.phi_matrix, np.eye(3))
        np.testing.assert_array_equal(tm.psi_matrix, np.eye(3))

    def test_ar1_band(self):
        tm = build_transition_matrices(ArmaModel([0.85]), 3)
        np.testing.assert_array_equal(tm.phi_matrix, [[1, 0, 0], [-0.85, 1, 0], [0, -0.85, 1]])
        np.testing.assert_array_equal(tm.psi_matrix, np.eye(3))

    def test_ma1_band(self):
        tm = build_transition_matrices(ArmaModel(varphi=[0.8]), 3)
        np.testing.assert_array_equal(tm.psi_matrix, [[1, 0, 0], [0.8, 1, 0], [0, 0.8, 1]])
        np.testing.assert_array_equal(tm.phi_matrix, np.eye(3))

    def test_order_longer_than_horizon(self):
        tm = build_transition_matrices(ArmaModel([0.1, 0.2, 0.3]), 2)
        np.testing.assert_array_equal(tm.phi_matrix, [[1, 0], [-0.1, 1]])

    @pytest.mark.parametrize("name", BENCHMARK_MODELS)
    def test_unit_triangular(self, name):
        tm = build_transition_matrices(benchmark_model(name), 12)
        for mat in (tm.phi_matrix, tm.psi_matrix):
            np.testing.assert_array_equal(np.diag(mat), 1.0)
            np.testing.assert_array_equal(np.triu(mat, 1), 0.0)
            assert np.linalg.det(mat) == pytest.approx(1.0, abs=1e-12)

    def test_matrix_form_holds(self):
        model = benchmark_model("ARMA(2,1)")
        u = sample_fgn(20, model.innovations, np.random.default_rng(0))
        x = arma_recursion(model, u)
        tm = build_transition_matrices(model, 20)
        np.testing.assert_allclose(tm.phi_matrix @ x, tm.psi_matrix @ u, atol=1e-12)


class TestTransfer:
    def test_identity(self):
        np.testing.assert_array_equal(transfer_matrix(build_transition_matrices(ArmaModel(), 4)), np.eye(4))

    def test_ar1_powers(self):
        theta = transfer_matrix(build_transition_matrices(ArmaModel([0.85]), 3))
        expected = np.array([[1, 0, 0], [0.85, 1, 0], [0.7225, 0.85, 1]])
        np.testing.assert_allclose(theta, expected, rtol=1e-14)

    @pytest.mark.parametrize("name", BENCHMARK_MODELS)
    def test_unit_diagonal(self, name):
        theta = transfer_matrix(build_transition_matrices(benchmark_model(name), 10))
        np.testing.assert_array_equal(np.diag(theta), 1.0)

    @settings(max_examples=30, deadline=None)
    @given(
        phi=st.lists(st.floats(-0.9, 0.9), max_size=3),
        varphi=st.lists(st.floats(-1.5, 1.5), max_size=3),
        seed=st.integers(0, 2**32 - 1),
        t=st.integers(1, 40),
    )
    def test_recursion_equals_matrix(self, phi, varphi, seed, t):
        model = ArmaModel(phi, varphi, FgnSpec(0.7, 1.0))
        traj = simulate_recursive(model, t, np.random.default_rng(seed))
        theta = transfer_matrix(build_transition_matrices(model, t))
        np.testing.assert_allclose(traj.states, theta @ traj.innovations_used, atol=1e-10, rtol=0)


class TestSimulation:
    def test_memoryless_white(self):
        traj = simulate_recursive(ArmaModel(innovations=FgnSpec(0.5, 1.0)), 30, np.random.default_rng(2))
        np.testing.assert_array_equal(traj.states, traj.innovations_used)

    def test_zero_variance(self):
        traj = simulate_recursive(benchmark_model("ARMA(1,1)", sigma2=0.0), 25, np.random.default_rng(2))
        np.testing.assert_array_equal(traj.states, 0.0)

    def test_arma11_matrix_oracle(self):
        model = benchmark_model("ARMA(1,1)")
        traj = simulate_recursive(model, 64, np.random.default_rng(7))
        theta = transfer_matrix(build_transition_matrices(model, 64))
        assert np.max(np.abs(traj.states - theta @ traj.innovations_used)) <= 1e-10

    @pytest.mark.parametrize("name", BENCHMARK_MODELS)
    def test_matches_textbook_simulator(self, name):
        model = benchmark_model(name)
        model = ArmaModel(model.phi, model.varphi, FgnSpec(0.5, 1.0))
        traj = simulate_recursive(model, 80, np.random.default_rng(4))
        np.testing.assert_allclose(traj.states, textbook(model, traj.innovations_used), rtol=1e-12, atol=1e-12)

    def test_batched_recursion(self):
        model = benchmark_model("MA(2)")
        u = np.random.default_rng(0).standard_normal((4, 15))
        x = arma_recursion(model, u)
        for row_u, row_x in zip(u, x):
            np.testing.assert_array_equal(arma_recursion(model, row_u), row_x)


class TestStateCovariance:
    def test_memoryless_equals_innovation(self):
        spec = FgnSpec(0.7, 1.3)
        np.testing.assert_allclose(state_covariance(ArmaModel(innovations=spec), 5), fgn_covariance(5, spec))

    def test_ma1_closed_form(self):
        cov = state_covariance(ArmaModel(varphi=[0.5], innovations=FgnSpec(0.5, 1.0)), 2)
        np.testing.assert_allclose(cov, [[1.0, 0.5], [0.5, 1.25]], rtol=1e-14)

    def test_ar1_stationary_limit(self):
        cov = state_covariance(ArmaModel([0.6], innovations=FgnSpec(0.5, 1.0)), 60)
        assert cov[-1, -1] == pytest.approx(1.0 / (1.0 - 0.36), rel=1e-10)

    @pytest.mark.parametrize("name", BENCHMARK_MODELS)
    def test_symmetric_psd(self, name):
        cov = state_covariance(benchmark_model(name), 30)
        np.testing.assert_array_equal(cov, cov.T)
        assert np.linalg.eigvalsh(cov).min() >= -1e-10 * np.trace(cov)

    @pytest.mark.slow
    @pytest.mark.parametrize("name,t", [("AR(1)", 8), ("MA(1)", 8), ("MA(2)", 8), ("AR(2)", 4)])
    def test_monte_carlo(self, name, t):
        model = benchmark_model(name)
        u = sample_fgn(t, model.innovations, np.random.default_rng(21), size=100_000)
        x = arma_recursion(model, u)
        emp = x.T @ x / x.shape[0]
        assert np.max(np.abs(emp - state_covariance(model, t))) < 0.05

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["ARMA(1,1)", "ARMA(2,1)"])
    def test_monte_carlo_high_variance(self, name):
        # entries reach 20-36 here, so MC noise alone exceeds 0.05 absolute
        model = benchmark_model(name)
        u = sample_fgn(8, model.innovations, np.random.default_rng(22), size=100_000)
        x = arma_recursion(model, u)
        emp = x.T @ x / x.shape[0]
        cov = state_covariance(model, 8)
        assert np.max(np.abs(emp - cov)) < 0.05 * np.max(np.diag(cov))
