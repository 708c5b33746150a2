import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from repbandits.errors import ConfigError, DegenerateGridError, NumericError
from repbandits.grid import grid_round
from repbandits.randomness import SeedPlan, derive_stream
from repbandits.repridge import (LOGDET_REFRESH, GramState, beta_radius, gram_update,
                                 matrix_sqrt_spd, rep_ridge, ridge_fit, spd_sqrt_pair)


def random_spd(rng, d, lam=0.5):
    A = rng.normal(size=(d, d))
    return lam * np.eye(d) + A @ A.T


def shared(seed=0):
    return derive_stream(SeedPlan(seed), ["shared", 0])


class TestGram:
    def test_zero_vector(self):
        s = GramState.initial(3)
        t = gram_update(s, np.zeros(3), 5.0)
        assert np.array_equal(t.V, s.V) and np.array_equal(t.b, s.b)
        assert t.n == 1 and s.n == 0

    def test_first_update(self):
        t = gram_update(GramState.initial(3, 1.0), np.array([1.0, 0, 0]), 2.0)
        assert np.array_equal(t.V, np.diag([2.0, 1.0, 1.0]))
        assert np.array_equal(t.b, [2.0, 0, 0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            GramState.initial(3).add(np.ones(2), 1.0)

    def test_determinant_lemma(self):
        rng = np.random.default_rng(0)
        for d in range(1, 9):
            s = GramState.from_data(rng.normal(size=(5, d)), rng.normal(size=5), lam=0.7)
            x = rng.normal(size=d)
            w = float(x @ np.linalg.inv(s.V) @ x)
            t = gram_update(s, x, 0.0)
            assert np.linalg.det(t.V) == pytest.approx(np.linalg.det(s.V) * (1 + w), rel=1e-8)

    def test_tracked_logdet_matches_direct(self):
        rng = np.random.default_rng(1)
        s = GramState.initial(4, 1.0)
        for i in range(2 * LOGDET_REFRESH + 7):
            s.add(rng.normal(size=4) / 2, 0.0)
            if i % 97 == 0:
                assert s.logdet == pytest.approx(np.linalg.slogdet(s.V)[1], rel=1e-10)
        assert s.logdet == pytest.approx(np.linalg.slogdet(s.V)[1], rel=1e-10)

    @given(arrays(np.float64, (6, 3), elements=st.floats(-2, 2)), st.floats(0.1, 5))
    @settings(max_examples=50, deadline=None)
    def test_gram_invariants(self, X, lam):
        s = GramState.initial(3, lam)
        for x in X:
            s.add(x, 1.0)
        assert np.array_equal(s.V, s.V.T)
        assert np.linalg.eigvalsh(s.V)[0] >= lam * (1 - 1e-9)
        assert s.logdet >= 3 * math.log(lam) - 1e-9


class TestFit:
    def test_empty(self):
        assert np.array_equal(ridge_fit(GramState.initial(3)), np.zeros(3))

    def test_single_point(self):
        t = gram_update(GramState.initial(3), np.array([1.0, 0, 0]), 1.0)
        assert ridge_fit(t) == pytest.approx([0.5, 0, 0], abs=1e-15)

    def test_matches_explicit_inverse(self):
        rng = np.random.default_rng(2)
        for d in (1, 2, 5, 8):
            s = GramState.from_data(rng.normal(size=(30, d)), rng.normal(size=30), lam=1.0)
            theta = ridge_fit(s)
            assert np.allclose(theta, np.linalg.inv(s.V) @ s.b, rtol=0, atol=1e-8)
            assert np.linalg.norm(s.V @ theta - s.b) <= 1e-9 * (np.linalg.norm(s.b) + 1)

    def test_non_pd(self):
        bad = GramState(V=-np.eye(2), b=np.zeros(2), n=0, lam=1.0, logdet=0.0)
        with pytest.raises(NumericError):
            ridge_fit(bad)


class TestBeta:
    def test_prior_only(self):
        s = GramState.initial(2, 4.0)
        assert beta_radius(s, math.exp(-2), 1.0, 3.0) == pytest.approx(8.0, rel=1e-14)

    def test_zero(self):
        s = gram_update(GramState.initial(2), np.ones(2), 1.0)
        assert beta_radius(s, 0.1, 0.0, 0.0) == 0.0

    def test_one_update_against_mpmath(self):
        mpmath.mp.dps = 50
        oracle = mpmath.sqrt(2 * mpmath.log(mpmath.sqrt(2) / mpmath.mpf("0.1"))) + 1
        s = gram_update(GramState.initial(2, 1.0), np.array([1.0, 0.0]), 0.3)
        got = beta_radius(s, 0.1, 1.0, 1.0)
        assert got == pytest.approx(float(oracle), rel=1e-12)
        assert got == pytest.approx(3.3018, abs=5e-5)


class TestSqrt:
    def test_examples(self):
        assert np.array_equal(matrix_sqrt_spd(np.eye(3)), np.eye(3))
        assert np.allclose(matrix_sqrt_spd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]),
                           rtol=0, atol=1e-15)

    def test_random_self_check(self):
        rng = np.random.default_rng(3)
        for d in range(1, 9):
            V = random_spd(rng, d)
            W, W_inv = spd_sqrt_pair(V)
            assert np.array_equal(W, W.T)
            assert np.linalg.norm(W @ W - V) <= 1e-8 * np.linalg.norm(V)
            assert np.linalg.norm(W_inv @ W - np.eye(d)) <= 1e-10

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            matrix_sqrt_spd(np.array([[2.0, 1.0], [0.0, 2.0]]))


class TestGridRound:
    def test_examples(self):
        assert grid_round(0.3, 1.0, 0.0) == 0.5
        assert grid_round(-0.2, 1.0, 0.0) == -0.5
        assert grid_round(2.5, 1.0, 0.0) == 2.5

    def test_bad_width_and_shift(self):
        with pytest.raises(ValueError):
            grid_round(0.3, 0.0, 0.0)
        with pytest.raises(ValueError):
            grid_round(0.3, 1.0, 1.0)

    @given(st.floats(-1e6, 1e6), st.floats(1e-3, 1e3), st.floats(0, 1, exclude_max=True))
    def test_coordinate_bound_and_idempotence(self, z, alpha, frac):
        u = frac * alpha
        if u >= alpha:
            return
        out = grid_round(z, alpha, u)
        tol = 4 * np.spacing(max(abs(z), abs(out), alpha))
        assert abs(out - z) <= alpha / 2 + tol
        # midpoints are (numerically) fixed points
        assert abs(grid_round(out, alpha, u) - out) <= tol


class TestRepRidge:
    def data(self, seed=0, n=50, d=3):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, d)) / math.sqrt(d)
        theta = np.full(d, 0.4)
        return GramState.from_data(X, X @ theta + 0.1 * rng.normal(size=n))

    def test_rounding_bound_and_invariants(self):
        s = self.data()
        est = rep_ridge(s, 0.05, 0.3, 0.1, 1.0, shared())
        diff = est.theta_tilde - est.theta_hat
        assert math.sqrt(diff @ s.V @ diff) <= est.alpha / 2 * math.sqrt(3) * (1 + 1e-12)
        assert est.alpha == 2 * est.beta * math.sqrt(3) / (0.3 - 0.1)
        assert est.beta_inflated == pytest.approx(est.beta * (1 + 3 / 0.2), rel=1e-15)
        assert np.all((0 <= est.shift) & (est.shift < est.alpha))

    def test_determinism(self):
        s = self.data()
        a = rep_ridge(s, 0.05, 0.3, 0.1, 1.0, shared(), call_key=("batch", 2))
        b = rep_ridge(s.copy(), 0.05, 0.3, 0.1, 1.0, shared(), call_key=("batch", 2))
        assert np.array_equal(a.theta_tilde, b.theta_tilde)
        c = rep_ridge(s, 0.05, 0.3, 0.1, 1.0, shared(), call_key=("batch", 3))
        assert not np.array_equal(a.shift, c.shift)

    def test_regime_checks(self):
        s = self.data()
        with pytest.raises(ConfigError):
            rep_ridge(s, 0.1, 0.2, 0.1, 1.0, shared())
        with pytest.warns(UserWarning, match="3\\*delta"):
            rep_ridge(s, 0.1, 0.25, 0.1, 1.0, shared())
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            rep_ridge(s, 0.05, 0.3, 0.1, 1.0, shared())

    def test_degenerate_grid(self):
        with pytest.raises(DegenerateGridError):
            rep_ridge(self.data(), 0.05, 0.3, 0.0, 0.0, shared())

    @given(st.integers(0, 10_000), st.integers(1, 6), st.integers(0, 40))
    @settings(max_examples=40, deadline=None)
    def test_rounding_bound_property(self, seed, d, n):
        rng = np.random.default_rng(seed)
        s = GramState.from_data(rng.normal(size=(n, d)), rng.normal(size=n) * 3, lam=0.5)
        est = rep_ridge(s, 0.05, 0.3, 0.2, 1.0, shared(seed))
        diff = est.theta_tilde - est.theta_hat
        W = matrix_sqrt_spd(s.V)
        assert np.linalg.norm(W @ diff) <= est.alpha / 2 * math.sqrt(d) * (1 + 1e-9)
