import numpy as np
import pytest

from moelearn.model import IDENTITY, RELU, SIGMOID, leaky_relu
from moelearn.transforms import (
    InvalidNonlinearity,
    OutputCoefficients,
    check_validity,
    compute_tensor_constants,
    gaussian_activation_moment,
    make_profile,
    q2,
    q4,
    score_s2,
    score_s4,
    solve_output_coefficients,
    t1,
    t2,
    t3,
)

SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


class TestActivationMoments:
    def test_identity(self):
        assert gaussian_activation_moment(IDENTITY, 1, 1) == 1.0
        assert gaussian_activation_moment(IDENTITY, 2, 2) == 3.0
        assert gaussian_activation_moment(IDENTITY, 1, 2) == 0.0

    def test_relu_closed_form(self):
        assert gaussian_activation_moment(RELU, 1, 1) == 0.5
        np.testing.assert_allclose(gaussian_activation_moment(RELU, 1, 0),
                                   SQRT_2_OVER_PI / 2)
        # (p+q-1)!!/2 pattern
        np.testing.assert_allclose(gaussian_activation_moment(RELU, 2, 2), 1.5)
        np.testing.assert_allclose(gaussian_activation_moment(RELU, 4, 3),
                                   0.5 * 48 * SQRT_2_OVER_PI)

    def test_p_zero_is_plain_gaussian_moment(self):
        for kind in (RELU, SIGMOID, leaky_relu(0.2)):
            assert gaussian_activation_moment(kind, 0, 4) == 3.0
            assert gaussian_activation_moment(kind, 0, 3) == 0.0

    def test_monte_carlo_agreement(self):
        # 4e6-sample oracle; tolerances are ~4 standard errors
        rng = np.random.default_rng(99)
        z = rng.standard_normal(4_000_000)
        for kind in (SIGMOID, leaky_relu(0.1)):
            g = kind(z)
            for p, q, tol in ((1, 1, 2e-3), (2, 0, 2e-3), (3, 1, 6e-3)):
                mc = float((g ** p * z ** q).mean())
                assert abs(gaussian_activation_moment(kind, p, q) - mc) < tol

    def test_unsupported_order(self):
        with pytest.raises(ValueError):
            gaussian_activation_moment(IDENTITY, 5, 0)
        with pytest.raises(ValueError):
            gaussian_activation_moment(IDENTITY, 1, 9)


class TestCoefficientSolver:
    def test_identity_closed_form(self):
        for sigma in (0.0, 0.05, 0.3):
            c = solve_output_coefficients(IDENTITY, sigma)
            assert abs(c.alpha) <= 1e-12
            assert abs(c.beta + 6.0 * (1.0 + sigma ** 2)) <= 1e-12
            assert abs(c.gamma) <= 1e-12
            assert abs(c.delta_q) <= 1e-12

    def test_relu_delta(self):
        c = solve_output_coefficients(RELU, 0.05)
        assert abs(c.delta_q + 2.0 * SQRT_2_OVER_PI) <= 1e-12

    def test_residuals_all_kinds(self):
        for kind in (IDENTITY, RELU, SIGMOID, leaky_relu(0.1)):
            profile = make_profile(kind, 0.05)
            report = check_validity(profile)
            assert max(abs(r) for r in report.cond1_residuals) <= 1e-10
            assert abs(report.cond2_residual) <= 1e-10
            assert report.valid

    def test_relu_coefficients_against_monte_carlo(self):
        # independent oracle: draw (Z, Y) and check the three inner
        # products vanish within 4 standard errors
        sigma = 0.05
        c = solve_output_coefficients(RELU, sigma)
        rng = np.random.default_rng(123)
        n = 2_000_000
        z = rng.standard_normal(n)
        y = np.maximum(z, 0.0) + sigma * rng.standard_normal(n)
        q4y = q4(y, c)
        for h in (z, z * z - 1.0, z ** 3 - 3.0 * z):
            prod = q4y * h
            assert abs(prod.mean()) <= 4.0 * prod.std() / np.sqrt(n)


class TestValidityReport:
    def test_identity_constants(self):
        profile = make_profile(IDENTITY, 0.05)
        report = check_validity(profile)
        # E[(Z^4-6Z^2+3)^2] = 24 and E[(Z^2+sigma^2)(Z^2-1)] = 2
        np.testing.assert_allclose(report.c4, 24.0, atol=1e-12)
        np.testing.assert_allclose(report.c2, 2.0, atol=1e-12)

    def test_beta_perturbation_shifts_he2_residual(self):
        profile = make_profile(IDENTITY, 0.05)
        c = profile.coeffs
        bad = OutputCoefficients(c.alpha, c.beta + 1.0, c.gamma, c.delta_q)
        report = check_validity(
            type(profile)(profile.kind, profile.sigma, bad, profile.constants))
        # adding 1 to beta adds E[(Z^2+sigma^2)(Z^2-1)] = 2 to the He2 residual
        np.testing.assert_allclose(report.cond1_residuals[1], 2.0, atol=1e-12)
        assert not report.valid

    def test_relu_valid(self):
        report = check_validity(make_profile(RELU, 0.05))
        assert max(abs(r) for r in report.cond1_residuals) <= 1e-8
        assert abs(report.c4) > 1e-8


class TestTensorConstants:
    def test_identity(self):
        c = solve_output_coefficients(IDENTITY, 0.05)
        tc = compute_tensor_constants(IDENTITY, 0.05, c)
        assert (tc.c4, tc.c2) == (24.0, 2.0)

    def test_relu_regression_values(self):
        # frozen after first computation; guarded by the MC tensor oracle
        tc = make_profile(RELU, 0.05).constants
        np.testing.assert_allclose(tc.c4, 0.5010468907917551, rtol=1e-12)
        np.testing.assert_allclose(tc.c2, 0.3633802276324186, rtol=1e-12)

    def test_invalid_coefficients_rejected(self):
        c = solve_output_coefficients(IDENTITY, 0.05)
        bad = OutputCoefficients(c.alpha + 0.5, c.beta, c.gamma, c.delta_q)
        with pytest.raises(InvalidNonlinearity):
            compute_tensor_constants(IDENTITY, 0.05, bad)


class TestOutputTransforms:
    def test_identity_sigma0_values(self):
        c = solve_output_coefficients(IDENTITY, 0.0)
        assert q4(1.0, c) == pytest.approx(-5.0)
        assert q4(2.0, c) == pytest.approx(-8.0)

    def test_no_constant_term(self):
        c = solve_output_coefficients(RELU, 0.05)
        assert q4(0.0, c) == 0.0
        assert q2(0.0, c) == 0.0

    def test_vectorized(self):
        c = solve_output_coefficients(IDENTITY, 0.05)
        y = np.linspace(-2, 2, 9)
        expect = y ** 4 + c.alpha * y ** 3 + c.beta * y ** 2 + c.gamma * y
        np.testing.assert_allclose(q4(y, c), expect, rtol=1e-14)
        np.testing.assert_allclose(q2(y, c), y * y + c.delta_q * y, rtol=1e-14)


class TestInputTransforms:
    def test_t3_self(self):
        e1 = np.eye(3)[0]
        assert t3(e1, e1, 2.0) == 0.0

    def test_t2_self(self):
        e1 = np.eye(3)[0]
        assert t2(e1, e1, 24.0) == pytest.approx(-1.0 / 12.0)

    def test_t1_cross(self):
        e1, e2 = np.eye(2)
        x = np.array([1.0, 1.0])
        assert t1(e1, e2, x, 24.0) == pytest.approx(0.0, abs=1e-15)

    def test_t1_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            u, v, x = rng.standard_normal((3, 4))
            assert t1(u, v, x, 24.0) == pytest.approx(t1(v, u, x, 24.0),
                                                      rel=1e-12)

    def test_collapse_identity(self):
        # t1(u, u, x) == t2(u, x) exactly as polynomials
        rng = np.random.default_rng(6)
        for _ in range(200):
            u, x = rng.standard_normal((2, 5))
            assert t1(u, u, x, 24.0) == pytest.approx(t2(u, x, 24.0),
                                                      rel=1e-12, abs=1e-12)

    def test_batched(self):
        rng = np.random.default_rng(7)
        u, v = rng.standard_normal((2, 3))
        X = rng.standard_normal((10, 3))
        batched = t1(u, v, X, 24.0)
        singles = [t1(u, v, x, 24.0) for x in X]
        np.testing.assert_allclose(batched, singles, rtol=1e-13)


class TestScoreTensors:
    def test_s2_at_zero(self):
        np.testing.assert_array_equal(score_s2(np.zeros(3)), -np.eye(3))

    def test_s4_dimension_one_is_hermite(self):
        for tval in (-1.5, 0.0, 0.7, 2.0):
            s = score_s4(np.array([tval]))
            assert s.shape == (1, 1, 1, 1)
            np.testing.assert_allclose(s[0, 0, 0, 0],
                                       tval ** 4 - 6 * tval ** 2 + 3,
                                       rtol=1e-12, atol=1e-12)

    def test_s4_quadratic_contraction_matches_t1_numerator(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            d = rng.integers(2, 7)
            x, u, v = rng.standard_normal((3, d))
            s4 = score_s4(x)
            contracted = np.einsum("ijkl,i,j,k,l->", s4, u, u, v, v)
            expect = t1(u, v, x, 1.0)
            assert contracted == pytest.approx(expect, rel=1e-12, abs=1e-12)

    def test_s4_full_contraction_matches_t2_numerator(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            x, u = rng.standard_normal((2, 4))
            s4 = score_s4(x)
            contracted = np.einsum("ijkl,i,j,k,l->", s4, u, u, u, u)
            assert contracted == pytest.approx(t2(u, x, 1.0), rel=1e-12)

    def test_s4_dense_guard(self):
        with pytest.raises(ValueError):
            score_s4(np.zeros(9))

    def test_scores_zero_mean(self):
        # Monte-Carlo: E[S2(x)] = E[S4(x)] = 0 entrywise
        rng = np.random.default_rng(13)
        n, d = 1_000_000, 3
        X = rng.standard_normal((n, d))
        mean_s2 = X.T @ X / n - np.eye(d)
        assert np.max(np.abs(mean_s2)) <= 5e-3
        from moelearn.harness import empirical_fourth_tensor
        mean_s4 = empirical_fourth_tensor(X, np.ones(n))
        assert np.max(np.abs(mean_s4)) <= 5e-3


def test_stein_consistency_identity():
    # E[Q4(Y) He4(Z)] = c4 = 24 for the identity activation
    sigma = 0.05
    c = solve_output_coefficients(IDENTITY, sigma)
    rng = np.random.default_rng(21)
    n = 1_000_000
    z = rng.standard_normal(n)
    y = z + sigma * rng.standard_normal(n)
    he4 = z ** 4 - 6 * z * z + 3
    assert abs(float((q4(y, c) * he4).mean()) - 24.0) <= 0.5
