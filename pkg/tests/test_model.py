import numpy as np
import pytest

from moelearn.model import (
    IDENTITY,
    RELU,
    SIGMOID,
    InvalidParameters,
    MoEParameters,
    Nonlinearity,
    RegularizationConfig,
    from_text,
    ground_truth_paper_instance,
    init_random,
    leaky_relu,
    to_text,
    validate,
)


def make_params(k=2, d=3, sigma=0.1):
    rng = np.random.default_rng(0)
    return MoEParameters(rng.standard_normal((k, d)),
                         rng.standard_normal((k - 1, d)), sigma)


class TestValidate:
    def test_well_formed(self):
        validate(make_params())  # no raise

    def test_gating_row_count(self):
        rng = np.random.default_rng(1)
        bad = MoEParameters(rng.standard_normal((2, 3)),
                            rng.standard_normal((2, 3)), 0.1)
        with pytest.raises(InvalidParameters, match="gating"):
            validate(bad)

    def test_negative_sigma(self):
        rng = np.random.default_rng(2)
        bad = MoEParameters(rng.standard_normal((2, 3)),
                            rng.standard_normal((1, 3)), -0.1)
        with pytest.raises(InvalidParameters, match="sigma"):
            validate(bad)

    def test_non_finite(self):
        a = np.ones((2, 3))
        a[0, 0] = np.nan
        with pytest.raises(InvalidParameters, match="finite"):
            validate(MoEParameters(a, np.ones((1, 3)), 0.1))

    def test_require_normalized(self):
        p = make_params()
        with pytest.raises(InvalidParameters, match="unit-norm"):
            validate(p, require_normalized=True)
        validate(ground_truth_paper_instance(2, 5), require_normalized=True)


class TestInitRandom:
    def test_sphere_and_ball(self):
        p = init_random(3, 10, 1.0, np.random.default_rng(7))
        np.testing.assert_allclose(np.linalg.norm(p.regressors, axis=1), 1.0,
                                   atol=1e-12)
        assert np.all(np.linalg.norm(p.gating, axis=1) <= 1.0)
        validate(p, require_normalized=True)

    def test_deterministic_given_seed(self):
        a = init_random(3, 10, 1.0, np.random.default_rng(42))
        b = init_random(3, 10, 1.0, np.random.default_rng(42))
        np.testing.assert_array_equal(a.regressors, b.regressors)
        np.testing.assert_array_equal(a.gating, b.gating)

    def test_one_dimensional_sphere(self):
        p = init_random(2, 1, 1.0, np.random.default_rng(3))
        assert set(np.abs(p.regressors.ravel())) == {1.0}

    def test_ball_radius_respected(self):
        # with many draws the max norm approaches R but never exceeds it
        rng = np.random.default_rng(5)
        norms = [np.linalg.norm(init_random(2, 4, 0.7, rng).gating)
                 for _ in range(200)]
        assert max(norms) <= 0.7 + 1e-12
        assert max(norms) > 0.5  # sanity: draws actually fill the ball


class TestGroundTruth:
    def test_paper_instance_k3(self):
        p = ground_truth_paper_instance(3, 10)
        np.testing.assert_array_equal(p.regressors[0], np.eye(10)[0])
        np.testing.assert_array_equal(p.gating[0], np.eye(10)[3])
        assert p.noise_sigma == 0.05

    def test_paper_instance_k2(self):
        p = ground_truth_paper_instance(2, 10)
        np.testing.assert_array_equal(p.regressors[1], np.eye(10)[1])
        np.testing.assert_array_equal(p.gating[0], np.eye(10)[2])

    def test_dimension_guard(self):
        with pytest.raises(InvalidParameters):
            ground_truth_paper_instance(3, 4)  # 2k-1 = 5 >= 4


class TestSerialization:
    def test_round_trip(self):
        for seed in range(5):
            p = init_random(3, 7, 1.0, np.random.default_rng(seed),
                            noise_sigma=0.05)
            q = from_text(to_text(p))
            np.testing.assert_array_equal(p.regressors, q.regressors)
            np.testing.assert_array_equal(p.gating, q.gating)
            assert p.noise_sigma == q.noise_sigma

    def test_header(self):
        text = to_text(ground_truth_paper_instance(2, 5))
        assert text.splitlines()[0] == "2 5 0.050000000000000003"

    def test_malformed(self):
        with pytest.raises(ValueError):
            from_text("2 5\n")


class TestNonlinearity:
    def test_leaky_slope_domain(self):
        with pytest.raises(ValueError):
            leaky_relu(1.5)
        with pytest.raises(ValueError):
            leaky_relu(0.0)

    def test_evaluation(self):
        z = np.array([-2.0, 0.0, 3.0])
        np.testing.assert_array_equal(IDENTITY(z), z)
        np.testing.assert_array_equal(RELU(z), [0.0, 0.0, 3.0])
        np.testing.assert_allclose(leaky_relu(0.1)(z), [-0.2, 0.0, 3.0])
        np.testing.assert_allclose(SIGMOID(np.array([0.0])), [0.5])

    def test_derivative_matches_finite_differences(self):
        z = np.linspace(-3, 3, 41) + 0.0314  # avoid the kink
        h = 1e-6
        for kind in (IDENTITY, RELU, SIGMOID, leaky_relu(0.3)):
            fd = (kind(z + h) - kind(z - h)) / (2 * h)
            np.testing.assert_allclose(kind.derivative(z), fd, atol=1e-6)

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            Nonlinearity("tanh")


def test_regularization_defaults():
    cfg = RegularizationConfig()
    assert (cfg.mu, cfg.lam, cfg.delta_reg, cfg.radius) == (0.01, 50.0, 1e-3, 1.0)
    with pytest.raises(ValueError):
        RegularizationConfig(mu=-1.0)
    with pytest.raises(ValueError):
        RegularizationConfig(lam=float("inf"))


def test_parameters_immutable():
    p = make_params()
    with pytest.raises(ValueError):
        p.regressors[0, 0] = 5.0
