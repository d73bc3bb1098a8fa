import math

import numpy as np
import pytest

from src.domain.entities import ChannelParams, EffectiveParams, SessionSample, SessionSamples
from src.domain.exceptions import EstimationError, InvalidArgumentError
from src.domain.keyrate import mutual_info_ab
from src.infrastructure.rng import PhiloxNormalSource, derive_seed

REFERENCE = dict(mu=10.0, eta=0.5, eps=0.05)


class TestPhiloxSource:
    def test_uniform_range(self):
        u = PhiloxNormalSource(3).uniform(10000)
        assert u.min() > 0.0
        assert u.max() <= 1.0

    def test_same_seed_same_stream(self):
        assert np.array_equal(PhiloxNormalSource(7).standard_normal(101),
                              PhiloxNormalSource(7).standard_normal(101))

    def test_different_seeds_differ(self):
        assert not np.array_equal(PhiloxNormalSource(7).standard_normal(10),
                                  PhiloxNormalSource(8).standard_normal(10))

    def test_odd_count_is_a_prefix(self):
        odd = PhiloxNormalSource(11).standard_normal(5)
        even = PhiloxNormalSource(11).standard_normal(6)
        assert odd.shape == (5,)
        assert np.array_equal(odd, even[:5])

    def test_box_muller_pairs(self):
        u = PhiloxNormalSource(5).uniform(2)
        z = PhiloxNormalSource(5).standard_normal(2)
        radius = math.sqrt(-2.0 * math.log(u[0]))
        assert z[0] == pytest.approx(radius * math.cos(2 * math.pi * u[1]), rel=1e-14)
        assert z[1] == pytest.approx(radius * math.sin(2 * math.pi * u[1]), rel=1e-14)

    def test_moments(self):
        z = PhiloxNormalSource(0).standard_normal(200000)
        assert abs(z.mean()) < 0.01
        assert z.var() == pytest.approx(1.0, abs=0.01)

    @pytest.mark.parametrize("seed", [-1, 1.5, True])
    def test_bad_seed(self, seed):
        with pytest.raises(InvalidArgumentError):
            PhiloxNormalSource(seed)

    def test_derived_seeds(self):
        assert [derive_seed(10, i) for i in range(3)] == [10, 11, 12]


class TestSessionSamples:
    def test_sequence_view(self):
        samples = SessionSamples(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[0.5, 0.5], [1.5, 2.5]]))
        assert len(samples) == 2
        assert samples[1] == SessionSample(alpha=(3.0, 4.0), beta=(1.5, 2.5))
        assert [s.alpha for s in samples] == [(1.0, 2.0), (3.0, 4.0)]

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            SessionSamples(np.zeros((3, 2)), np.zeros((2, 2)))

    def test_non_finite(self):
        with pytest.raises(InvalidArgumentError):
            SessionSamples(np.array([[np.nan, 0.0]]), np.zeros((1, 2)))


class TestSampling:
    def test_shapes(self, simulator):
        session = simulator.sample_session(10.0, ChannelParams(0.5, 0.05), 1000, seed=1)
        assert len(session) == 1000
        assert session.alpha.shape == (1000, 2)
        assert session.beta.shape == (1000, 2)

    def test_deterministic_under_seed(self, simulator):
        ch = ChannelParams(0.5, 0.05)
        first = simulator.sample_session(10.0, ch, 500, seed=42)
        second = simulator.sample_session(10.0, ch, 500, seed=42)
        assert np.array_equal(first.alpha, second.alpha)
        assert np.array_equal(first.beta, second.beta)
        other = simulator.sample_session(10.0, ch, 500, seed=43)
        assert not np.array_equal(first.alpha, other.alpha)

    def test_stream_order(self, simulator):
        mu, ch = 4.0, ChannelParams(0.64, 0.1)
        session = simulator.sample_session(mu, ch, 3, seed=9)
        z = PhiloxNormalSource(9).standard_normal(12).reshape(3, 4)
        assert np.allclose(session.alpha, math.sqrt(mu / 2) * z[:, :2], rtol=1e-14)
        noise_sd = math.sqrt((0.64 * 0.1 + 2.0) / 2.0)
        assert np.allclose(session.beta, 0.8 * session.alpha + noise_sd * z[:, 2:], rtol=1e-14)

    @pytest.mark.parametrize("n", [0, -5, 2.5])
    def test_bad_sample_count(self, simulator, n):
        with pytest.raises(InvalidArgumentError):
            simulator.sample_session(10.0, ChannelParams(0.5), n, seed=0)

    def test_bad_mu(self, simulator):
        with pytest.raises(InvalidArgumentError):
            simulator.sample_session(0.0, ChannelParams(0.5), 10, seed=0)


class TestEstimation:
    def test_reference_point_within_three_sigma(self, simulator):
        ch = ChannelParams(REFERENCE["eta"], REFERENCE["eps"])
        session = simulator.sample_session(REFERENCE["mu"], ch, 1_000_000, seed=0)
        estimate = simulator.estimate_channel(session, REFERENCE["mu"])

        assert estimate.sample_count == 1_000_000
        assert abs(estimate.eta_hat - ch.eta) < 3 * estimate.eta_se
        assert abs(estimate.eps_hat - ch.eps) < 3 * estimate.eps_se

        truth = EffectiveParams(k=1.0, mu_eff=REFERENCE["mu"], eta_eff=ch.eta, eps_eff=ch.eps)
        assert abs(estimate.i_ab_hat - mutual_info_ab(truth, asymptotic=False)) < 3 * estimate.i_ab_se

    def test_noiseless_channel(self, simulator):
        session = simulator.sample_session(10.0, ChannelParams(0.5, 0.0), 200000, seed=3)
        estimate = simulator.estimate_channel(session, 10.0)
        assert abs(estimate.eps_hat) < 3 * estimate.eps_se

    def test_standard_errors_shrink_as_root_n(self, simulator):
        ch = ChannelParams(0.5, 0.05)
        small = simulator.estimate_channel(simulator.sample_session(10.0, ch, 10000, seed=1), 10.0)
        large = simulator.estimate_channel(simulator.sample_session(10.0, ch, 40000, seed=2), 10.0)
        assert small.eta_se / large.eta_se == pytest.approx(2.0, rel=0.05)
        assert small.eps_se / large.eps_se == pytest.approx(2.0, rel=0.05)
        assert small.i_ab_se / large.i_ab_se == pytest.approx(2.0, rel=0.05)

    def test_too_few_samples(self, simulator):
        session = simulator.sample_session(10.0, ChannelParams(0.5), 99, seed=0)
        with pytest.raises(InvalidArgumentError):
            simulator.estimate_channel(session, 10.0)

    def test_noise_free_outcomes_are_degenerate(self, simulator):
        session = simulator.sample_session(10.0, ChannelParams(0.5), 1000, seed=0)
        copied = SessionSamples(session.alpha, 2.0 * session.alpha)
        with pytest.raises(EstimationError):
            simulator.estimate_channel(copied, 10.0)

    def test_declared_modulation_must_match(self, simulator):
        session = simulator.sample_session(10.0, ChannelParams(0.5, 0.05), 5000, seed=0)
        with pytest.raises(EstimationError):
            simulator.estimate_channel(session, 20.0)


class TestSideChannelTransparency:
    def test_estimates_ignore_the_side_channel(self, orchestrator):
        clean, _, clean_rates = orchestrator.simulate(
            samples=5000, seed=4, nbar=0.0, m=0.0, **REFERENCE)
        hacked, _, hacked_rates = orchestrator.simulate(
            samples=5000, seed=4, nbar=1.0, m=1.0, **REFERENCE)
        assert hacked == clean
        assert hacked_rates["rate_true"] < clean_rates["rate_true"]
        assert hacked_rates["rate_estimated"] < clean_rates["rate_estimated"]

    def test_samples_table(self, orchestrator):
        _, session, _ = orchestrator.simulate(samples=200, seed=0, nbar=0.0, m=1.0, **REFERENCE)
        table = orchestrator.samples_table(session)
        assert list(table.columns) == ["alpha_x", "alpha_p", "beta_x", "beta_p"]
        assert len(table) == 200
        assert np.array_equal(table["beta_p"].to_numpy(), session.beta[:, 1])
