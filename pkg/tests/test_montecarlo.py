import math

import numpy as np
import pytest

from mmjoint.closed_form import EstimationStats, PowerAllocation
from mmjoint.montecarlo import (
    draw_channels,
    empirical_sinr,
    estimate_channels,
    mrt_precoders,
)
from mmjoint.scenario import LargeScaleProfile

from conftest import make_system


@pytest.fixture
def config():
    return make_system(n_unicast=2, n_groups=1, group_sizes=(2,),
                       n_antennas=64, total_dl_power=5.0, energy=10.0)


@pytest.fixture
def profile():
    return LargeScaleProfile(beta=[0.8, 1.5], eta=[[1.0, 0.6]])


@pytest.fixture
def alloc():
    # tau = U + G = 3; pilot energies inside the budget of 10
    return PowerAllocation(p_dl=[1.2, 0.8], q_dl=[3.0], p_up=[2.0, 2.0],
                           q_up=[[1.5, 2.5]], tau=3)


class TestDrawChannels:
    def test_reproducible_from_seed_and_index(self, config, profile):
        def draw(i):
            rng = np.random.default_rng(
                np.random.SeedSequence(99, spawn_key=(i,))
            )
            return draw_channels(profile, config, rng)

        a, b = draw(5), draw(5)
        assert np.array_equal(a.f, b.f)
        assert all(np.array_equal(x, y) for x, y in zip(a.g, b.g))
        c = draw(6)
        assert not np.array_equal(a.f, c.f)

    def test_variance_and_mean(self, config, profile):
        rng = np.random.default_rng(0)
        n = 2000
        f = np.stack([draw_channels(profile, config, rng).f for _ in range(n)])
        per_antenna = np.mean(np.abs(f) ** 2, axis=(0, 2))
        assert np.allclose(per_antenna, profile.beta, rtol=0.05)
        n_samp = n * config.n_antennas
        for m, beta in enumerate(profile.beta):
            se = math.sqrt(beta / 2.0 / n_samp)  # per real component
            assert abs(np.mean(f[:, m, :].real)) < 3 * se
            assert abs(np.mean(f[:, m, :].imag)) < 3 * se


class TestEstimateChannels:
    def test_zero_pilot_gives_zero_estimates(self, config, profile):
        rng = np.random.default_rng(1)
        real = draw_channels(profile, config, rng)
        alloc = PowerAllocation(p_dl=[0.0, 0.0], q_dl=[0.0],
                                p_up=[0.0, 0.0], q_up=[[0.0, 0.0]], tau=3)
        est = estimate_channels(real, alloc, profile, rng)
        assert np.all(est.f_hat == 0.0)
        assert np.all(est.g_hat_composite == 0.0)
        assert np.all(est.g_hat_user[0] == 0.0)

    def test_estimate_variances_match_closed_form(self, config, profile, alloc):
        rng = np.random.default_rng(2)
        stats = EstimationStats.from_allocation(alloc, profile)
        n = 2000
        fh, gh, ghk = [], [], []
        for _ in range(n):
            real = draw_channels(profile, config, rng)
            est = estimate_channels(real, alloc, profile, rng)
            fh.append(est.f_hat)
            gh.append(est.g_hat_composite)
            ghk.append(est.g_hat_user[0])
        fh, gh, ghk = np.stack(fh), np.stack(gh), np.stack(ghk)
        assert np.allclose(np.mean(np.abs(fh) ** 2, axis=(0, 2)),
                           stats.vartheta, rtol=0.05)
        assert np.mean(np.abs(gh[:, 0]) ** 2) == pytest.approx(
            stats.gamma[0], rel=0.05
        )
        assert np.allclose(np.mean(np.abs(ghk) ** 2, axis=(0, 2)),
                           stats.xi[0], rtol=0.05)

    def test_mmse_orthogonality(self, config, profile, alloc):
        # estimate and estimation error must be uncorrelated
        rng = np.random.default_rng(3)
        n = 2000
        cross = []
        for _ in range(n):
            real = draw_channels(profile, config, rng)
            est = estimate_channels(real, alloc, profile, rng)
            err = real.f - est.f_hat
            cross.append(np.mean(est.f_hat.conj() * err, axis=1))
        cross = np.stack(cross)
        se = np.std(cross.real, axis=0) / math.sqrt(n)
        assert np.all(np.abs(np.mean(cross.real, axis=0)) < 3 * se)

    def test_error_variance_decomposition(self, config, profile, alloc):
        # var(f) = var(f_hat) + var(f - f_hat)
        rng = np.random.default_rng(4)
        stats = EstimationStats.from_allocation(alloc, profile)
        n = 2000
        err2 = []
        for _ in range(n):
            real = draw_channels(profile, config, rng)
            est = estimate_channels(real, alloc, profile, rng)
            err2.append(np.mean(np.abs(real.f - est.f_hat) ** 2, axis=1))
        err2 = np.stack(err2)
        expected = np.asarray(profile.beta) - np.asarray(stats.vartheta)
        se = np.std(err2, axis=0) / math.sqrt(n)
        assert np.all(np.abs(np.mean(err2, axis=0) - expected) < 3 * se)

    def test_user_estimates_proportional_to_composite(self, config, profile,
                                                      alloc):
        rng = np.random.default_rng(5)
        real = draw_channels(profile, config, rng)
        est = estimate_channels(real, alloc, profile, rng)
        # exact scalar relation between per-user and composite estimates
        ratio = est.g_hat_user[0] / est.g_hat_composite[0][None, :]
        assert np.allclose(ratio, ratio[:, :1], rtol=1e-12, atol=1e-15)


class TestMrtPrecoders:
    def test_normalization(self, config, profile, alloc):
        rng = np.random.default_rng(6)
        stats = EstimationStats.from_allocation(alloc, profile)
        n = 2000
        v2 = np.zeros(2)
        w2 = 0.0
        for _ in range(n):
            real = draw_channels(profile, config, rng)
            est = estimate_channels(real, alloc, profile, rng)
            V, W = mrt_precoders(est, alloc, stats)
            v2 += np.sum(np.abs(V) ** 2, axis=0)
            w2 += np.sum(np.abs(W[:, 0]) ** 2)
        assert np.allclose(v2 / n, alloc.p_dl, rtol=0.02)
        assert w2 / n == pytest.approx(alloc.q_dl[0], rel=0.02)

    def test_zero_power_gives_zero_vector(self, config, profile):
        alloc = PowerAllocation(p_dl=[0.0, 1.0], q_dl=[0.0],
                                p_up=[2.0, 2.0], q_up=[[1.5, 2.5]], tau=3)
        rng = np.random.default_rng(7)
        stats = EstimationStats.from_allocation(alloc, profile)
        real = draw_channels(profile, config, rng)
        est = estimate_channels(real, alloc, profile, rng)
        V, W = mrt_precoders(est, alloc, stats)
        assert np.all(V[:, 0] == 0.0)
        assert np.all(W == 0.0)
        assert np.any(V[:, 1] != 0.0)


class TestEmpiricalSinr:
    def test_requires_enough_realizations(self, config, profile, alloc):
        with pytest.raises(ValueError):
            empirical_sinr(config, profile, alloc, 50, seed=0)

    def test_matches_analytic_sinr(self, config, profile, alloc):
        report = empirical_sinr(config, profile, alloc, 4000, seed=17)
        for user in report.unicast + report.multicast:
            assert user.sinr_relative_error < 0.05

    def test_desired_coefficient(self, config, profile, alloc):
        stats = EstimationStats.from_allocation(alloc, profile)
        report = empirical_sinr(config, profile, alloc, 4000, seed=18)
        for m, user in enumerate(report.unicast):
            expected = config.n_antennas * alloc.p_dl[m] * stats.vartheta[m]
            assert abs(user.desired_power - expected) < 3 * user.desired_power_se

    def test_decomposition_terms(self, config, profile, alloc):
        report = empirical_sinr(config, profile, alloc, 4000, seed=19)
        for user in report.unicast + report.multicast:
            own = user.self_interference + user.same_service_interference
            tol = 3 * math.sqrt(user.self_interference_se**2
                                + user.same_service_interference_se**2)
            assert abs(own - user.same_service_analytic) < tol
            assert (
                abs(user.cross_service_interference
                    - user.cross_service_analytic)
                < 3 * user.cross_service_interference_se
            )

    def test_zero_downlink_power_zero_sinr(self, config, profile):
        alloc = PowerAllocation(p_dl=[0.0, 0.0], q_dl=[0.0],
                                p_up=[2.0, 2.0], q_up=[[1.5, 2.5]], tau=3)
        report = empirical_sinr(config, profile, alloc, 200, seed=20)
        for user in report.unicast + report.multicast:
            assert user.sinr_empirical == 0.0

    def test_parallel_runs_are_bit_identical(self, config, profile, alloc):
        seq = empirical_sinr(config, profile, alloc, 1500, seed=21,
                             n_workers=1)
        par = empirical_sinr(config, profile, alloc, 1500, seed=21,
                             n_workers=4)
        assert seq.to_dict() == par.to_dict()
