import math

import numpy as np
import pytest

from cvstretch.channels import ChannelKind, apply, make_channel
from cvstretch.errors import ValidationError
from cvstretch.fock_sim import FockOperator, bell_project, fock_moments, integrate_stretch, make_ket
from cvstretch.gaussian_core import GaussianState, make_state
from cvstretch.stretching import (
    achieved_channel,
    bell_statistics,
    make_plan,
    predicted_output,
    simulate_locc_gaussian,
)


CASE_SEED = 0


def random_input(rng):
    """Displaced squeezed thermal state, so every moment carries sampling noise."""
    nu = rng.uniform(0.5, 1.5)
    r = rng.uniform(-0.6, 0.6)
    phi = rng.uniform(0, np.pi)
    rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    cov = nu * rot @ np.diag([np.exp(2 * r), np.exp(-2 * r)]) @ rot.T
    return GaussianState(rng.normal(0, 1, size=2), cov)


def random_plan(rng):
    xi = rng.uniform(0.6, 0.98)
    choice = rng.integers(4)
    if choice == 0:
        target = ChannelKind.pure_loss(rng.uniform(0.05, 0.95) * xi * xi)
    elif choice == 1:
        target = ChannelKind.thermal_loss(rng.uniform(0.05, 0.95) * xi * xi, rng.uniform(0, 0.5))
    elif choice == 2:
        target = ChannelKind.amplifier(rng.uniform(1, 3), rng.uniform(0, 0.5))
    else:
        target = ChannelKind.additive_noise(rng.uniform(0, 0.5))
    return make_plan(target, xi)


def within_stderr(res, want, k=3.0):
    mean_ok = np.abs(res.empirical_mean - want.mean) <= k * res.stderr_mean + 1e-12
    cov_ok = np.abs(res.empirical_cov - want.cov) <= k * res.stderr_cov + 1e-12
    return bool(mean_ok.all() and cov_ok.all())


class TestMakePlan:
    def test_pure_loss(self):
        plan = make_plan(ChannelKind.pure_loss(0.5), 0.9)
        assert plan.resource_channel.tag == "pure_loss"
        assert plan.resource_channel.eta == pytest.approx(0.617284, abs=1e-6)
        assert plan.gain == pytest.approx(0.707107, abs=1e-6)
        assert plan.exact and plan.residual_noise == 0.0
        assert plan.achieved == plan.target

    def test_thermal_loss_keeps_noise_on_resource(self):
        plan = make_plan(ChannelKind.thermal_loss(0.3, 0.2), 0.8)
        assert plan.resource_channel.isclose(ChannelKind.thermal_loss(0.3 / 0.64, 0.2))

    def test_amplifier(self):
        plan = make_plan(ChannelKind.amplifier(2.0), 0.9)
        assert plan.resource_channel.gain == pytest.approx(2.469136, abs=1e-6)
        assert plan.gain == pytest.approx(1.414214, abs=1e-6)
        assert plan.achieved.excess_noise == pytest.approx(0.469136, abs=1e-6)
        assert not plan.exact

    def test_loss_constraint(self):
        with pytest.raises(ValidationError, match="xi\\^2 > eta"):
            make_plan(ChannelKind.pure_loss(0.9), 0.9)

    @pytest.mark.parametrize("xi", [0.0, 1.0, -0.3, 1.2])
    def test_xi_range(self, xi):
        with pytest.raises(ValidationError):
            make_plan(ChannelKind.amplifier(1.5), xi)

    def test_unsupported_target(self):
        with pytest.raises(ValidationError):
            make_plan(ChannelKind.identity(), 0.9)

    def test_exactness_dichotomy(self, rng):
        for _ in range(200):
            plan = random_plan(rng)
            assert plan.exact == plan.target.is_loss
            if plan.exact:
                assert plan.residual_noise == 0.0
            else:
                kappa = plan.target.gain if plan.target.tag == "amplifier" else 1.0
                t = plan.xi**2
                assert plan.residual_noise == pytest.approx(kappa * (1 - t) / t, rel=1e-14)
                assert plan.residual_noise > 0

    def test_residual_decreases_towards_unit_xi(self):
        xis = np.linspace(0.5, 0.999, 40)
        res = [make_plan(ChannelKind.amplifier(1.7, 0.1), x).residual_noise for x in xis]
        assert all(a > b for a, b in zip(res, res[1:]))
        assert res[-1] < 0.004


class TestAchievedChannel:
    def test_loss_grid_matches_target(self):
        for eta in np.linspace(0.02, 0.95, 12):
            for n in (0.0, 0.1, 0.7):
                for xi in np.linspace(0.2, 0.995, 12):
                    if xi * xi <= eta:
                        continue
                    target = ChannelKind.thermal_loss(eta, n) if n else ChannelKind.pure_loss(eta)
                    plan = make_plan(target, xi)
                    assert achieved_channel(plan).allclose(make_channel(target), atol=1e-12)

    def test_amplifier(self):
        plan = make_plan(ChannelKind.amplifier(2.0), 0.9)
        got = achieved_channel(plan)
        assert got.allclose(make_channel(ChannelKind.amplifier(2.0, 2 * 0.19 / 0.81)), atol=1e-12)
        assert got.allclose(make_channel(plan.achieved), atol=1e-12)

    def test_additive_noise_residual(self):
        plan = make_plan(ChannelKind.additive_noise(0.2), 0.99)
        assert plan.residual_noise == pytest.approx(0.020304, abs=1e-6)
        got = achieved_channel(plan)
        np.testing.assert_allclose(got.K, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(got.alpha, np.diag([0.2 + 0.0203040506, 0.0203040506]), atol=1e-9)
        assert plan.achieved.tag == "other"


class TestBellStatistics:
    @pytest.mark.parametrize("a0,xi", [(0.3 - 0.1j, 0.8), (-0.5j, 0.6), (0.7, 0.9)])
    def test_coherent_against_fock(self, a0, xi):
        stats = bell_statistics(make_state("coherent", alpha=a0), xi)
        rho = make_ket("coherent", 40, alpha=a0).density()
        for beta in (0.0, 0.25 + 0.1j, -0.4 - 0.3j):
            proj = bell_project(beta, xi, rho)
            assert stats.outcome_density(beta) == pytest.approx(proj.weight, rel=1e-8)
            cond = stats.conditional_state(beta)
            np.testing.assert_allclose(cond.mean, fock_moments(proj.state)[0], atol=1e-8)
            np.testing.assert_allclose(cond.cov, 0.5 * np.eye(2), atol=1e-12)

    def test_fock_moments_of_conditional_thermal_input(self):
        n_th = 0.3
        pops = n_th ** np.arange(41) / (1 + n_th) ** (np.arange(41) + 1)
        rho = FockOperator(40, 1, np.diag(pops).astype(complex))
        stats = bell_statistics(GaussianState(np.zeros(2), (n_th + 0.5) * np.eye(2)), 0.7)
        beta = 0.3 + 0.2j
        proj = bell_project(beta, 0.7, rho)
        assert stats.outcome_density(beta) == pytest.approx(proj.weight, rel=1e-7)
        mean, cov = fock_moments(proj.state)
        cond = stats.conditional_state(beta)
        np.testing.assert_allclose(mean, cond.mean, atol=1e-7)
        np.testing.assert_allclose(cov, cond.cov, atol=1e-7)

    def test_rejects_two_modes(self):
        with pytest.raises(ValidationError):
            bell_statistics(make_state("vacuum", 2), 0.5)


class TestMonteCarlo:
    def test_vacuum_fixed_point(self):
        plan = make_plan(ChannelKind.pure_loss(0.5), 0.9)
        res = simulate_locc_gaussian(plan, make_state("vacuum"), 100_000, seed=1)
        assert within_stderr(res, make_state("vacuum"))

    def test_coherent_mean(self):
        plan = make_plan(ChannelKind.pure_loss(0.5), 0.9)
        res = simulate_locc_gaussian(plan, make_state("coherent", alpha=1.0), 100_000, seed=2)
        want = GaussianState(np.array([1.0, 0.0]), 0.5 * np.eye(2))
        assert within_stderr(res, want)

    def test_amplifier_vacuum(self):
        plan = make_plan(ChannelKind.amplifier(2.0), 0.9)
        res = simulate_locc_gaussian(plan, make_state("vacuum"), 100_000, seed=3)
        np.testing.assert_allclose(res.empirical_cov, 1.969136 * np.eye(2), atol=1e-6)
        exact = ChannelKind.amplifier(2.0, 2 * 0.19 / 0.81)
        assert within_stderr(res, apply(make_channel(exact), make_state("vacuum")))

    def test_random_cases(self):
        rng = np.random.default_rng(CASE_SEED)
        for case in range(20):
            plan = random_plan(rng)
            state = random_input(rng)
            res = simulate_locc_gaussian(plan, state, 100_000, seed=1000 + case)
            assert np.all(res.stderr_cov > 0)
            assert within_stderr(res, predicted_output(plan, state)), (case, plan, state)

    def test_stderr_calibration(self):
        # z-scores against the exact prediction should look standard normal
        rng = np.random.default_rng(5)
        z = []
        for i in range(150):
            plan, state = random_plan(rng), random_input(rng)
            res = simulate_locc_gaussian(plan, state, 20_000, seed=i)
            want = predicted_output(plan, state)
            z.extend((res.empirical_mean - want.mean) / res.stderr_mean)
            z.extend(((res.empirical_cov - want.cov) / res.stderr_cov)[np.triu_indices(2)])
        z = np.asarray(z)
        assert abs(z.mean()) < 0.1
        assert 0.9 < z.std() < 1.1
        assert np.mean(np.abs(z) > 3) < 0.01

    def test_seed_reproducible(self):
        plan = make_plan(ChannelKind.thermal_loss(0.4, 0.1), 0.8)
        state = GaussianState(np.array([0.2, -0.1]), np.diag([0.9, 0.4]))
        a = simulate_locc_gaussian(plan, state, 50_000, seed=7)
        b = simulate_locc_gaussian(plan, state, 50_000, seed=7)
        c = simulate_locc_gaussian(plan, state, 50_000, seed=8)
        assert a.empirical_cov.tobytes() == b.empirical_cov.tobytes()
        assert a.empirical_mean.tobytes() == b.empirical_mean.tobytes()
        assert a.empirical_cov.tobytes() != c.empirical_cov.tobytes()

    def test_sample_floor(self):
        plan = make_plan(ChannelKind.pure_loss(0.5), 0.9)
        with pytest.raises(ValidationError):
            simulate_locc_gaussian(plan, make_state("vacuum"), 999, seed=0)

    def test_rejects_two_modes(self):
        plan = make_plan(ChannelKind.pure_loss(0.5), 0.9)
        with pytest.raises(ValidationError):
            simulate_locc_gaussian(plan, make_state("vacuum", 2), 1000, seed=0)


class TestCrossEngine:
    @pytest.mark.parametrize(
        "target,xi",
        [(ChannelKind.pure_loss(0.5), 0.9), (ChannelKind.amplifier(1.3, 0.05), 0.9)],
    )
    def test_thermal_input(self, target, xi):
        n_th = 0.2
        pops = n_th ** np.arange(31) / (1 + n_th) ** (np.arange(31) + 1)
        rho = FockOperator(30, 1, np.diag(pops).astype(complex))
        plan = make_plan(target, xi)
        fock_mean_, fock_cov = fock_moments(integrate_stretch(plan, rho).rho)
        state = GaussianState(np.zeros(2), (n_th + 0.5) * np.eye(2))
        mc = simulate_locc_gaussian(plan, state, 1_000_000, seed=11)
        np.testing.assert_allclose(mc.empirical_mean, fock_mean_, atol=5e-3)
        np.testing.assert_allclose(mc.empirical_cov, fock_cov, atol=5e-3)

    def test_coherent_input(self):
        plan = make_plan(ChannelKind.thermal_loss(0.45, 0.1), 0.85)
        rho = make_ket("coherent", 30, alpha=0.4 - 0.3j).density()
        fock_mean_, fock_cov = fock_moments(integrate_stretch(plan, rho).rho)
        mc = simulate_locc_gaussian(plan, make_state("coherent", alpha=0.4 - 0.3j), 100_000, seed=12)
        np.testing.assert_allclose(mc.empirical_mean, fock_mean_, atol=5e-3)
        np.testing.assert_allclose(mc.empirical_cov, fock_cov, atol=5e-3)
