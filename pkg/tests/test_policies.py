import math

import numpy as np
import pytest

from banditlab.approximators import (
    AdversarialOverSpec,
    AdversarialUnderSpec,
    EnsembleSpec,
    ExactSpec,
    MeanFieldSpec,
    ScaledCovSpec,
    mean_field_approx,
    scaled_cov_approx,
)
from banditlab.bandit import BanditInstance
from banditlab.errors import ConfigError
from banditlab.gaussian import GaussianBelief, best_arm_marginal
from banditlab.policies import (
    ApproxSample,
    ApproxTS,
    ApproxUpdate,
    ExactTS,
    ExplorationSchedule,
    ForcedExploration,
    PolicyState,
    Trajectory,
    init_policy_state,
    make_trajectory_rngs,
    simulate,
    step,
)
from banditlab.posterior import update


MOTIVATING_PRIOR = GaussianBelief(np.array([0.1, 0.9]), 0.25 * np.eye(2))
MOTIVATING_INSTANCE = BanditInstance(np.array([0.6, 0.5]), 0.2)
INDEP_PRIOR = GaussianBelief(np.zeros(2), np.array([[2.0, 1.0], [1.0, 1.0]]))


def rngs_for(seed):
    return make_trajectory_rngs(np.random.SeedSequence(seed))


class TestExplorationSchedule:
    def test_probability_one_before_rate_constant(self):
        sched = ExplorationSchedule(50.0)
        assert all(sched.prob(t) == 1.0 for t in range(1, 51))
        assert sched.prob(100) == 0.5

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ConfigError):
            ExplorationSchedule(0.0)

    def test_expected_forced_grows_like_log(self):
        sched = ExplorationSchedule(1.0)
        expected = sched.expected_forced(10_000)
        assert expected == pytest.approx(math.log(10_000) + 0.5772, abs=0.1)


class TestExactTS:
    def test_near_point_mass_plays_argmax(self):
        prior = GaussianBelief(np.array([1.0, 0.0]), 1e-12 * np.eye(2))
        instance = BanditInstance(np.array([1.0, 0.0]), 0.1)
        traj = simulate(ExactTS(), prior, instance, 10_000, rngs_for(0))
        assert (traj.arms == 0).mean() >= 0.999

    def test_deterministic_given_seed(self):
        a = simulate(ExactTS(), MOTIVATING_PRIOR, MOTIVATING_INSTANCE, 200, rngs_for(7))
        b = simulate(ExactTS(), MOTIVATING_PRIOR, MOTIVATING_INSTANCE, 200, rngs_for(7))
        assert np.array_equal(a.arms, b.arms)
        assert np.array_equal(a.rewards, b.rewards)

    def test_belief_tracks_conjugate_updates(self):
        traj = simulate(ExactTS(), MOTIVATING_PRIOR, MOTIVATING_INSTANCE, 50, rngs_for(3))
        belief = MOTIVATING_PRIOR
        for arm, reward in zip(traj.arms, traj.rewards):
            belief = update(belief, int(arm), float(reward), 0.2)
        assert np.allclose(traj.final_state.belief.mean, belief.mean, atol=1e-12)
        assert np.allclose(traj.final_state.belief.cov, belief.cov, atol=1e-12)


class TestApproxTS:
    def test_adversarial_under_always_plays_arm_two(self):
        policy = ApproxTS(AdversarialUnderSpec())
        traj = simulate(policy, INDEP_PRIOR, MOTIVATING_INSTANCE, 300, rngs_for(1))
        assert np.all(traj.arms == 1)

    def test_matches_approx_sample_for_non_ensemble(self):
        for approx in (ScaledCovSpec(0.3), ScaledCovSpec(4.5), MeanFieldSpec()):
            a = simulate(
                ApproxTS(approx), MOTIVATING_PRIOR, MOTIVATING_INSTANCE, 150, rngs_for(9)
            )
            b = simulate(
                ApproxSample(approx),
                MOTIVATING_PRIOR,
                MOTIVATING_INSTANCE,
                150,
                rngs_for(9),
            )
            assert np.array_equal(a.arms, b.arms)
            assert np.allclose(
                a.final_state.belief.cov, b.final_state.belief.cov, atol=1e-12
            )

    def test_ensemble_keeps_no_exact_belief(self):
        policy = ApproxTS(EnsembleSpec(2))
        state = init_policy_state(policy, MOTIVATING_PRIOR, rngs_for(2))
        assert state.belief is None
        assert state.ensemble is not None and state.ensemble.n_models == 2

    def test_ensemble_trajectory_deterministic(self):
        policy = ApproxTS(EnsembleSpec(3))
        a = simulate(policy, MOTIVATING_PRIOR, MOTIVATING_INSTANCE, 100, rngs_for(11))
        b = simulate(policy, MOTIVATING_PRIOR, MOTIVATING_INSTANCE, 100, rngs_for(11))
        assert np.array_equal(a.arms, b.arms)


class TestForcedExploration:
    def test_always_uniform_before_rate_constant(self):
        policy = ForcedExploration(AdversarialUnderSpec(), ExplorationSchedule(50.0))
        traj = simulate(policy, INDEP_PRIOR, MOTIVATING_INSTANCE, 50, rngs_for(4))
        # all 50 steps forced: arm 0 appears with binomial(50, 1/2) frequency
        count = int((traj.arms == 0).sum())
        assert 10 <= count <= 40

    def test_forced_pull_count_matches_schedule(self):
        # under the pure restriction, every arm-0 pull is a forced pull that
        # landed uniformly on arm 0
        horizon, reps, rate = 2000, 60, 5.0
        sched = ExplorationSchedule(rate)
        policy = ForcedExploration(AdversarialUnderSpec(), sched)
        counts = []
        for i in range(reps):
            traj = simulate(policy, INDEP_PRIOR, MOTIVATING_INSTANCE, horizon, rngs_for(100 + i))
            counts.append(int((traj.arms == 0).sum()))
        probs = np.array([sched.prob(t) / 2.0 for t in range(1, horizon + 1)])
        mean_expected = probs.sum()
        sd_expected = math.sqrt((probs * (1.0 - probs)).sum() / reps)
        assert abs(np.mean(counts) - mean_expected) < 4 * sd_expected

    def test_posterior_concentrates_under_forced_exploration(self):
        # budgeted restriction adversary: wrong-arm mass capped by the
        # divergence budget, so forced pulls let the posterior concentrate
        budget = math.log(2.0)
        policy = ForcedExploration(
            AdversarialUnderSpec(alpha=0.0, epsilon=budget), ExplorationSchedule(5.0)
        )
        instance = BanditInstance(np.array([0.5, 0.0]), 1.0)
        early, late = [], []
        for i in range(16):
            t200 = simulate(policy, INDEP_PRIOR, instance, 200, rngs_for(500 + i))
            t2000 = simulate(policy, INDEP_PRIOR, instance, 2000, rngs_for(500 + i))
            early.append(best_arm_marginal(t200.final_state.belief).probs[0])
            late.append(best_arm_marginal(t2000.final_state.belief).probs[0])
        assert np.median(late) > np.median(early)

    def test_update_rule_matches_naive_policy(self):
        approx = ScaledCovSpec(0.3)
        forced = ForcedExploration(approx, ExplorationSchedule(1.0))
        traj = simulate(forced, MOTIVATING_PRIOR, MOTIVATING_INSTANCE, 80, rngs_for(6))
        belief = MOTIVATING_PRIOR
        for arm, reward in zip(traj.arms, traj.rewards):
            belief = update(belief, int(arm), float(reward), 0.2)
        assert np.allclose(traj.final_state.belief.mean, belief.mean, atol=1e-12)


class TestApproxSampleEnsemble:
    def test_exact_belief_maintained_and_resynced(self):
        policy = ApproxSample(EnsembleSpec(4))
        traj = simulate(policy, MOTIVATING_PRIOR, MOTIVATING_INSTANCE, 60, rngs_for(13))
        belief = MOTIVATING_PRIOR
        for arm, reward in zip(traj.arms, traj.rewards):
            belief = update(belief, int(arm), float(reward), 0.2)
        assert np.allclose(traj.final_state.belief.mean, belief.mean, atol=1e-12)
        # re-synced ensemble carries the exact covariance, not a perturbed one
        assert np.allclose(traj.final_state.ensemble.cov, belief.cov, atol=1e-12)


class TestApproxUpdate:
    def test_projection_composition_scaled(self):
        policy = ApproxUpdate(ScaledCovSpec(0.3))
        state = init_policy_state(policy, MOTIVATING_PRIOR, rngs_for(8))
        arm, reward, state2 = step(policy, state, MOTIVATING_INSTANCE, 1, rngs_for(8))
        expected = scaled_cov_approx(
            update(MOTIVATING_PRIOR, arm, reward, 0.2), 0.3
        )
        assert np.allclose(state2.belief.cov, expected.cov, atol=1e-12)
        assert np.allclose(state2.belief.mean, expected.mean, atol=1e-12)

    def test_mean_field_keeps_belief_diagonal(self):
        policy = ApproxUpdate(MeanFieldSpec())
        prior = GaussianBelief(np.zeros(2), np.array([[1.0, 0.4], [0.4, 1.0]]))
        traj = simulate(policy, prior, MOTIVATING_INSTANCE, 40, rngs_for(10))
        cov = traj.final_state.belief.cov
        assert cov[0, 1] == 0.0 and cov[1, 0] == 0.0

    def test_exact_projection_is_exact_ts(self):
        a = simulate(
            ApproxUpdate(ExactSpec()), MOTIVATING_PRIOR, MOTIVATING_INSTANCE, 100, rngs_for(12)
        )
        b = simulate(ExactTS(), MOTIVATING_PRIOR, MOTIVATING_INSTANCE, 100, rngs_for(12))
        assert np.array_equal(a.arms, b.arms)

    def test_rejects_unprojectable_approximators(self):
        with pytest.raises(ConfigError):
            ApproxUpdate(EnsembleSpec(2))
        with pytest.raises(ConfigError):
            ApproxUpdate(AdversarialOverSpec(alpha=2.0, epsilon=0.5))
        with pytest.raises(ConfigError):
            ApproxUpdate(AdversarialUnderSpec())


class TestStepValidation:
    def test_rejects_time_zero(self):
        state = init_policy_state(ExactTS(), MOTIVATING_PRIOR, rngs_for(0))
        with pytest.raises(ValueError):
            step(ExactTS(), state, MOTIVATING_INSTANCE, 0, rngs_for(0))

    def test_simulate_returns_trajectory(self):
        traj = simulate(ExactTS(), MOTIVATING_PRIOR, MOTIVATING_INSTANCE, 10, rngs_for(0))
        assert isinstance(traj, Trajectory)
        assert traj.arms.shape == (10,) and traj.rewards.shape == (10,)
