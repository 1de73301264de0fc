import numpy as np
import pytest

from ehcr.chain import Policy, StationaryDistribution, action_ranges
from ehcr.outage import bundle
from ehcr.performance import (
    evaluate,
    primary_success_rate,
    secondary_success_rate,
)
from ehcr.sensing import SensingConfig, detection_avg, false_alarm
from ehcr.system_model import derive, with_overrides
from helpers import random_policy as _random_policy

TAU = 5e-4
THRESHOLD = 30.0


def random_policy(rng, params, tau=TAU, threshold=THRESHOLD) -> Policy:
    return _random_policy(rng, params, tau, threshold)


def pinned_stationary(params, mass_on_beta_range, tau=TAU):
    """A frozen battery law placing all mass on the full-action range."""
    _, beta_range = action_ranges(params, tau)
    pi = np.zeros(params.n_states)
    pi[beta_range.start:] = mass_on_beta_range / len(beta_range)
    return StationaryDistribution(pi)


class TestPrimaryRate:
    def test_idle_policy_gives_silent_value(self, testbench_params):
        report = evaluate(testbench_params,
                          Policy.idle(testbench_params, TAU, THRESHOLD))
        silent = bundle(testbench_params, TAU).pu_no_outage_silent
        assert report.mu_p == pytest.approx(silent, abs=1e-12)
        assert report.mu_s == 0.0

    def test_pure_blind_on_pinned_mass_gives_interfered_value(self, testbench_params):
        params = testbench_params
        outages = bundle(params, TAU)
        pi = pinned_stationary(params, 1.0)
        policy = Policy.constant(params, TAU, THRESHOLD, 0.0, 1.0, 0.0)
        value = primary_success_rate(params, pi, policy, outages, p_d=0.97)
        assert value == pytest.approx(outages.pu_no_outage_ws, abs=1e-12)

    def test_idle_dominates_every_policy(self, testbench_params):
        # every access branch is weakly worse for the licensed user
        params = testbench_params
        idle_value = evaluate(params, Policy.idle(params, TAU, THRESHOLD)).mu_p
        rng = np.random.default_rng(31)
        for _ in range(500):
            policy = random_policy(rng, params)
            outages = bundle(params, TAU)
            pi = StationaryDistribution(np.full(params.n_states,
                                                1.0 / params.n_states))
            value = primary_success_rate(params, pi, policy, outages, p_d=0.9)
            assert value <= idle_value + 1e-12

    def test_full_model_idle_dominance(self, testbench_params):
        params = testbench_params
        idle_value = evaluate(params, Policy.idle(params, TAU, THRESHOLD)).mu_p
        rng = np.random.default_rng(33)
        for _ in range(500):
            report = evaluate(params, random_policy(rng, params))
            assert report.mu_p <= idle_value + 1e-12


class TestSecondaryRate:
    def test_idle_policy_never_transmits(self, testbench_params):
        report = evaluate(testbench_params,
                          Policy.idle(testbench_params, TAU, THRESHOLD))
        assert report.mu_s == 0.0
        assert report.p_sense == 0.0
        assert report.p_access == 0.0

    def test_idle_channel_sensing_collapse(self, testbench_params):
        # no licensed activity, sense-always: only the no-false-alarm branch
        params = with_overrides(testbench_params, rho=0.0)
        policy = Policy.constant(params, TAU, THRESHOLD, 0.0, 0.0, 1.0)
        cfg = SensingConfig.from_params(params, TAU, THRESHOLD)
        p_f = false_alarm(cfg)
        report = evaluate(params, policy)
        outages = bundle(params, TAU)
        _, beta_range = action_ranges(params, TAU)
        mass = float(report.stationary.pi[beta_range.start:].sum())
        expected = (1.0 - p_f) * outages.su_no_outage_s * mass
        assert report.mu_s == pytest.approx(expected, abs=1e-12)

    def test_monotone_in_access_probabilities_at_frozen_law(self, testbench_params):
        params = testbench_params
        outages = bundle(params, TAU)
        pi = pinned_stationary(params, 0.8)
        rng = np.random.default_rng(37)
        cfg = SensingConfig.from_params(params, TAU, THRESHOLD)
        q = derive(params, TAU)
        p_d = detection_avg(cfg, q.gamma_bar)
        p_f = false_alarm(cfg)
        for _ in range(100):
            policy = random_policy(rng, params)
            base = secondary_success_rate(params, pi, policy, outages, p_d, p_f)
            bumped_vectors = []
            for name in ("alpha", "beta1", "beta2"):
                arr = getattr(policy, name).copy()
                if arr.size == 0:
                    continue
                k = int(rng.integers(arr.size))
                if name == "alpha":
                    arr[k] = min(1.0, arr[k] + 0.1)
                    bumped_vectors.append(Policy(arr, policy.beta1, policy.beta2,
                                                 TAU, THRESHOLD))
                elif name == "beta1":
                    room = 1.0 - policy.beta1[k] - policy.beta2[k]
                    arr[k] += min(0.1, room)
                    bumped_vectors.append(Policy(policy.alpha, arr, policy.beta2,
                                                 TAU, THRESHOLD))
                else:
                    room = 1.0 - policy.beta1[k] - policy.beta2[k]
                    arr[k] += min(0.1, room)
                    bumped_vectors.append(Policy(policy.alpha, policy.beta1, arr,
                                                 TAU, THRESHOLD))
            for bumped in bumped_vectors:
                value = secondary_success_rate(params, pi, bumped, outages,
                                               p_d, p_f)
                assert value >= base - 1e-12


class TestReport:
    def test_feasibility_flag(self, testbench_params):
        params = testbench_params
        report = evaluate(params, Policy.idle(params, TAU, THRESHOLD))
        assert report.feasible  # silent value 0.728 over the 0.65 floor
        strict = with_overrides(params, mu_th=0.99)
        report = evaluate(strict, Policy.idle(strict, TAU, THRESHOLD))
        assert not report.feasible

    def test_rates_in_unit_interval(self, testbench_params):
        rng = np.random.default_rng(41)
        for _ in range(20):
            report = evaluate(testbench_params,
                              random_policy(rng, testbench_params))
            assert 0.0 <= report.mu_p <= 1.0
            assert 0.0 <= report.mu_s <= 1.0
            assert 0.0 <= report.p_sense <= 1.0
            assert 0.0 <= report.p_access <= 1.0
