"""Shared oracle utilities for the test suite."""
import numpy as np

from ehcr.chain import (
    Policy,
    TransitionMatrix,
    action_ranges,
    compose_transition,
    stationary_distribution,
)
from ehcr.performance import primary_success_rate, secondary_success_rate


def random_policy(rng, params, tau, threshold) -> Policy:
    """Uniform draw over the policy polytope at the given sensing settings."""
    alpha_range, beta_range = action_ranges(params, tau)
    b1 = rng.random(len(beta_range))
    b2 = rng.random(len(beta_range))
    over = b1 + b2 > 1.0
    b1[over], b2[over] = 1.0 - b1[over], 1.0 - b2[over]
    return Policy(alpha=rng.random(len(alpha_range)), beta1=b1, beta2=b2,
                  tau=tau, threshold=threshold)


def fast_policy_value(params, components, outages, p_d, p_f, policy):
    """(mu_p, mu_s) of a policy from precomputed kernel components."""
    kernel = compose_transition(components, policy.alpha, policy.beta1,
                                policy.beta2)
    pi = stationary_distribution(TransitionMatrix(kernel))
    mu_p = primary_success_rate(params, pi, policy, outages, p_d)
    mu_s = secondary_success_rate(params, pi, policy, outages, p_d, p_f)
    return mu_p, mu_s
