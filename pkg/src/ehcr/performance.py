"""Success rates of both users for a given parameter set and policy.

The licensed user's rate averages its scenario success probabilities over
the stationary battery law and the action mix at each level, with sensing
splitting into detected (silent secondary) and mis-detected (interfered)
branches.  The secondary rate counts a slot as successful only when the
node transmits and the burst survives, so idling contributes zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import harvesting, sensing
from .chain import (
    Policy,
    StationaryDistribution,
    access_stats,
    action_ranges,
    build_transition_matrix,
    stationary_distribution,
)
from .outage import OutageBundle, bundle
from .system_model import SystemParams, derive

#: slack applied when comparing the licensed-user rate to its floor
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class PerformanceReport:
    """Evaluated rates and access statistics for one (params, policy) pair."""

    mu_p: float
    mu_s: float
    p_sense: float
    p_access: float
    expected_sensing_time: float
    stationary: StationaryDistribution
    feasible: bool


def primary_success_rate(params: SystemParams, stationary: StationaryDistribution,
                         policy: Policy, outages: OutageBundle, p_d: float) -> float:
    """Licensed-user success rate under the secondary's access policy.

    Every branch weighs the silent, full-slot-interfered, or post-sensing-
    interfered success probability by the stationary probability of the
    battery level and the action chosen there; a sensing secondary stays
    silent on detection and interferes only on the mis-detected remainder.
    """
    pi = stationary.pi
    alpha_range, beta_range = action_ranges(params, policy.tau)
    silent = outages.pu_no_outage_silent
    total = float(pi[: alpha_range.start].sum()) * silent
    for k, i in enumerate(alpha_range):
        a = policy.alpha[k]
        total += pi[i] * (a * outages.pu_no_outage_ws + (1.0 - a) * silent)
    p_m = 1.0 - p_d
    for k, i in enumerate(beta_range):
        b1 = policy.beta1[k]
        b2 = policy.beta2[k]
        total += pi[i] * (
            b1 * outages.pu_no_outage_ws
            + b2 * (p_d * silent + p_m * outages.pu_no_outage_md)
            + (1.0 - b1 - b2) * silent
        )
    return total


def secondary_success_rate(params: SystemParams, stationary: StationaryDistribution,
                           policy: Policy, outages: OutageBundle,
                           p_d: float, p_f: float) -> float:
    """Secondary success rate: probability a slot carries a surviving burst.

    Blind access succeeds against the busy/idle mixture of the licensed
    user; the sensing branch transmits only on an idle verdict, so its busy
    side is discounted by the mis-detection probability and its idle side by
    the no-false-alarm probability.
    """
    pi = stationary.pi
    alpha_range, beta_range = action_ranges(params, policy.tau)
    rho = params.rho
    blind_value = (rho * outages.su_no_outage_wsp
                   + (1.0 - rho) * outages.su_no_outage_ws)
    sense_value = (rho * (1.0 - p_d) * outages.su_no_outage_sp
                   + (1.0 - rho) * (1.0 - p_f) * outages.su_no_outage_s)
    total = 0.0
    for k, i in enumerate(alpha_range):
        total += pi[i] * policy.alpha[k] * blind_value
    for k, i in enumerate(beta_range):
        total += pi[i] * (policy.beta1[k] * blind_value
                          + policy.beta2[k] * sense_value)
    return total


def evaluate(params: SystemParams, policy: Policy) -> PerformanceReport:
    """Full analytical evaluation of a policy: chain, rates, access stats."""
    policy.validate_against(params)
    quantities = derive(params, policy.tau, require_sensing_capacity=False)
    cfg = sensing.SensingConfig.from_params(params, policy.tau, policy.threshold)
    _, beta_range = action_ranges(params, policy.tau)
    if cfg.m >= 2 or (len(beta_range) and np.any(policy.beta2 > 0)):
        # the second arm lets the averaged detector raise its own
        # unsupported-configuration error for a sensing policy at m = 1
        p_d = sensing.detection_avg(cfg, quantities.gamma_bar)
    else:
        p_d = 1.0  # no branch weights it
    p_f = sensing.false_alarm(cfg)
    idle_harvest = harvesting.nature_distribution(params)
    active_harvest = harvesting.combined_distribution(params, include_rf=True)
    tm = build_transition_matrix(params, policy, idle_harvest, active_harvest,
                                 p_d, p_f)
    stationary = stationary_distribution(tm)
    outages = bundle(params, policy.tau)
    mu_p = primary_success_rate(params, stationary, policy, outages, p_d)
    mu_s = secondary_success_rate(params, stationary, policy, outages, p_d, p_f)
    p_sense, p_access, expected_tau = access_stats(params, stationary, policy)
    return PerformanceReport(
        mu_p=mu_p,
        mu_s=mu_s,
        p_sense=p_sense,
        p_access=p_access,
        expected_sensing_time=expected_tau,
        stationary=stationary,
        feasible=mu_p >= params.mu_th - FEASIBILITY_TOL,
    )
