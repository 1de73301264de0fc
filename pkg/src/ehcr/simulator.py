"""Slot-level Monte Carlo simulation of the full access system.

The simulator shares nothing with the analytical chain beyond the primitive
sensing statistics: batteries, actions, sensing verdicts, fading draws and
SINR comparisons are all realized event by event, which makes it the ground
truth the closed forms are validated against.

Two correlation modes are provided.  ``faithful`` uses one licensed-link gain
per slot for both the sensing SNR and the RF harvest, which is physically
consistent; ``decorrelated`` draws them independently, matching the
independence assumptions of the analytical model exactly, and is the default
for cross-validation.

Randomness comes from one seed expanded into named substreams (one per slot
quantity), so instrumenting one quantity never shifts the draws of another.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sensing
from .chain import Policy, action_ranges
from .performance import PerformanceReport, evaluate
from .system_model import SystemParams, derive

#: substream names, in spawn order; append only, never reorder
_STREAMS = ("pu", "h_p", "h_pst", "h_ps", "h_s", "h_sp",
            "action", "sensing", "nature", "rf")

CORRELATION_MODES = ("faithful", "decorrelated")

#: batches used for autocorrelation-robust standard errors
_N_BATCHES = 100

#: default minimum sample count before disagreement may be flagged
DEFAULT_MIN_SAMPLES = 1000


@dataclass(frozen=True)
class SimConfig:
    """Simulation run settings.

    ``detection_bias`` is a fault-injection hook for validation tests: it
    scales the simulator's detection probability away from the analytical
    value, which a sound comparison must flag.  Leave at 1.0 otherwise.
    """

    slots: int
    seed: int
    initial_battery: int = 0
    correlation_mode: str = "decorrelated"
    detection_bias: float = 1.0

    def __post_init__(self):
        if self.slots < 1:
            raise ValueError(f"slots must be >= 1, got {self.slots}")
        if self.initial_battery < 0:
            raise ValueError(
                f"initial_battery must be >= 0, got {self.initial_battery}")
        if self.correlation_mode not in CORRELATION_MODES:
            raise ValueError(
                f"correlation_mode must be one of {CORRELATION_MODES}, "
                f"got {self.correlation_mode!r}")


@dataclass(frozen=True)
class SimReport:
    """Empirical rates with standard errors, plus occupancy and counters."""

    slots: int
    mu_p: float
    mu_p_se: float
    mu_s: float
    mu_s_se: float
    p_sense: float
    p_sense_se: float
    p_access: float
    p_access_se: float
    occupancy: np.ndarray      # fraction of slots at each start-of-slot level
    occupancy_se: np.ndarray
    battery_histogram: np.ndarray  # counts; sums to slots
    action_counts: dict[str, int] = field(default_factory=dict)
    pu_active_slots: int = 0
    su_tx_slots: int = 0


def _batch_se(series: np.ndarray) -> float:
    """Standard error of the mean via batch means, floored by a smoothed
    binomial estimate so that short or degenerate series never report zero."""
    n = series.size
    if n == 0:
        return math.inf
    smoothed = (series.sum() + 1.0) / (n + 2.0)
    floor = math.sqrt(smoothed * (1.0 - smoothed) / n)
    if n >= 2 * _N_BATCHES:
        batches = np.array_split(series, _N_BATCHES)
        means = np.array([b.mean() for b in batches])
        return max(float(means.std(ddof=1) / math.sqrt(len(means))), floor)
    return max(floor, 1e-300)


def run(params: SystemParams, policy: Policy, sim: SimConfig) -> SimReport:
    """Simulate ``sim.slots`` slots and tally empirical statistics.

    Deterministic for a fixed seed.  The battery starts at
    ``sim.initial_battery``, is never driven negative (actions respect the
    level rules) and is capped at the battery size after each slot's
    harvest.
    """
    policy.validate_against(params)
    if sim.initial_battery > params.N_max:
        raise ValueError(
            f"initial battery {sim.initial_battery} exceeds N_max={params.N_max}")
    quantities = derive(params, policy.tau, require_sensing_capacity=False)
    alpha_range, beta_range = action_ranges(params, policy.tau)
    cfg = sensing.SensingConfig.from_params(params, policy.tau, policy.threshold)
    p_f = sensing.false_alarm(cfg)
    uses_sensing = len(beta_range) > 0 and np.any(policy.beta2 > 0)
    decorrelated = sim.correlation_mode == "decorrelated"
    if uses_sensing and decorrelated:
        p_d_avg = sensing.detection_avg(cfg, quantities.gamma_bar)
        p_d_avg = min(max(p_d_avg * sim.detection_bias, 0.0), 1.0)
    else:
        p_d_avg = math.nan

    n_slots = sim.slots
    streams = {
        name: np.random.default_rng(child)
        for name, child in zip(_STREAMS, np.random.SeedSequence(sim.seed).spawn(len(_STREAMS)))
    }
    pu_active = streams["pu"].random(n_slots) < params.rho
    gain_p = streams["h_p"].exponential(params.sigma_p, n_slots)
    gain_pst = streams["h_pst"].exponential(params.sigma_pst, n_slots)
    gain_ps = streams["h_ps"].exponential(params.sigma_ps, n_slots)
    gain_s = streams["h_s"].exponential(params.sigma_s, n_slots)
    gain_sp = streams["h_sp"].exponential(params.sigma_sp, n_slots)
    action_u = streams["action"].random(n_slots)
    sensing_u = streams["sensing"].random(n_slots)
    nature_q = streams["nature"].poisson(params.lambda_e * params.T, n_slots)
    rf_energy_gain = gain_pst if not decorrelated else \
        streams["rf"].exponential(params.sigma_pst, n_slots)
    rf_q = np.floor(
        params.eta * params.P_p * rf_energy_gain * params.T / params.E_u
    ).astype(np.int64)

    power_blind = params.E_t / params.T
    power_sense = params.E_t / (params.T - policy.tau)
    demand_pu = 2.0**quantities.r_p - 1.0
    demand_blind = 2.0**quantities.r_s_blind - 1.0
    demand_sense = 2.0**quantities.r_s_sense - 1.0

    n_t, n_s = quantities.n_t, quantities.n_s
    alpha_lo = alpha_range.start
    beta_lo = beta_range.start
    has_beta = len(beta_range) > 0
    alpha = policy.alpha
    beta1 = policy.beta1
    beta2 = policy.beta2

    level_series = np.empty(n_slots, dtype=np.int64)
    su_success = np.zeros(n_slots, dtype=np.int8)
    blind_series = np.zeros(n_slots, dtype=np.int8)
    sense_series = np.zeros(n_slots, dtype=np.int8)
    pu_success = np.zeros(n_slots, dtype=np.int8)

    battery = int(sim.initial_battery)
    idle_count = blind_count = sense_count = su_tx_count = 0
    for t in range(n_slots):
        level_series[t] = battery
        u = action_u[t]
        action = "idle"
        if has_beta and battery >= beta_lo:
            k = battery - beta_lo
            if u < beta1[k]:
                action = "blind"
            elif u < beta1[k] + beta2[k]:
                action = "sense"
        elif battery >= alpha_lo and battery - alpha_lo < alpha.size:
            if u < alpha[battery - alpha_lo]:
                action = "blind"

        consumed = 0
        su_tx = False
        su_power = 0.0
        su_demand = 0.0
        if action == "blind":
            blind_count += 1
            blind_series[t] = 1
            consumed = n_t
            su_tx = True
            su_power = power_blind
            su_demand = demand_blind
        elif action == "sense":
            sense_count += 1
            sense_series[t] = 1
            consumed = n_s
            if pu_active[t]:
                if decorrelated:
                    p_detect = p_d_avg
                else:
                    snr = params.P_p * gain_pst[t] / params.sigma_n2
                    p_detect = sensing.detection_instant(cfg, snr)
                    p_detect = min(max(p_detect * sim.detection_bias, 0.0), 1.0)
                declared_busy = sensing_u[t] < p_detect
            else:
                declared_busy = sensing_u[t] < p_f
            if not declared_busy:
                consumed += n_t
                su_tx = True
                su_power = power_sense
                su_demand = demand_sense
        else:
            idle_count += 1

        if su_tx:
            su_tx_count += 1
            interference = params.P_p * gain_ps[t] if pu_active[t] else 0.0
            sinr = su_power * gain_s[t] / (params.sigma_n2 + interference)
            if sinr > su_demand:
                su_success[t] = 1
        if pu_active[t]:
            interference = su_power * gain_sp[t] if su_tx else 0.0
            sinr = params.P_p * gain_p[t] / (params.sigma_n2 + interference)
            if sinr > demand_pu:
                pu_success[t] = 1

        battery = min(
            battery - consumed + int(nature_q[t]) + (int(rf_q[t]) if pu_active[t] else 0),
            params.N_max,
        )

    histogram = np.bincount(level_series, minlength=params.n_states)
    occupancy = histogram / n_slots
    occupancy_se = np.array([
        _batch_se((level_series == level).astype(np.int8))
        for level in range(params.n_states)
    ])
    active = np.nonzero(pu_active)[0]
    if active.size:
        mu_p = float(pu_success[active].mean())
        mu_p_se = _batch_se(pu_success[active])
    else:
        mu_p, mu_p_se = math.nan, math.inf
    return SimReport(
        slots=n_slots,
        mu_p=mu_p,
        mu_p_se=mu_p_se,
        mu_s=float(su_success.mean()),
        mu_s_se=_batch_se(su_success),
        p_sense=float(sense_series.mean()),
        p_sense_se=_batch_se(sense_series),
        p_access=float(blind_series.mean()),
        p_access_se=_batch_se(blind_series),
        occupancy=occupancy,
        occupancy_se=occupancy_se,
        battery_histogram=histogram,
        action_counts={"idle": idle_count, "blind": blind_count,
                       "sense": sense_count},
        pu_active_slots=int(active.size),
        su_tx_slots=su_tx_count,
    )


@dataclass(frozen=True)
class ComparisonRow:
    """One analytic-vs-empirical check."""

    metric: str
    analytic: float
    empirical: float
    stderr: float
    zscore: float
    flagged: bool


@dataclass(frozen=True)
class ComparisonReport:
    """Tabulated agreement between the analytical model and a simulation."""

    rows: tuple[ComparisonRow, ...]
    warnings: tuple[str, ...]
    analytic: PerformanceReport
    empirical: SimReport

    @property
    def flagged(self) -> bool:
        return any(row.flagged for row in self.rows)


def compare(params: SystemParams, policy: Policy, sim: SimConfig,
            min_samples: int = DEFAULT_MIN_SAMPLES) -> ComparisonReport:
    """Run the simulator and z-score every analytic quantity against it.

    A row is flagged when |z| exceeds 3.  Runs shorter than ``min_samples``
    are reported with a warning and never flagged: their confidence intervals
    are too wide to witness a disagreement.
    """
    analytic = evaluate(params, policy)
    empirical = run(params, policy, sim)
    sufficient = sim.slots >= min_samples
    warnings: list[str] = []
    if not sufficient:
        warnings.append(
            f"slots={sim.slots} below the minimum sample count "
            f"{min_samples}; disagreement flags suppressed"
        )

    rows: list[ComparisonRow] = []

    def add(metric: str, ana: float, emp: float, se: float):
        if math.isnan(emp) or math.isinf(se):
            z = 0.0
        else:
            z = (emp - ana) / se
        rows.append(ComparisonRow(
            metric=metric,
            analytic=ana,
            empirical=emp,
            stderr=se,
            zscore=z,
            flagged=sufficient and abs(z) > 3.0,
        ))

    add("mu_p", analytic.mu_p, empirical.mu_p, empirical.mu_p_se)
    add("mu_s", analytic.mu_s, empirical.mu_s, empirical.mu_s_se)
    add("p_sense", analytic.p_sense, empirical.p_sense, empirical.p_sense_se)
    add("p_access", analytic.p_access, empirical.p_access, empirical.p_access_se)
    for level in range(params.n_states):
        add(f"pi_{level}", float(analytic.stationary.pi[level]),
            float(empirical.occupancy[level]),
            float(empirical.occupancy_se[level]))
    if empirical.pu_active_slots == 0:
        warnings.append("licensed user never transmitted; mu_p not comparable")
    return ComparisonReport(
        rows=tuple(rows),
        warnings=tuple(warnings),
        analytic=analytic,
        empirical=empirical,
    )
