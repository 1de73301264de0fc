"""Grid search with an inner linear program for the best access policy.

For a fixed sensing time and detection threshold the stationary balance
equations become linear once the per-level action probabilities are replaced
by their products with the stationary masses.  The secondary success rate and
the licensed-user floor are linear in the same products, so each grid point
reduces to a small dense LP; an exhaustive search over the admissible sensing
times and a threshold grid then picks the best feasible point.  The search is
deterministic: ties are broken toward the smaller sensing time, then the
smaller threshold, regardless of evaluation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainccinv

from . import harvesting, sensing
from .chain import Policy, TransitionComponents, harvest_blocks, transition_components
from .harvesting import HarvestPmf
from .numerics import LinearProgram, solve_lp
from .outage import OutageBundle, bundle
from .performance import PerformanceReport, evaluate
from .system_model import ConfigurationError, SystemParams, derive, snap_to_int

SCHEMES = ("probabilistic", "sensing_only")

#: stationary mass below which a level counts as unreachable during recovery
RECOVERY_MASS_FLOOR = 1e-12

#: false-alarm extremes the default threshold grid spans at each m
_PFA_SPAN = (0.999, 0.001)
_DEFAULT_LAMBDA_COUNT = 40


@dataclass(frozen=True)
class GridSpec:
    """Search grid: sensing times in multiples of tau_min, threshold rule.

    Thresholds are either the explicit ``lambda_values`` or, by default,
    ``lambda_count`` log-spaced points covering false-alarm probabilities
    from 0.999 down to 0.001 at each time-bandwidth product.
    """

    tau_min: float
    lambda_values: tuple[float, ...] | None = None
    lambda_count: int = _DEFAULT_LAMBDA_COUNT

    def __post_init__(self):
        if self.tau_min <= 0:
            raise ValueError(f"tau_min must be positive, got {self.tau_min}")
        if self.lambda_values is not None:
            values = tuple(float(v) for v in self.lambda_values)
            if not values or any(v <= 0 for v in values):
                raise ValueError("explicit lambda_values must be positive")
            object.__setattr__(self, "lambda_values", values)
        elif self.lambda_count < 1:
            raise ValueError(f"lambda_count must be >= 1, got {self.lambda_count}")

    def tau_values(self, params: SystemParams) -> tuple[float, ...]:
        """Multiples of tau_min up to T - tau_min, each with integral tau*W."""
        if self.tau_min >= params.T:
            raise ValueError(
                f"tau_min {self.tau_min} leaves no admissible sensing time "
                f"in a slot of {params.T}"
            )
        values = []
        k = 1
        while True:
            tau = k * self.tau_min
            if tau > params.T - self.tau_min + 1e-15 * params.T:
                break
            if snap_to_int(tau * params.W) is None:
                raise ValueError(
                    f"grid sensing time {tau} gives non-integral tau*W = "
                    f"{tau * params.W!r}"
                )
            values.append(tau)
            k += 1
        if not values:
            raise ValueError("empty sensing-time grid")
        return tuple(values)

    def lambda_grid(self, m: int) -> tuple[float, ...]:
        """Thresholds searched at time-bandwidth product ``m``."""
        if self.lambda_values is not None:
            return self.lambda_values
        hi_pf, lo_pf = _PFA_SPAN
        lo = 2.0 * float(gammainccinv(m, hi_pf))
        hi = 2.0 * float(gammainccinv(m, lo_pf))
        return tuple(np.geomspace(lo, hi, self.lambda_count))


@dataclass(frozen=True)
class SubstitutedVariables:
    """LP solution in the product variables, alongside its stationary vector."""

    pi: np.ndarray
    alpha_tilde: np.ndarray
    beta1_tilde: np.ndarray
    beta2_tilde: np.ndarray


@dataclass(frozen=True)
class OptimalSolution:
    """Best feasible policy found, with its analytical evaluation."""

    policy: Policy
    report: PerformanceReport
    substituted: SubstitutedVariables
    scheme: str
    lp_objective: float
    lp_mu_p: float

    @property
    def tau(self) -> float:
        return self.policy.tau

    @property
    def threshold(self) -> float:
        return self.policy.threshold


@dataclass(frozen=True)
class GridPointStatus:
    """Outcome of one (tau, lambda) grid point."""

    tau: float
    threshold: float
    status: str  # "optimal" | "infeasible" | "unsupported_m" | "sensing_unreachable"
    objective: float | None = None


class InfeasibleGridError(RuntimeError):
    """No grid point admitted a policy satisfying the licensed-user floor."""

    def __init__(self, records: tuple[GridPointStatus, ...]):
        self.records = records
        counts: dict[str, int] = {}
        for rec in records:
            counts[rec.status] = counts.get(rec.status, 0) + 1
        summary = ", ".join(f"{k}: {v}" for k, v in sorted(counts.items()))
        super().__init__(f"no feasible grid point ({summary})")


def _rate_coefficients(params: SystemParams, outages: OutageBundle,
                       p_d: float, p_f: float) -> tuple[float, float, float, float]:
    """Per-action values entering the two rate formulas."""
    rho = params.rho
    blind_su = (rho * outages.su_no_outage_wsp
                + (1.0 - rho) * outages.su_no_outage_ws)
    sense_su = (rho * (1.0 - p_d) * outages.su_no_outage_sp
                + (1.0 - rho) * (1.0 - p_f) * outages.su_no_outage_s)
    blind_pu = outages.pu_no_outage_ws
    sense_pu = p_d * outages.pu_no_outage_silent + (1.0 - p_d) * outages.pu_no_outage_md
    return blind_su, sense_su, blind_pu, sense_pu


def _build_lp(params: SystemParams, components: TransitionComponents,
              outages: OutageBundle, p_d: float, p_f: float,
              scheme: str) -> LinearProgram:
    """Assemble the policy LP at one grid point.

    Variables are the stationary masses followed by the product variables of
    the blind-only range and the two product vectors of the full range.
    Balance rows use the affine kernel decomposition; the licensed-user floor
    enters as one inequality.  The sensing-only scheme pins the blind product
    variables to zero through their bounds.
    """
    n = components.n_states
    a_idx = list(components.alpha_range)
    b_idx = list(components.beta_range)
    ka, kb = len(a_idx), len(b_idx)
    nvars = n + ka + 2 * kb

    blind_a = components.blind_delta[a_idx, :].T if ka else np.zeros((n, 0))
    blind_b = components.blind_delta[b_idx, :].T if kb else np.zeros((n, 0))
    sense_b = components.sense_delta[b_idx, :].T if kb else np.zeros((n, 0))
    balance = np.hstack([components.idle.T - np.eye(n), blind_a, blind_b, sense_b])
    normalization = np.concatenate([np.ones(n), np.zeros(ka + 2 * kb)])
    eq_matrix = np.vstack([balance, normalization])
    eq_rhs = np.concatenate([np.zeros(n), [1.0]])

    blind_su, sense_su, blind_pu, sense_pu = _rate_coefficients(
        params, outages, p_d, p_f)
    silent = outages.pu_no_outage_silent

    objective = np.zeros(nvars)
    objective[n:n + ka] = blind_su
    objective[n + ka:n + ka + kb] = blind_su
    objective[n + ka + kb:] = sense_su

    qos_row = np.zeros(nvars)
    qos_row[:n] = silent
    qos_row[n:n + ka] = blind_pu - silent
    qos_row[n + ka:n + ka + kb] = blind_pu - silent
    qos_row[n + ka + kb:] = sense_pu - silent

    ub_rows = [-qos_row]
    ub_rhs = [-params.mu_th]
    for k, i in enumerate(a_idx):
        row = np.zeros(nvars)
        row[i] = -1.0
        row[n + k] = 1.0
        ub_rows.append(row)
        ub_rhs.append(0.0)
    for k, i in enumerate(b_idx):
        row = np.zeros(nvars)
        row[i] = -1.0
        row[n + ka + k] = 1.0
        row[n + ka + kb + k] = 1.0
        ub_rows.append(row)
        ub_rhs.append(0.0)

    unit = (0.0, 1.0)
    pinned = (0.0, 0.0)
    blind_bound = pinned if scheme == "sensing_only" else unit
    bounds = ([unit] * n + [blind_bound] * ka + [blind_bound] * kb + [unit] * kb)

    return LinearProgram(
        objective=objective,
        eq_matrix=eq_matrix,
        eq_rhs=eq_rhs,
        ub_matrix=np.array(ub_rows),
        ub_rhs=np.array(ub_rhs),
        bounds=tuple(bounds),
    )


def _recover(masses: np.ndarray, products: np.ndarray, idx: list[int]) -> np.ndarray:
    """Divide product variables by stationary mass, zeroing unreachable levels."""
    out = np.zeros(len(idx))
    for k, i in enumerate(idx):
        if masses[i] > RECOVERY_MASS_FLOOR:
            out[k] = min(max(products[k] / masses[i], 0.0), 1.0)
    return out


@dataclass(frozen=True)
class _PointSolution:
    """LP-level result at one grid point, before the analytical round trip."""

    policy: Policy
    substituted: SubstitutedVariables
    scheme: str
    lp_objective: float
    lp_mu_p: float


def _solve_point(params: SystemParams, tau: float, threshold: float, scheme: str,
                 idle_harvest: HarvestPmf, active_harvest: HarvestPmf,
                 blocks=None) -> _PointSolution | None:
    """Solve the LP at one grid point and recover the policy (no evaluation)."""
    quantities = derive(params, tau, require_sensing_capacity=False)
    if quantities.m < 2:
        raise ConfigurationError(
            f"time-bandwidth product m={quantities.m} is below the minimum "
            f"of 2 required by the averaged detector"
        )
    sensing_reachable = quantities.n_t + quantities.n_s <= params.N_max
    if scheme == "sensing_only" and not sensing_reachable:
        raise ConfigurationError(
            f"sensing-only scheme impossible: n_t + n_s = "
            f"{quantities.n_t + quantities.n_s} exceeds N_max = {params.N_max}"
        )
    cfg = sensing.SensingConfig.from_params(params, tau, threshold)
    p_d = sensing.detection_avg(cfg, quantities.gamma_bar)
    p_f = sensing.false_alarm(cfg)
    components = transition_components(
        params, tau, idle_harvest, active_harvest, p_d, p_f, blocks=blocks)
    outages = bundle(params, tau)
    lp = _build_lp(params, components, outages, p_d, p_f, scheme)
    solution = solve_lp(lp)
    if solution.status != "optimal":
        return None

    n = components.n_states
    a_idx = list(components.alpha_range)
    b_idx = list(components.beta_range)
    ka, kb = len(a_idx), len(b_idx)
    x = solution.x
    substituted = SubstitutedVariables(
        pi=x[:n].copy(),
        alpha_tilde=x[n:n + ka].copy(),
        beta1_tilde=x[n + ka:n + ka + kb].copy(),
        beta2_tilde=x[n + ka + kb:].copy(),
    )
    policy = Policy(
        alpha=_recover(substituted.pi, substituted.alpha_tilde, a_idx),
        beta1=_recover(substituted.pi, substituted.beta1_tilde, b_idx),
        beta2=_recover(substituted.pi, substituted.beta2_tilde, b_idx),
        tau=tau,
        threshold=threshold,
    )
    _, _, blind_pu, sense_pu = _rate_coefficients(params, outages, p_d, p_f)
    silent = outages.pu_no_outage_silent
    lp_mu_p = (
        silent * float(substituted.pi.sum())
        + (blind_pu - silent) * float(substituted.alpha_tilde.sum()
                                      + substituted.beta1_tilde.sum())
        + (sense_pu - silent) * float(substituted.beta2_tilde.sum())
    )
    return _PointSolution(
        policy=policy,
        substituted=substituted,
        scheme=scheme,
        lp_objective=float(solution.objective_value),
        lp_mu_p=lp_mu_p,
    )


def _finalize(params: SystemParams, point: _PointSolution) -> OptimalSolution:
    """Attach the chain-and-rates evaluation of the recovered policy."""
    return OptimalSolution(
        policy=point.policy,
        report=evaluate(params, point.policy),
        substituted=point.substituted,
        scheme=point.scheme,
        lp_objective=point.lp_objective,
        lp_mu_p=point.lp_mu_p,
    )


def solve_fixed(params: SystemParams, tau: float, threshold: float, scheme: str
                ) -> OptimalSolution | None:
    """Best policy at one (tau, threshold) point, or None when infeasible.

    Raises :class:`ConfigurationError` when the point cannot host the scheme:
    a time-bandwidth product of 1 (averaged detection undefined) or, for the
    sensing-only scheme, a battery too small to ever fund sensing.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    idle_harvest = harvesting.nature_distribution(params)
    active_harvest = harvesting.combined_distribution(params, include_rf=True)
    point = _solve_point(params, tau, threshold, scheme,
                         idle_harvest, active_harvest)
    if point is None:
        return None
    return _finalize(params, point)


def _select_winner(
    candidates: list[tuple[float, float, float, _PointSolution]],
) -> _PointSolution | None:
    """Deterministic reduction: max objective, ties to smaller tau then lambda."""
    best = None
    best_key = None
    for objective, tau, threshold, solution in candidates:
        key = (objective, -tau, -threshold)
        if best_key is None or key > best_key:
            best = solution
            best_key = key
    return best


def optimize(params: SystemParams, grid: GridSpec, scheme: str
             ) -> tuple[OptimalSolution, tuple[GridPointStatus, ...]]:
    """Exhaustive search over the grid; returns the winner and per-point log.

    Raises :class:`InfeasibleGridError` carrying the per-point statuses when
    no point is feasible.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    idle_harvest = harvesting.nature_distribution(params)
    active_harvest = harvesting.combined_distribution(params, include_rf=True)
    records: list[GridPointStatus] = []
    candidates: list[tuple[float, float, float, _PointSolution]] = []
    for tau in grid.tau_values(params):
        quantities = derive(params, tau, require_sensing_capacity=False)
        if quantities.m < 2:
            records.append(GridPointStatus(tau, math.nan, "unsupported_m"))
            continue
        blocks = harvest_blocks(params, tau, idle_harvest, active_harvest)
        for threshold in grid.lambda_grid(quantities.m):
            try:
                point = _solve_point(params, tau, threshold, scheme,
                                     idle_harvest, active_harvest, blocks=blocks)
            except ConfigurationError:
                records.append(
                    GridPointStatus(tau, threshold, "sensing_unreachable"))
                continue
            if point is None:
                records.append(GridPointStatus(tau, threshold, "infeasible"))
                continue
            records.append(
                GridPointStatus(tau, threshold, "optimal", point.lp_objective))
            candidates.append((point.lp_objective, tau, threshold, point))
    winner = _select_winner(candidates)
    if winner is None:
        raise InfeasibleGridError(tuple(records))
    return _finalize(params, winner), tuple(records)
