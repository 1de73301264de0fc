"""Energy-queue Markov chain: transition kernel, stationary law, access stats.

The battery holds an integer number of energy packets, capped at ``N_max``.
Each slot the node acts according to its level: below the transmission cost
it must idle; between the transmission cost and the sense-and-transmit cost
it may transmit blindly with probability ``alpha``; above that it may
transmit blindly (``beta1``), sense and transmit only on an idle verdict
(``beta2``), or idle.  A transition consumes the acted-upon packets, adds the
slot's arrivals (ambient only when the licensed user is silent, ambient plus
RF when it is active), and caps at the battery size; the top column therefore
uses tail probabilities in place of point masses.

The kernel is affine in the policy: every row is the idle row plus the
policy-weighted blind/sense increments.  ``TransitionComponents`` exposes
that decomposition directly, which is what turns the stationary-point
optimization into a linear program elsewhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .harvesting import HarvestPmf
from .system_model import SystemParams, derive

#: entries below this are treated as structural zeros when classifying states
_EDGE_TOL = 1e-14

#: maximum acceptable infinity-norm residual of the stationary solve
STATIONARY_RTOL = 1e-9


class AmbiguousChainError(RuntimeError):
    """The chain has several closed classes, so no unique stationary law."""

    def __init__(self, classes: list[list[int]]):
        self.classes = classes
        names = "; ".join("{" + ", ".join(map(str, c)) + "}" for c in classes)
        super().__init__(
            f"chain is reducible with {len(classes)} closed classes: {names}"
        )


def action_ranges(params: SystemParams, tau: float) -> tuple[range, range]:
    """Battery levels governed by the blind-only and the full action rules.

    The first range may only choose between idling and blind access; the
    second adds sensing.  When the battery cannot fund sense-and-transmit the
    second range is empty and the first extends to the capacity.
    """
    q = derive(params, tau, require_sensing_capacity=False)
    split = min(q.n_t + q.n_s, params.N_max + 1)
    return range(q.n_t, split), range(split, params.N_max + 1)


@dataclass(frozen=True)
class Policy:
    """Access/sensing probabilities per battery level, plus sensing settings.

    ``alpha`` is indexed over the blind-only range, ``beta1``/``beta2`` over
    the full-action range (see :func:`action_ranges`).  ``threshold`` is the
    energy-detector threshold used whenever ``beta2`` fires.
    """

    alpha: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    tau: float
    threshold: float

    def __post_init__(self):
        for name in ("alpha", "beta1", "beta2"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, arr)
        if self.beta1.shape != self.beta2.shape:
            raise ValueError("beta1 and beta2 must have matching lengths")
        for name in ("alpha", "beta1", "beta2"):
            arr = getattr(self, name)
            if arr.size and (np.any(arr < 0) or np.any(arr > 1)):
                raise ValueError(f"{name} entries must lie in [0, 1]")
        if self.beta1.size and np.any(self.beta1 + self.beta2 > 1.0 + 1e-12):
            raise ValueError("beta1 + beta2 must not exceed 1 at any level")

    def validate_against(self, params: SystemParams) -> None:
        """Check the vector lengths against the level ranges of ``params``."""
        alpha_range, beta_range = action_ranges(params, self.tau)
        if self.alpha.size != len(alpha_range):
            raise ValueError(
                f"alpha must cover levels {alpha_range.start}.."
                f"{alpha_range.stop - 1} ({len(alpha_range)} entries), "
                f"got {self.alpha.size}"
            )
        if self.beta1.size != len(beta_range):
            raise ValueError(
                f"beta1/beta2 must cover levels {beta_range.start}.."
                f"{beta_range.stop - 1} ({len(beta_range)} entries), "
                f"got {self.beta1.size}"
            )

    @classmethod
    def idle(cls, params: SystemParams, tau: float, threshold: float) -> "Policy":
        """The never-act policy of the right shape for ``params``."""
        alpha_range, beta_range = action_ranges(params, tau)
        return cls(
            alpha=np.zeros(len(alpha_range)),
            beta1=np.zeros(len(beta_range)),
            beta2=np.zeros(len(beta_range)),
            tau=tau,
            threshold=threshold,
        )

    @classmethod
    def constant(cls, params: SystemParams, tau: float, threshold: float,
                 alpha: float, beta1: float, beta2: float) -> "Policy":
        """Level-independent probabilities, shaped for ``params``."""
        alpha_range, beta_range = action_ranges(params, tau)
        return cls(
            alpha=np.full(len(alpha_range), float(alpha)),
            beta1=np.full(len(beta_range), float(beta1)),
            beta2=np.full(len(beta_range), float(beta2)),
            tau=tau,
            threshold=threshold,
        )


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic kernel over battery levels 0..N_max."""

    matrix: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.matrix, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"kernel must be square, got shape {p.shape}")
        if np.any(p < -1e-12):
            raise ValueError("kernel entries must be nonnegative")
        row_sums = p.sum(axis=1)
        if np.max(np.abs(row_sums - 1.0)) > 1e-9:
            raise ValueError(
                f"rows must sum to 1, worst deviation "
                f"{np.max(np.abs(row_sums - 1.0)):.3e}"
            )
        object.__setattr__(self, "matrix", p)

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class StationaryDistribution:
    """Probability vector over battery levels with pi @ P == pi."""

    pi: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        object.__setattr__(self, "pi", pi)


@dataclass(frozen=True)
class TransitionComponents:
    """Affine decomposition of the kernel in the policy probabilities.

    ``row(i) = idle[i] + alpha_i * blind_delta[i]`` on the blind-only range,
    ``row(i) = idle[i] + beta1_i * blind_delta[i] + beta2_i * sense_delta[i]``
    on the full range, and ``idle[i]`` below the transmission cost.
    """

    idle: np.ndarray
    blind_delta: np.ndarray
    sense_delta: np.ndarray
    alpha_range: range
    beta_range: range

    @property
    def n_states(self) -> int:
        return self.idle.shape[0]


def _shifted_rows(dist: HarvestPmf, consumption: int, n_states: int) -> np.ndarray:
    """Kernel block for 'consume ``consumption`` packets, then harvest'.

    Entry (i, j) is the probability of arriving ``j - i + consumption``
    packets, with the last column holding the tail at the battery cap.
    Negative requirements contribute zero.  Row i is meaningful only where
    the consumption is affordable (i >= consumption).
    """
    masses = dist.masses
    block = np.zeros((n_states, n_states))
    for i in range(n_states):
        need = np.arange(n_states - 1) - i + consumption
        valid = (need >= 0) & (need < masses.size)
        block[i, :-1][valid] = masses[need[valid]]
        block[i, -1] = dist.tail_at_least(n_states - 1 - i + consumption)
    return block


@dataclass(frozen=True)
class HarvestBlocks:
    """Consume-then-harvest blocks at each consumption level, per channel state.

    Everything here depends only on (params, tau, harvest laws), not on the
    detector settings; callers scanning a detection-threshold grid can build
    these once per sensing time.
    """

    idle_hold: np.ndarray       # licensed user silent, no consumption
    idle_tx: np.ndarray         # silent, transmitted
    idle_sense: np.ndarray      # silent, sensed only
    idle_sense_tx: np.ndarray   # silent, sensed then transmitted
    active_hold: np.ndarray
    active_tx: np.ndarray
    active_sense: np.ndarray
    active_sense_tx: np.ndarray


def harvest_blocks(params: SystemParams, tau: float, idle_harvest: HarvestPmf,
                   active_harvest: HarvestPmf) -> HarvestBlocks:
    """Precompute the detector-independent kernel blocks at one sensing time."""
    q = derive(params, tau, require_sensing_capacity=False)
    n = params.n_states
    return HarvestBlocks(
        idle_hold=_shifted_rows(idle_harvest, 0, n),
        idle_tx=_shifted_rows(idle_harvest, q.n_t, n),
        idle_sense=_shifted_rows(idle_harvest, q.n_s, n),
        idle_sense_tx=_shifted_rows(idle_harvest, q.n_s + q.n_t, n),
        active_hold=_shifted_rows(active_harvest, 0, n),
        active_tx=_shifted_rows(active_harvest, q.n_t, n),
        active_sense=_shifted_rows(active_harvest, q.n_s, n),
        active_sense_tx=_shifted_rows(active_harvest, q.n_s + q.n_t, n),
    )


def transition_components(params: SystemParams, tau: float,
                          idle_harvest: HarvestPmf, active_harvest: HarvestPmf,
                          p_d: float, p_f: float,
                          blocks: HarvestBlocks | None = None) -> TransitionComponents:
    """Build the policy-affine pieces of the kernel.

    ``idle_harvest`` is the arrival law while the licensed user is silent,
    ``active_harvest`` while it transmits (RF harvesting included there);
    ``p_d``/``p_f`` are the averaged detection and false-alarm probabilities
    of the sensing configuration in force.  ``blocks``, when given, must be
    :func:`harvest_blocks` of the same parameters and sensing time.
    """
    if blocks is None:
        blocks = harvest_blocks(params, tau, idle_harvest, active_harvest)
    rho = params.rho
    rho_bar = 1.0 - rho
    idle = rho_bar * blocks.idle_hold + rho * blocks.active_hold
    blind = rho_bar * blocks.idle_tx + rho * blocks.active_tx
    # sensing consumes n_s always, plus n_t whenever the verdict is "idle":
    # false alarms block transmission off an idle channel, mis-detections
    # allow it on a busy one
    sense = (
        rho_bar * (p_f * blocks.idle_sense
                   + (1.0 - p_f) * blocks.idle_sense_tx)
        + rho * (p_d * blocks.active_sense
                 + (1.0 - p_d) * blocks.active_sense_tx)
    )
    alpha_range, beta_range = action_ranges(params, tau)
    return TransitionComponents(
        idle=idle,
        blind_delta=blind - idle,
        sense_delta=sense - idle,
        alpha_range=alpha_range,
        beta_range=beta_range,
    )


def compose_transition(components: TransitionComponents, alpha: np.ndarray,
                       beta1: np.ndarray, beta2: np.ndarray) -> np.ndarray:
    """Assemble the kernel for given probability vectors (no wrapping checks)."""
    p = components.idle.copy()
    for k, i in enumerate(components.alpha_range):
        p[i] += alpha[k] * components.blind_delta[i]
    for k, i in enumerate(components.beta_range):
        p[i] += (beta1[k] * components.blind_delta[i]
                 + beta2[k] * components.sense_delta[i])
    return p


def build_transition_matrix(params: SystemParams, policy: Policy,
                            idle_harvest: HarvestPmf, active_harvest: HarvestPmf,
                            p_d: float, p_f: float) -> TransitionMatrix:
    """Kernel of the battery chain under ``policy``."""
    policy.validate_against(params)
    components = transition_components(
        params, policy.tau, idle_harvest, active_harvest, p_d, p_f)
    kernel = compose_transition(components, policy.alpha, policy.beta1, policy.beta2)
    return TransitionMatrix(kernel)


def _closed_classes(p: np.ndarray) -> list[list[int]]:
    """Strongly connected components with no outgoing edge."""
    adjacency = csr_matrix(p > _EDGE_TOL)
    n_comp, labels = connected_components(adjacency, connection="strong")
    closed = []
    for label in range(n_comp):
        states = np.nonzero(labels == label)[0]
        outside = np.ones(p.shape[0], dtype=bool)
        outside[states] = False
        if p[np.ix_(states, np.nonzero(outside)[0])].max(initial=0.0) <= _EDGE_TOL:
            closed.append([int(s) for s in states])
    return closed


def stationary_distribution(tm: TransitionMatrix) -> StationaryDistribution:
    """Solve pi @ P = pi with unit total mass.

    The balance equations are solved jointly with the normalization row by
    least squares, which absorbs the one redundant balance row.  A chain with
    more than one closed class has no unique solution and raises
    :class:`AmbiguousChainError` naming the classes.
    """
    p = tm.matrix
    n = p.shape[0]
    closed = _closed_classes(p)
    if len(closed) > 1:
        raise AmbiguousChainError(closed)
    system = np.vstack([p.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = np.max(np.abs(pi @ p - pi))
    if not residual <= STATIONARY_RTOL:  # negated so NaN cannot slip through
        raise RuntimeError(
            f"stationary solve residual {residual:.3e} exceeds {STATIONARY_RTOL}"
        )
    return StationaryDistribution(pi)


def access_stats(params: SystemParams, stationary: StationaryDistribution,
                 policy: Policy) -> tuple[float, float, float]:
    """(sensing probability, blind-access probability, expected sensing time).

    Sensing probability weighs ``beta2`` by the stationary mass of its range;
    blind access collects ``alpha`` and ``beta1`` likewise; the expected
    per-slot sensing time is the sensing probability times ``tau``.
    """
    policy.validate_against(params)
    pi = stationary.pi
    alpha_range, beta_range = action_ranges(params, policy.tau)
    alpha_mass = pi[alpha_range.start:alpha_range.stop]
    beta_mass = pi[beta_range.start:beta_range.stop]
    p_sense = float(beta_mass @ policy.beta2) if len(beta_range) else 0.0
    p_access = float(alpha_mass @ policy.alpha) if len(alpha_range) else 0.0
    if len(beta_range):
        p_access += float(beta_mass @ policy.beta1)
    return p_sense, p_access, p_sense * policy.tau
