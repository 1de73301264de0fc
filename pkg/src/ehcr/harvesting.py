"""Energy-packet arrival distributions: ambient, RF, and their sum.

Ambient arrivals within a slot are Poisson with mean ``lambda_e * T``.  RF
arrivals occur only while the licensed transmitter is active: the harvested
energy ``eta * P_p * |h|^2 * T`` is quantized into packets of ``E_u`` Joules,
so the packet count of an exponentially faded link has the staircase law

    Pr{count = r} = exp(-r / mu) - exp(-(r + 1) / mu),
    mu = sigma_pst * eta * P_p * T / E_u.

The mixed distribution is the discrete convolution of the two.  Truncated
array forms carry their complementary CDF so that the battery-cap boundary
of the energy chain can fold all overflow mass consistently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .system_model import SystemParams

#: truncate a distribution once the remaining tail mass drops below this
TRUNCATION_TAIL = 1e-12

#: never extend the support beyond this multiple of the battery capacity
SUPPORT_CAP_FACTOR = 4

_KINDS = ("nature", "rf", "combined")


@dataclass(frozen=True)
class HarvestPmf:
    """Distribution of per-slot packet arrivals on a finite support.

    ``masses[k]`` is Pr{count = k} for k below the top bin; the top bin
    absorbs the folded tail so the masses always total one.  ``pmf`` and
    ``tail_at_least`` are complementary by construction: the chain's row
    sums stay exactly stochastic no matter where the fold landed.
    """

    masses: np.ndarray

    def __post_init__(self):
        masses = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if masses.ndim != 1 or masses.size == 0:
            raise ValueError("masses must be a nonempty 1-D array")
        if np.any(masses < 0):
            raise ValueError("masses must be nonnegative")
        if abs(masses.sum() - 1.0) > 1e-9:
            raise ValueError(f"masses must sum to 1, got {masses.sum()!r}")
        object.__setattr__(self, "masses", masses)

    @cached_property
    def _ccdf(self) -> np.ndarray:
        # _ccdf[n] = Pr{count >= n} for n in 0..len(masses); complementary to
        # the partial sums of masses, clipped against float round-off
        tail = 1.0 - np.concatenate(([0.0], np.cumsum(self.masses)))
        return np.clip(tail, 0.0, 1.0)

    @property
    def support_size(self) -> int:
        return int(self.masses.size)

    def pmf(self, count: int) -> float:
        """Mass at ``count``; zero outside the support (negatives included)."""
        if 0 <= count < self.masses.size:
            return float(self.masses[count])
        return 0.0

    def tail_at_least(self, count: int) -> float:
        """Pr{arrivals >= count}; equals 1 at count <= 0."""
        if count <= 0:
            return 1.0
        if count >= self._ccdf.size:
            return 0.0
        return float(self._ccdf[count])

    def mean(self) -> float:
        """Mean of the truncated distribution."""
        return float(np.arange(self.masses.size) @ self.masses)


# ---------------------------------------------------------------------------
# scalar laws (exact, no truncation)
# ---------------------------------------------------------------------------

def nature_pmf(lambda_e: float, T: float, n: int) -> float:
    """Poisson(lambda_e * T) mass at n; zero for negative counts."""
    if lambda_e < 0:
        raise ValueError(f"lambda_e must be nonnegative, got {lambda_e}")
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    if n < 0:
        return 0.0
    mean = lambda_e * T
    if mean == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mean) - math.lgamma(n + 1) - mean)


def _rf_packet_scale(params: SystemParams) -> float:
    """Mean of the exponential energy variable, in packets."""
    return params.sigma_pst * params.eta * params.P_p * params.T / params.E_u


def rf_pmf(params: SystemParams, r: int) -> float:
    """Mass of the quantized RF harvest at r packets."""
    if r < 0:
        return 0.0
    scale = _rf_packet_scale(params)
    if scale == 0.0:
        return 1.0 if r == 0 else 0.0
    return math.exp(-r / scale) - math.exp(-(r + 1) / scale)


def _rf_tail(params: SystemParams, r: int) -> float:
    if r <= 0:
        return 1.0
    scale = _rf_packet_scale(params)
    if scale == 0.0:
        return 0.0
    return math.exp(-r / scale)


def combined_pmf(params: SystemParams, include_rf: bool, q: int) -> float:
    """Mass of the summed arrivals at q packets.

    With ``include_rf`` false this is the ambient law alone; otherwise the
    finite convolution sum over all splits of q.
    """
    if q < 0:
        return 0.0
    if not include_rf:
        return nature_pmf(params.lambda_e, params.T, q)
    return sum(
        nature_pmf(params.lambda_e, params.T, n) * rf_pmf(params, q - n)
        for n in range(q + 1)
    )


def tail_at_least(kind: str, params: SystemParams, n: int) -> float:
    """Complementary CDF Pr{arrivals >= n} of one of the three laws."""
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}, got {kind!r}")
    if n < 0:
        raise ValueError(f"count must be nonnegative, got {n}")
    if n == 0:
        return 1.0
    if kind == "rf":
        return _rf_tail(params, n)
    if kind == "nature":
        below = sum(nature_pmf(params.lambda_e, params.T, k) for k in range(n))
    else:
        below = sum(combined_pmf(params, True, k) for k in range(n))
    return max(0.0, 1.0 - below)


# ---------------------------------------------------------------------------
# truncated array forms
# ---------------------------------------------------------------------------

def _truncate_and_fold(masses: np.ndarray, cap: int) -> np.ndarray:
    """Cut the support at the truncation rule and fold the remainder on top."""
    total = np.cumsum(masses)
    enough = np.nonzero(1.0 - total < TRUNCATION_TAIL)[0]
    k_trunc = int(enough[0]) if enough.size else masses.size - 1
    k_trunc = min(k_trunc, cap)
    out = np.array(masses[: k_trunc + 1], dtype=float)
    out[-1] += max(0.0, 1.0 - out.sum())
    return out


def nature_distribution(params: SystemParams) -> HarvestPmf:
    """Truncated ambient arrival distribution."""
    cap = SUPPORT_CAP_FACTOR * params.N_max
    masses = [nature_pmf(params.lambda_e, params.T, k) for k in range(cap + 1)]
    return HarvestPmf(_truncate_and_fold(np.array(masses), cap))


def rf_distribution(params: SystemParams) -> HarvestPmf:
    """Truncated RF arrival distribution (active-slot law)."""
    cap = SUPPORT_CAP_FACTOR * params.N_max
    masses = [rf_pmf(params, k) for k in range(cap + 1)]
    return HarvestPmf(_truncate_and_fold(np.array(masses), cap))


def combined_distribution(params: SystemParams, include_rf: bool = True) -> HarvestPmf:
    """Truncated distribution of ambient plus (optionally) RF arrivals."""
    if not include_rf:
        return nature_distribution(params)
    cap = SUPPORT_CAP_FACTOR * params.N_max
    nature = nature_distribution(params)
    rf = rf_distribution(params)
    convolved = np.convolve(nature.masses, rf.masses)
    return HarvestPmf(_truncate_and_fold(convolved, cap))
