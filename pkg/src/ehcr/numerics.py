"""Special functions and a small dense linear-program front end.

Everything here is a pure function of its inputs and safe to call from any
number of threads: integer-order gamma tail probabilities, the generalized
Marcum Q function, and a maximization wrapper around scipy's HiGHS solver for
the small dense programs built by the policy optimizer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

MARCUM_MAX_TERMS = 10_000
MARCUM_TAIL_RTOL = 1e-12

# exp(-x) underflows below this; switch to log-space accumulation
_EXP_UNDERFLOW = 700.0

#: maximum constraint violation an "optimal" solution may carry
LP_FEASIBILITY_TOL = 1e-8

_LP_OPTIONS = {
    "primal_feasibility_tolerance": LP_FEASIBILITY_TOL,
    "dual_feasibility_tolerance": 1e-9,
}


class MarcumConvergenceError(ArithmeticError):
    """Marcum-Q series failed its tail bound within the term cap."""


def _check_order(m: int) -> int:
    if int(m) != m or m < 1:
        raise ValueError(f"order must be a positive integer, got {m!r}")
    return int(m)


def regularized_upper_gamma_int(m: int, x: float) -> float:
    """Regularized upper incomplete gamma ratio for integer order m >= 1.

    For integer m the ratio collapses to the Erlang tail
    ``exp(-x) * sum_{k<m} x^k / k!``, which is evaluated term by term.  This
    equals the complementary CDF of a sum of m unit-rate exponentials, hence
    the value is in [0, 1], nonincreasing in x and nondecreasing in m.
    """
    m = _check_order(m)
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0.0:
        return 1.0
    if x <= _EXP_UNDERFLOW:
        term = math.exp(-x)
        total = term
        for k in range(1, m):
            term *= x / k
            total += term
        return min(total, 1.0)
    # x too large for exp(-x); accumulate in log space around the peak term
    logs = [k * math.log(x) - math.lgamma(k + 1) - x for k in range(m)]
    peak = max(logs)
    if peak < -745.0:
        return 0.0
    return min(math.exp(peak) * sum(math.exp(v - peak) for v in logs), 1.0)


def regularized_lower_gamma_int(m: int, x: float) -> float:
    """Regularized lower incomplete gamma ratio for integer order m >= 1.

    Summed as the ascending tail ``exp(-x) * sum_{k>=m} x^k / k!`` so that
    small values are produced without cancellation against 1.
    """
    m = _check_order(m)
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    if x > _EXP_UNDERFLOW:
        # upper tail is negligible here for the orders in scope
        return 1.0 - regularized_upper_gamma_int(m, x)
    log_term = m * math.log(x) - math.lgamma(m + 1) - x
    if log_term < -745.0:
        return 0.0
    term = math.exp(log_term)
    total = term
    k = m
    while True:
        k += 1
        term *= x / k
        total += term
        if term <= 1e-17 * total and k > x:
            return min(total, 1.0)


def marcum_q(m: int, a: float, b: float) -> float:
    """Generalized Marcum Q function Q_m(a, b) for integer m >= 1.

    Evaluated by the canonical series: expanding the modified Bessel function
    term by term turns the noncentral tail into a Poisson(a^2/2) mixture of
    integer-order gamma tails.  Every term is positive, so the partial sums
    are monotone and the unspent Poisson mass bounds the truncation error;
    iteration stops once that bound drops below ``MARCUM_TAIL_RTOL`` of the
    accumulated value.
    """
    m = _check_order(m)
    if a < 0 or b < 0:
        raise ValueError(f"arguments must be nonnegative, got a={a}, b={b}")
    if b == 0.0:
        return 1.0
    x = 0.5 * b * b
    if a == 0.0:
        return regularized_upper_gamma_int(m, x)
    s = 0.5 * a * a

    if s <= _EXP_UNDERFLOW:
        n_start = 0
        weight = math.exp(-s)
        below_mass = 0.0
    else:
        # start 9 sigma into the Poisson left tail: the skipped mass is
        # ~1e-19 while the log-weight there is still representable
        n_start = max(0, int(s - 9.0 * math.sqrt(s)))
        weight = math.exp(n_start * math.log(s) - math.lgamma(n_start + 1) - s)
        below_mass = 0.0

    gamma_tail = regularized_upper_gamma_int(m + n_start, x)
    # increment taking U(m+n, x) to U(m+n+1, x)
    log_inc = (m + n_start - 1) * math.log(x) - math.lgamma(m + n_start) - x
    increment = math.exp(log_inc) if log_inc > -745.0 else 0.0

    total = 0.0
    weight_sum = below_mass
    for n in range(n_start, n_start + MARCUM_MAX_TERMS):
        total += weight * gamma_tail
        weight_sum += weight
        # remaining mass: complement of the spent Poisson mass, tightened by
        # the geometric decay bound once past the mode (the complement alone
        # bottoms out at float resolution and cannot witness tiny totals)
        tail_bound = 1.0 - weight_sum
        ratio = s / (n + 1)
        if ratio < 1.0:
            tail_bound = min(tail_bound, weight * ratio / (1.0 - ratio))
        if tail_bound <= MARCUM_TAIL_RTOL * max(total, 1e-300):
            return min(total, 1.0)
        weight *= ratio
        increment *= x / (m + n)
        gamma_tail = min(gamma_tail + increment, 1.0)
    raise MarcumConvergenceError(
        f"Marcum Q_{m}({a}, {b}) did not converge in {MARCUM_MAX_TERMS} terms; "
        f"remaining mass bound {1.0 - weight_sum:.3e}"
    )


# ---------------------------------------------------------------------------
# linear programming
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearProgram:
    """Dense LP in maximization form.

    maximize objective . x  subject to
        eq_matrix  @ x == eq_rhs
        ub_matrix  @ x <= ub_rhs
        bounds[i][0] <= x_i <= bounds[i][1]   (None = unbounded on that side)
    """

    objective: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    ub_matrix: np.ndarray
    ub_rhs: np.ndarray
    bounds: tuple[tuple[float | None, float | None], ...]

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.objective, dtype=float))
        n = c.shape[0]
        a_eq = np.asarray(self.eq_matrix, dtype=float).reshape(-1, n)
        b_eq = np.atleast_1d(np.asarray(self.eq_rhs, dtype=float))
        a_ub = np.asarray(self.ub_matrix, dtype=float).reshape(-1, n)
        b_ub = np.atleast_1d(np.asarray(self.ub_rhs, dtype=float))
        if a_eq.shape[0] != b_eq.shape[0]:
            raise ValueError("eq_matrix rows and eq_rhs length differ")
        if a_ub.shape[0] != b_ub.shape[0]:
            raise ValueError("ub_matrix rows and ub_rhs length differ")
        if len(self.bounds) != n:
            raise ValueError("one (lo, hi) pair per variable required")
        for lo, hi in self.bounds:
            if lo is not None and hi is not None and lo > hi:
                raise ValueError(f"bound lo={lo} exceeds hi={hi}")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "eq_matrix", a_eq)
        object.__setattr__(self, "eq_rhs", b_eq)
        object.__setattr__(self, "ub_matrix", a_ub)
        object.__setattr__(self, "ub_rhs", b_ub)
        object.__setattr__(self, "bounds", tuple(tuple(b) for b in self.bounds))

    @property
    def n_variables(self) -> int:
        return self.objective.shape[0]


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective_value: float | None


def empty_constraints(n: int) -> tuple[np.ndarray, np.ndarray]:
    """A zero-row constraint block over n variables."""
    return np.zeros((0, n)), np.zeros(0)


def feasibility_violation(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest constraint violation of x: equalities, inequalities, bounds."""
    worst = 0.0
    if lp.eq_matrix.shape[0]:
        worst = float(np.max(np.abs(lp.eq_matrix @ x - lp.eq_rhs)))
    if lp.ub_matrix.shape[0]:
        worst = max(worst, float(np.max(lp.ub_matrix @ x - lp.ub_rhs)))
    for value, (lo, hi) in zip(x, lp.bounds):
        if lo is not None:
            worst = max(worst, lo - value)
        if hi is not None:
            worst = max(worst, value - hi)
    return worst


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Maximize the LP, reporting infeasible/unbounded via status, not raise.

    Ill-conditioned instances can trip the simplex at tight tolerances or
    come back from postsolve with out-of-tolerance residuals, so the solve
    walks a ladder (simplex, interior point, simplex without presolve) and
    accepts the first solution that passes the feasibility audit.
    """
    kwargs = dict(
        c=-lp.objective,
        A_ub=lp.ub_matrix if lp.ub_matrix.shape[0] else None,
        b_ub=lp.ub_rhs if lp.ub_rhs.shape[0] else None,
        A_eq=lp.eq_matrix if lp.eq_matrix.shape[0] else None,
        b_eq=lp.eq_rhs if lp.eq_rhs.shape[0] else None,
        bounds=list(lp.bounds),
    )
    attempts = (
        ("highs", dict(_LP_OPTIONS)),
        ("highs-ipm", dict(_LP_OPTIONS)),
        ("highs", dict(_LP_OPTIONS, presolve=False)),
    )
    worst: tuple[float, str] | None = None
    for method, options in attempts:
        result = linprog(method=method, options=options, **kwargs)
        if result.status == 0:
            x = np.asarray(result.x, dtype=float)
            violation = feasibility_violation(lp, x)
            if violation <= LP_FEASIBILITY_TOL:
                return LpSolution("optimal", x, float(lp.objective @ x))
            if worst is None or violation < worst[0]:
                worst = (violation, method)
            continue
        if result.status == 2:
            return LpSolution("infeasible", None, None)
        if result.status == 3:
            return LpSolution("unbounded", None, None)
    if worst is not None:
        raise RuntimeError(
            f"every LP solve violated constraints; best residual "
            f"{worst[0]:.3e} from {worst[1]}"
        )
    raise RuntimeError(f"LP solver failure (status {result.status}): {result.message}")
