"""Per-period allocation of a fixed supply across competing regions.

With system-wide surplus every region receives its demand plus a harmonic
share of the excess. Under shortage, regions are ranked by demand and a
frugality test picks how many of the top-demand regions receive support;
the shortfall is then split across the supported regions in proportion to
the same harmonic weights, and everyone else receives nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demand import DemandSeries
from .errors import (AmbiguousFrugalIndexError, EmptySubsetError,
                     LengthMismatchError, NoFrugalIndexError)

SURPLUS = "surplus"
SHORTAGE = "shortage"


@dataclass(frozen=True)
class RegionalPeriodDemand:
    """One period's demand and cost weights for each of n regions."""

    x: np.ndarray
    omega: np.ndarray
    theta_plus: np.ndarray
    theta_minus: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        n = x.size
        if n == 0:
            raise ValueError("need at least one region")
        arrays = {"x": x}
        for name in ("omega", "theta_plus", "theta_minus"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise LengthMismatchError(f"{name} has shape {arr.shape}, expected ({n},)")
            arrays[name] = arr
        if np.any(x < 0):
            raise ValueError("demands must be >= 0")
        if np.any(arrays["omega"] <= 0):
            raise ValueError("weights omega must be > 0")
        if np.any(arrays["omega"] * arrays["theta_plus"] <= 0):
            raise ValueError("omega*theta_plus must be > 0 for every region")
        if np.any(arrays["omega"] * arrays["theta_minus"] <= 0):
            raise ValueError("omega*theta_minus must be > 0 for every region")
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class PeriodAllocation:
    """Allocations for one period plus branch diagnostics."""

    k: np.ndarray
    branch: str
    frugality_index: int | None
    b_weights: np.ndarray
    below_demand: tuple = ()     # surplus-branch diagnostic; expected empty


def harmonic_weights(omega, theta, subset=None) -> np.ndarray:
    """Normalized reciprocal weights 1/(omega*theta) over a region subset.

    Entries off the subset are zero; on-subset entries are positive and sum
    to one.
    """
    omega = np.asarray(omega, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if subset is None:
        subset = np.arange(omega.size)
    else:
        subset = np.asarray(subset, dtype=int)
    if subset.size == 0:
        raise EmptySubsetError("harmonic weights need a non-empty subset")
    product = omega[subset] * theta[subset]
    if np.any(product <= 0):
        raise ValueError("omega*theta must be > 0 on the subset")
    inv = 1.0 / product
    weights = np.zeros(omega.size)
    weights[subset] = inv / np.sum(inv)
    return weights


def period_objective(demand: RegionalPeriodDemand, k) -> float:
    """Imbalance cost of one period's allocation vector."""
    k = np.asarray(k, dtype=float)
    gap = demand.x - k
    short = np.maximum(gap, 0.0)
    over = np.maximum(-gap, 0.0)
    return float(np.sum(demand.omega * (0.5 * demand.theta_plus * short**2
                                        + 0.5 * demand.theta_minus * over**2)))


def allocate_period(demand: RegionalPeriodDemand, K: float) -> PeriodAllocation:
    """Optimal split of supply K across regions for a single period.

    K > total demand: surplus branch, demand plus harmonic share of the
    excess. K <= total demand: shortage branch -- rank regions by marginal
    shortage cost omega*theta_plus*x (plain demand when weights are uniform),
    find the unique support size passing the frugality test, and share the
    shortfall across supported regions by harmonic weights. Zero-demand
    regions are excluded from the ranking and receive nothing.
    """
    if K < 0:
        raise ValueError(f"supply K must be >= 0, got {K}")
    x = demand.x
    n = demand.n
    total = float(np.sum(x))
    # Summation-order roundoff can put K an ulp past the total-demand
    # boundary; both branches agree there, so resolve it with a tolerance.
    boundary_tol = 1e-12 * max(1.0, total, K)

    if K > total + boundary_tol:
        b = harmonic_weights(demand.omega, demand.theta_minus)
        k = x + b * (K - total)
        below = tuple(int(i) for i in np.flatnonzero(k < x - 1e-12 * np.maximum(1.0, x)))
        return PeriodAllocation(k=k, branch=SURPLUS, frugality_index=None,
                                b_weights=b, below_demand=below)

    active = np.flatnonzero(x > 0)
    if active.size == 0:
        return PeriodAllocation(k=np.zeros(n), branch=SHORTAGE, frugality_index=0,
                                b_weights=np.zeros(n))

    # Stable descending ranking by marginal shortage cost; receiving support
    # requires omega*theta_plus*x to reach the shortfall price mu, so this
    # is the order in which regions enter the supported set. It coincides
    # with demand ranking when the cost weights are uniform.
    g = demand.omega * demand.theta_plus * x
    order = active[np.argsort(-g[active], kind="stable")]
    xs = x[order]
    gs = g[order]
    inv = 1.0 / (demand.omega[order] * demand.theta_plus[order])
    prefix = np.cumsum(xs)
    inv_prefix = np.cumsum(inv)
    na = order.size

    passing = []
    for support in range(1, na + 1):
        if K > prefix[support - 1] + boundary_tol:
            continue
        # mu: marginal value of one more unit of supply for this support set.
        mu = max(prefix[support - 1] - K, 0.0) / inv_prefix[support - 1]
        if np.any(gs[:support] < mu):
            continue
        if support < na and np.any(gs[support:] >= mu):
            continue
        passing.append(support)
    if not passing:
        raise NoFrugalIndexError(
            f"no support size passes the frugality test (n={na}, K={K}); this is a bug"
        )
    if len(passing) > 1:
        raise AmbiguousFrugalIndexError(
            f"support sizes {passing} all pass the frugality test"
        )
    support = passing[0]
    shortfall = max(prefix[support - 1] - K, 0.0)
    b_sorted = np.zeros(na)
    b_sorted[:support] = inv[:support] / inv_prefix[support - 1]
    k_sorted = np.zeros(na)
    k_sorted[:support] = xs[:support] - b_sorted[:support] * shortfall

    k = np.zeros(n)
    k[order] = k_sorted
    b = np.zeros(n)
    b[order] = b_sorted
    return PeriodAllocation(k=k, branch=SHORTAGE, frugality_index=support,
                            b_weights=b)


def kkt_residual(demand: RegionalPeriodDemand, K: float,
                 alloc: PeriodAllocation) -> float:
    """Maximum KKT violation of the period problem at a feasible allocation.

    The problem is min sum_i cost_i(k_i) subject to sum k_i = K, k_i >= 0.
    The budget multiplier is recovered from unconstrained coordinates and
    the bound multipliers from the rest; returns the worst violation of
    stationarity, dual feasibility, complementary slackness, and the budget.
    """
    k = alloc.k
    x = demand.x
    side = np.where(k <= x, demand.theta_plus, demand.theta_minus)
    grad = demand.omega * side * (k - x)
    scale = max(1.0, float(np.max(np.abs(grad))), float(np.max(demand.omega * side * x)))

    free = k > 1e-12 * np.maximum(1.0, x)
    if np.any(free):
        mu = float(-np.mean(grad[free]))
    else:
        mu = float(np.max(-grad))
    lam = np.where(free, 0.0, grad + mu)

    viol = abs(float(np.sum(k)) - K)
    viol = max(viol, float(np.max(np.maximum(-k, 0.0))))
    viol = max(viol, float(np.max(np.abs(grad + mu - lam))))
    viol = max(viol, float(np.max(np.maximum(-lam, 0.0))))
    viol = max(viol, float(np.max(np.abs(lam * k))) / max(1.0, float(np.max(np.abs(k)))))
    return viol


@dataclass(frozen=True)
class AllocationPlan:
    """Day-by-day allocation matrix plus per-day branch diagnostics.

    allocations is (m, n); branches and frugality hold one entry per day
    (frugality None on surplus days); residuals carries the per-day KKT
    residual of the returned allocation.
    """

    allocations: np.ndarray
    branches: tuple
    frugality: tuple
    residuals: np.ndarray
    regions: tuple


def allocate_horizon(demands: list[DemandSeries], omega: np.ndarray,
                     theta_plus: np.ndarray, theta_minus: np.ndarray,
                     supply) -> AllocationPlan:
    """Apply allocate_period independently on each day of the horizon.

    demands: one series per region, equal lengths m. omega / theta_plus /
    theta_minus: per-day-per-region arrays of shape (m, n) (a 1-d length-n
    array is broadcast across days). supply: length-m sequence of the
    per-day system supply (accumulated stock for durables, the day's
    distribution for single-use resources).
    """
    if not demands:
        raise ValueError("need at least one region")
    n = len(demands)
    m = len(demands[0])
    if any(len(s) != m for s in demands):
        raise LengthMismatchError("regional demand series lengths differ")
    supply = np.asarray(supply, dtype=float)
    if supply.shape != (m,):
        raise LengthMismatchError(f"supply has shape {supply.shape}, expected ({m},)")
    if np.any(supply < 0):
        raise ValueError("supply must be >= 0")

    def per_day(arr, name):
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 1:
            arr = np.broadcast_to(arr, (m, n)).copy()
        if arr.shape != (m, n):
            raise LengthMismatchError(f"{name} has shape {arr.shape}, expected ({m}, {n})")
        return arr

    omega = per_day(omega, "omega")
    theta_plus = per_day(theta_plus, "theta_plus")
    theta_minus = per_day(theta_minus, "theta_minus")
    x_matrix = np.column_stack([s.values for s in demands])

    allocations = np.empty((m, n))
    branches = []
    frugality = []
    residuals = np.empty(m)
    for j in range(m):
        day = RegionalPeriodDemand(x=x_matrix[j], omega=omega[j],
                                   theta_plus=theta_plus[j],
                                   theta_minus=theta_minus[j])
        try:
            alloc = allocate_period(day, float(supply[j]))
        except Exception as exc:
            raise type(exc)(f"day {j + 1}: {exc}") from exc
        allocations[j] = alloc.k
        branches.append(alloc.branch)
        frugality.append(alloc.frugality_index)
        residuals[j] = kkt_residual(day, float(supply[j]), alloc)
    regions = tuple(s.region for s in demands)
    return AllocationPlan(allocations=allocations, branches=tuple(branches),
                          frugality=tuple(frugality), residuals=residuals,
                          regions=regions)
