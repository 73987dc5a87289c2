"""Optimal initial stockpile for durable (reusable) resources.

Durable stock never depletes: supply on day j is K0 + a*j. The planning
objective charges quadratic costs on daily shortage and surplus plus linear
possession costs, and is minimized in closed form by sorting the projected
shortages Y_j = X_j - a*j and locating the pivot rank where the sign of the
objective's derivative flips.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._costs import as_day_array, validate_cost_fields
from .demand import DemandSeries
from .errors import DegenerateCostsError


@dataclass(frozen=True)
class DurableCostModel:
    """Per-day cost weights for the durable stockpile objective.

    omega: significance weight per day; theta_plus / theta_minus: cost per
    squared unit of shortage / surplus; c: possession cost per unit per day
    applied to the accumulated supply; c0: initial stockpile cost per unit;
    a: emergency production rate in units per day.
    """

    m: int
    a: float
    omega: np.ndarray
    theta_plus: np.ndarray
    theta_minus: np.ndarray
    c: np.ndarray
    c0: float

    def __post_init__(self):
        for name in ("omega", "theta_plus", "theta_minus", "c"):
            object.__setattr__(self, name, as_day_array(getattr(self, name), self.m, name))
        validate_cost_fields(self.m, self.a, self.omega, self.theta_plus,
                             self.theta_minus, self.c, self.c0)


@dataclass(frozen=True)
class StockpileResult:
    """Optimal initial stockpile with its pivot rank and objective value."""

    k0: float
    j_index: int
    objective_value: float


def projected_shortage(X: DemandSeries, a: float) -> np.ndarray:
    """Y_j = X_j - a*j: demand net of accumulated production, no stockpile."""
    days = np.arange(1, len(X) + 1, dtype=float)
    return X.values - a * days


def supply_path(k0: float, a: float, m: int) -> np.ndarray:
    """Available durable stock on days 1..m: K_j = k0 + a*j."""
    if k0 < 0:
        raise ValueError(f"k0 must be >= 0, got {k0}")
    return k0 + a * np.arange(1, m + 1, dtype=float)


def durable_objective(k0: float, X: DemandSeries, costs: DurableCostModel) -> float:
    """Exact objective value at a given initial stockpile size."""
    if k0 < 0:
        raise ValueError(f"k0 must be >= 0, got {k0}")
    supply = supply_path(k0, costs.a, costs.m)
    imbalance = X.values - supply
    short = np.maximum(imbalance, 0.0)
    over = np.maximum(-imbalance, 0.0)
    per_day = (costs.omega * (0.5 * costs.theta_plus * short**2
                              + 0.5 * costs.theta_minus * over**2
                              + costs.c * supply))
    return float(np.sum(per_day) + costs.c0 * k0)


def optimal_initial_stockpile(X: DemandSeries, costs: DurableCostModel) -> StockpileResult:
    """Closed-form minimizer of the durable objective over K0 >= 0.

    Sorts projected shortages ascending and scans ranks J = 1..m for the
    unique segment [Y_[J-1], Y_[J]] (Y_[0] = -inf) containing the root of
    the objective's derivative; the root is a possession-discounted weighted
    average of the projected shortages, clamped at zero.
    """
    if len(X) != costs.m:
        raise ValueError(f"demand length {len(X)} != cost horizon {costs.m}")
    m = costs.m
    Y = projected_shortage(X, costs.a)
    order = np.argsort(Y, kind="stable")
    Ys = Y[order]
    wp = (costs.omega * costs.theta_plus)[order]
    wm = (costs.omega * costs.theta_minus)[order]
    if not np.any(wp > 0) and not np.any(wm > 0):
        raise DegenerateCostsError("all omega*theta weights are zero; "
                                   "the objective is flat in K0")
    S = float(np.sum(costs.omega * costs.c) + costs.c0)

    # Prefix sums arranged so that for pivot rank J (1-based):
    #   below-weight  = sum_{j<J} wm_j            (surplus side)
    #   above-weight  = sum_{j>=J} wp_j           (shortage side)
    wm_cum = np.concatenate(([0.0], np.cumsum(wm)))
    wmy_cum = np.concatenate(([0.0], np.cumsum(wm * Ys)))
    wp_rcum = np.concatenate((np.cumsum((wp)[::-1])[::-1], [0.0]))
    wpy_rcum = np.concatenate((np.cumsum((wp * Ys)[::-1])[::-1], [0.0]))

    def derivative_gap(j_rank: int, y: float) -> float:
        # sum_{j<J} wm (Y_j - y) + sum_{j>=J} wp (Y_j - y); the root of the
        # objective derivative satisfies gap == S on the pivot segment.
        below = wmy_cum[j_rank - 1] - y * wm_cum[j_rank - 1]
        above = wpy_rcum[j_rank - 1] - y * wp_rcum[j_rank - 1]
        return below + above

    scale = max(1.0, abs(S), float(np.max(np.abs(Ys))) * float(np.max(wp + wm)))
    slack = 1e-12 * scale

    candidates = []
    for J in range(1, m + 1):
        lhs = derivative_gap(J, Ys[J - 1])
        rhs = np.inf if J == 1 else derivative_gap(J, Ys[J - 2])
        if not (lhs <= S + slack and S <= rhs + slack):
            continue
        denom = wm_cum[J - 1] + wp_rcum[J - 1]
        if denom <= 0.0:
            # Flat segment; the objective is constant on it, take the left end.
            k0p = Ys[J - 2] if J > 1 else Ys[0]
        else:
            k0p = (wmy_cum[J - 1] + wpy_rcum[J - 1] - S) / denom
        candidates.append((J, max(k0p, 0.0)))
    if not candidates:
        raise AssertionError("pivot scan found no admissible rank; this is a bug")
    # Ties (duplicate Y values, flat segments) may admit several ranks; all
    # must agree on the objective, and the smallest rank is reported.
    values = [durable_objective(k0, X, costs) for _, k0 in candidates]
    best = min(values)
    if any(v > best + 1e-9 * max(1.0, abs(best)) for v in values):
        raise AssertionError(
            f"pivot scan found ranks with conflicting objectives: "
            f"{[(J, v) for (J, _), v in zip(candidates, values)]}; this is a bug"
        )
    chosen, k0 = candidates[0]
    return StockpileResult(k0=k0, j_index=chosen, objective_value=values[0])
