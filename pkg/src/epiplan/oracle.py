"""Independent brute-force reference solvers.

These certify the analytic and iterative solvers in the test suite and in
the CLI's cross-validation subcommand. They share no algorithmic machinery
with the solvers they check (only the separately tested objective and
residual evaluators), and they guard against oversized instances: they are
correctness references, not production paths.
"""

from __future__ import annotations

import numpy as np

from .allocation import PeriodAllocation, RegionalPeriodDemand, kkt_residual as allocation_residual
from .demand import DemandSeries
from .errors import InstanceTooLargeError, SolverNotConvergedError
from .stockpile_durable import DurableCostModel, durable_objective
from .stockpile_singleuse import (DistributionSchedule, SingleUseCostModel,
                                  kkt_residual as schedule_residual,
                                  singleuse_objective)


def grid_search_k0(X: DemandSeries, costs: DurableCostModel,
                   lo: float, hi: float, step: float) -> float:
    """Argmin of the durable objective over a regular grid; ties -> smallest."""
    if lo > hi:
        raise ValueError(f"lo={lo} must be <= hi={hi}")
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    grid = np.arange(lo, hi + step, step)
    grid = grid[grid >= 0]
    days = np.arange(1, costs.m + 1, dtype=float)
    supply = grid[:, None] + costs.a * days[None, :]
    imbalance = X.values[None, :] - supply
    short = np.maximum(imbalance, 0.0)
    over = np.maximum(-imbalance, 0.0)
    values = np.sum(costs.omega * (0.5 * costs.theta_plus * short**2
                                   + 0.5 * costs.theta_minus * over**2
                                   + costs.c * supply), axis=1) + costs.c0 * grid
    return float(grid[int(np.argmin(values))])


# ----------------------------------------------------------------------
# Single-use schedule reference: multi-start exact coordinate descent with
# pairwise transfer moves, certified by KKT residual.
# ----------------------------------------------------------------------

def _quadratic_min_on_interval(half_curv: float, slope0: float,
                               lo: float, hi: float) -> float:
    """Minimize half_curv*d^2 + slope0*d over [lo, hi] (half_curv >= 0)."""
    if hi < lo:
        return 0.0
    if half_curv > 0:
        return float(np.clip(-slope0 / (2.0 * half_curv), lo, hi))
    if slope0 > 0:
        return lo
    if slope0 < 0:
        return hi
    return 0.0


def brute_force_schedule(X: DemandSeries, costs: SingleUseCostModel,
                         starts: int = 8, tol: float = 1e-10,
                         max_sweeps: int = 2000) -> DistributionSchedule:
    """Reference optimum of the reduced single-use program (m <= 8 only).

    Exact coordinate minimization over each k_t, exact reset of K0, pairwise
    transfers between days, and joint (K0, k_t) moves, swept to a fixed
    point from several deterministic and seeded-random starts. A candidate
    is accepted only if its KKT residual certifies optimality.
    """
    m = costs.m
    if m > 8:
        raise InstanceTooLargeError(f"brute-force schedule limited to m <= 8, got {m}")
    if len(X) != m:
        raise ValueError(f"demand length {len(X)} != cost horizon {m}")
    x = X.values
    w = costs.omega * costs.theta_plus
    oc = costs.omega * costs.c
    C = np.cumsum(oc[::-1])[::-1]
    S = float(np.sum(oc) + costs.c0)
    b = costs.a * np.arange(1, m + 1, dtype=float)
    k0_hi = max(0.0, float(np.max(np.cumsum(x) - b)))
    scale = max(1.0, float(np.max(w * x)))
    rng = np.random.default_rng(20200408)

    def reduced_objective(k0, k):
        return (0.5 * float(np.sum(w * (x - k) ** 2)) - float(np.sum(C * k))
                + S * k0)

    def needed(k):
        return max(0.0, float(np.max(np.cumsum(k) - b)))

    eps_move = 1e-13 * max(1.0, float(np.max(x, initial=0.0)), k0_hi)

    def sweep(k0, k):
        # K0 enters the objective linearly, so its exact coordinate optimum
        # is the smallest feasible value for the current k.
        improved = False
        k0_new = needed(k)
        if k0 - k0_new > eps_move:
            improved = True
        k0 = k0_new
        slack = k0 + b - np.cumsum(k)
        for t in range(m):
            hi_t = min(x[t], k[t] + float(np.min(slack[t:])))
            slope = w[t] * (k[t] - x[t]) - C[t]
            d = _quadratic_min_on_interval(0.5 * w[t], slope, -k[t], hi_t - k[t])
            if abs(d) > eps_move:
                k[t] += d
                slack[t:] -= d
                improved = True
        # Pairwise transfer: move d from day u to day v (u < v); prefixes in
        # [u, v-1] gain slack d, everything else is unchanged.
        for u in range(m):
            for v in range(u + 1, m):
                lo_d = max(-k[v], k[u] - x[u], -float(np.min(slack[u:v])))
                hi_d = min(k[u], x[v] - k[v])
                slope = (w[u] * (x[u] - k[u]) - w[v] * (x[v] - k[v])
                         + C[u] - C[v])
                d = _quadratic_min_on_interval(0.5 * (w[u] + w[v]), slope, lo_d, hi_d)
                if abs(d) > eps_move:
                    k[u] -= d
                    k[v] += d
                    slack[u:v] += d
                    improved = True
        # Joint move: raise or lower K0 and one day's amount together; the
        # slack of days >= t is unchanged, earlier days gain slack d.
        for t in range(m):
            lo_d = max(-k[t], -k0)
            if t > 0:
                lo_d = max(lo_d, -float(np.min(slack[:t])))
            hi_d = x[t] - k[t]
            slope = S - w[t] * (x[t] - k[t]) - C[t]
            d = _quadratic_min_on_interval(0.5 * w[t], slope, lo_d, hi_d)
            if abs(d) > eps_move:
                k[t] += d
                k0 += d
                if t > 0:
                    slack[:t] += d
                improved = True
        return k0, k, improved

    def run(k0, k):
        for _ in range(max_sweeps):
            k0, k, improved = sweep(k0, k)
            if not improved:
                break
        return k0, k

    start_points = [(0.0, np.zeros(m)), (k0_hi, x.copy())]
    while len(start_points) < max(starts, 2):
        k0_r = float(rng.uniform(0.0, k0_hi)) if k0_hi > 0 else 0.0
        draw = rng.uniform(0.0, x + 1e-12)
        k_r = np.zeros(m)
        cum = 0.0
        for t in range(m):
            k_r[t] = min(draw[t], x[t], max(k0_r + b[t] - cum, 0.0))
            cum += k_r[t]
        start_points.append((k0_r, k_r))

    best = None
    best_resid = np.inf
    for k0_s, k_s in start_points:
        k0_f, k_f = run(k0_s, k_s.copy())
        resid = schedule_residual(k0_f, k_f, X, costs, active_tol=1e-12)
        value = reduced_objective(k0_f, k_f)
        key = (resid > tol * scale, value)
        if best is None or key < best[0]:
            best = (key, k0_f, k_f, resid)
            best_resid = resid
    _, k0_f, k_f, resid = best
    if resid > tol * scale:
        raise SolverNotConvergedError(
            f"no coordinate-descent start certified: residual {best_resid:.3g}",
            residual=best_resid,
        )
    storage = np.empty(m + 1)
    storage[0] = k0_f
    for j in range(m):
        storage[j + 1] = storage[j] + costs.a - k_f[j]
    schedule = DistributionSchedule(k0=k0_f, k=k_f, storage=storage,
                                    objective_value=0.0, kkt_residual=resid)
    value = singleuse_objective(schedule, X, costs)
    return DistributionSchedule(k0=k0_f, k=k_f, storage=storage,
                                objective_value=value, kkt_residual=resid)


# ----------------------------------------------------------------------
# Allocation reference: projected gradient on the simplex slice.
# ----------------------------------------------------------------------

def _project_simplex_slice(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection onto {k >= 0, sum k = total}."""
    if total <= 0.0:
        return np.zeros(v.size)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    rho = np.nonzero(u - css / np.arange(1, v.size + 1) > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def brute_force_allocation(demand: RegionalPeriodDemand, K: float,
                           step: float | None = None, starts: int = 6,
                           tol: float = 1e-10, max_iter: int = 200_000) -> np.ndarray:
    """Reference optimum of the period allocation problem (n <= 4 only).

    Projected-gradient descent on {sum k = K, k >= 0} from several starts,
    accepted only when the KKT residual certifies the fixed point.
    """
    n = demand.n
    if n > 4:
        raise InstanceTooLargeError(f"brute-force allocation limited to n <= 4, got {n}")
    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    if n == 1:
        return np.array([K])

    curv = demand.omega * np.maximum(demand.theta_plus, demand.theta_minus)
    L = float(np.max(curv))
    alpha = step if step is not None else 1.0 / L
    rng = np.random.default_rng(20200912)
    scale = max(1.0, float(np.max(curv * np.maximum(demand.x, 1.0))), K)

    def gradient(k):
        side = np.where(k <= demand.x, demand.theta_plus, demand.theta_minus)
        return demand.omega * side * (k - demand.x)

    def residual(k):
        alloc = PeriodAllocation(k=k, branch="reference", frugality_index=None,
                                 b_weights=np.zeros(n))
        return allocation_residual(demand, K, alloc)

    best = None
    for s in range(max(starts, 1)):
        if s == 0:
            k = np.full(n, K / n)
        else:
            k = _project_simplex_slice(rng.uniform(0.0, max(K, 1.0), size=n), K)
        r = residual(k)
        for it in range(max_iter):
            k_next = _project_simplex_slice(k - alpha * gradient(k), K)
            move = float(np.max(np.abs(k_next - k)))
            k = k_next
            if it % 50 == 0 or move <= 1e-16 * max(1.0, K):
                r = residual(k)
                if r <= tol * scale or move <= 1e-16 * max(1.0, K):
                    break
        r = residual(k)
        if best is None or r < best[0]:
            best = (r, k)
        if r <= tol * scale:
            return k
    raise SolverNotConvergedError(
        f"projected gradient did not certify: residual {best[0]:.3g}",
        residual=best[0],
    )
