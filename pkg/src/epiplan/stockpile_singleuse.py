"""Initial stockpile and daily distribution schedule for single-use resources.

Consumables are destroyed on use, so the planner chooses both an initial
stockpile K0 and a daily distribution schedule k_1..k_m. Central storage
follows K_j = K_{j-1} + a - k_j + (k_j - X_j)_+ and must stay non-negative.
Distributing above demand is never better than matching it, so the solver
works on the reduced convex program with 0 <= k_j <= X_j, the storage
recursion substituted out, and only the shortage cost active:

    min  sum_j omega_j (theta+_j/2 (X_j - k_j)^2 + c_j K_j) + c0 K0
    s.t. K_j = K_{j-1} + a - k_j >= 0,  0 <= k_j <= X_j,  K0 >= 0.

The solver is a monotone projected-gradient loop over (K0, k) with exact
Euclidean projection onto the box-plus-prefix-sum polytope (an active-set
sweep), periodic active-set polish solves, and a diminishing-step fallback.
Optimality is certified by an independent multiplier-recovery residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._costs import as_day_array, validate_cost_fields
from .demand import DemandSeries
from .errors import (DegenerateCostsError, InconsistentStorageError,
                     SolverNotConvergedError)


@dataclass(frozen=True)
class SingleUseCostModel:
    """Cost weights for the single-use program.

    Fields mirror the durable model, but here the possession cost c applies
    to the centrally stored amount K_j rather than to cumulative supply.
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
class DistributionSchedule:
    """A stockpile size, daily distribution amounts, and the storage path.

    storage has length m+1 with storage[0] == k0. kkt_residual is the
    maximum stationarity/feasibility violation certified for the reduced
    program at this point (see kkt_residual()).
    """

    k0: float
    k: np.ndarray
    storage: np.ndarray
    objective_value: float
    kkt_residual: float

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        storage = np.asarray(self.storage, dtype=float)
        if self.k0 < 0:
            raise ValueError(f"k0 must be >= 0, got {self.k0}")
        if np.any(k < 0):
            raise ValueError("distribution amounts must be >= 0")
        if storage.shape != (k.size + 1,):
            raise ValueError("storage must have length m+1")
        if abs(storage[0] - self.k0) > 1e-9 * max(1.0, self.k0):
            raise ValueError("storage[0] must equal k0")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "storage", storage)


def storage_trajectory(k0: float, k, a: float, X: DemandSeries) -> np.ndarray:
    """Storage path K_0..K_m under the full recursion with give-back.

    K_j = K_{j-1} + a - k_j + (k_j - X_j)_+ : amounts distributed beyond the
    day's demand return to storage. Values may go negative for infeasible
    schedules; callers check feasibility.
    """
    k = np.asarray(k, dtype=float)
    x = X.values
    if k.shape != x.shape:
        raise ValueError(f"schedule length {k.size} != demand length {x.size}")
    storage = np.empty(k.size + 1)
    storage[0] = k0
    for j in range(k.size):
        consumed = min(k[j], x[j])
        storage[j + 1] = storage[j] + a - consumed
    return storage


def singleuse_objective(schedule: DistributionSchedule, X: DemandSeries,
                        costs: SingleUseCostModel) -> float:
    """Exact cost of a schedule: imbalance, storage possession, and c0*K0."""
    expected = storage_trajectory(schedule.k0, schedule.k, costs.a, X)
    tol = 1e-9 * np.maximum(1.0, np.abs(expected))
    if np.any(np.abs(schedule.storage - expected) > tol):
        worst = int(np.argmax(np.abs(schedule.storage - expected)))
        raise InconsistentStorageError(
            f"storage[{worst}]={schedule.storage[worst]:.9g} does not match "
            f"the recursion value {expected[worst]:.9g}"
        )
    imbalance = X.values - schedule.k
    short = np.maximum(imbalance, 0.0)
    over = np.maximum(-imbalance, 0.0)
    per_day = costs.omega * (0.5 * costs.theta_plus * short**2
                             + 0.5 * costs.theta_minus * over**2
                             + costs.c * schedule.storage[1:])
    return float(np.sum(per_day) + costs.c0 * schedule.k0)


# ----------------------------------------------------------------------
# Reduced-program machinery. Decision vector z = (u0, k_1..k_m) where
# K0 = sigma*u0; the rescaling keeps projected-gradient steps effective
# when stockpile units dwarf the per-day amounts.
# ----------------------------------------------------------------------

class _Reduced:
    """Precomputed arrays for the reduced program in scaled variables."""

    def __init__(self, X: DemandSeries, costs: SingleUseCostModel):
        self.x = X.values
        self.m = costs.m
        self.a = costs.a
        self.w = costs.omega * costs.theta_plus
        oc = costs.omega * costs.c
        self.C = np.cumsum(oc[::-1])[::-1]          # tail possession weight
        self.S = float(np.sum(oc) + costs.c0)       # marginal cost of K0
        self.days = np.arange(1, self.m + 1, dtype=float)
        self.const = float(costs.a * np.sum(oc * self.days))
        cum_x = np.cumsum(self.x)
        self.k0_max = max(0.0, float(np.max(cum_x - costs.a * self.days)))
        self.sigma = max(1.0, self.k0_max)
        self.lo = np.zeros(self.m + 1)
        self.ub = np.concatenate(([self.k0_max / self.sigma], self.x))
        self.b_pre = costs.a * self.days
        self.scale = max(1.0, float(np.max(self.w * self.x)))

    def prefix_slack(self, z: np.ndarray) -> np.ndarray:
        """b_j - (cum_j(k) - sigma*u0) for each day; >= 0 when feasible."""
        return self.b_pre + self.sigma * z[0] - np.cumsum(z[1:])

    def objective(self, z: np.ndarray) -> float:
        k = z[1:]
        return float(0.5 * np.sum(self.w * (self.x - k) ** 2)
                     - np.sum(self.C * k)
                     + self.S * self.sigma * z[0] + self.const)

    def gradient(self, z: np.ndarray) -> np.ndarray:
        g = np.empty(self.m + 1)
        g[0] = self.S * self.sigma
        g[1:] = self.w * (z[1:] - self.x) - self.C
        return g

    def needed_u0(self, k: np.ndarray) -> float:
        """Smallest u0 making the prefix constraints feasible for this k."""
        return max(0.0, float(np.max(np.cumsum(k) - self.b_pre))) / self.sigma


def _project(red: _Reduced, v: np.ndarray, max_pivots: int | None = None) -> np.ndarray:
    """Exact Euclidean projection of v onto the feasible polytope.

    Primal active-set sweep: box constraints pin coordinates, active prefix
    rows enter a small normal-equation solve. Finite termination follows
    from strict convexity of the projection objective.
    """
    n = red.m + 1
    if max_pivots is None:
        max_pivots = 10 * (n + red.m) + 50
    z = np.clip(v, red.lo, red.ub)
    z[0] = min(max(z[0], red.needed_u0(z[1:])), red.ub[0])
    slack0 = red.prefix_slack(z)
    if np.any(slack0 < 0.0):
        # Stockpile coordinate cannot absorb the overflow (it is pinned or
        # capped); trim the amounts forward to respect each prefix cap.
        cum = 0.0
        for j in range(red.m):
            cap = red.b_pre[j] + red.sigma * z[0] - cum
            if z[j + 1] > cap:
                z[j + 1] = max(cap, 0.0)
            cum += z[j + 1]

    # Working set: "lo"/"up" hold coordinate indices, "pre" prefix days
    # (0-based). Coordinates with lo == ub are equalities: pinned for good.
    equality_set = set(int(i) for i in np.flatnonzero(red.ub <= red.lo))
    W_lo: set[int] = set(equality_set)
    W_up: set[int] = set()
    W_pre: set[int] = set()
    eps = 1e-13 * max(1.0, float(np.max(np.abs(v))), float(np.max(red.ub[np.isfinite(red.ub)])))

    def pre_row(j: int) -> np.ndarray:
        row = np.zeros(n)
        row[0] = -red.sigma
        row[1: j + 2] = 1.0
        return row

    for _ in range(max_pivots):
        pinned = np.zeros(n, dtype=bool)
        target = np.empty(n)
        for i in W_lo:
            pinned[i] = True
            target[i] = red.lo[i]
        for i in W_up:
            pinned[i] = True
            target[i] = red.ub[i]
        free = ~pinned
        pre_idx = sorted(W_pre)
        y = np.where(pinned, target, v)
        if pre_idx:
            rows = np.array([pre_row(j) for j in pre_idx])
            G = rows[:, free]
            rhs = red.b_pre[pre_idx] - rows[:, pinned] @ target[pinned]
            gap = G @ v[free] - rhs
            gram = G @ G.T
            try:
                lam = np.linalg.solve(gram, gap)
            except np.linalg.LinAlgError:
                lam = np.linalg.lstsq(gram, gap, rcond=None)[0]
            y[free] = v[free] - G.T @ lam
        else:
            lam = np.zeros(0)
            rows = np.zeros((0, n))

        d = y - z
        if float(np.max(np.abs(d))) <= eps:
            # At the working-set minimizer; verify multiplier signs
            # (equality-pinned coordinates carry sign-free multipliers).
            g_full = z - v + (rows.T @ lam if pre_idx else 0.0)
            worst_kind, worst_idx, worst_val = None, -1, -eps
            for rank, j in enumerate(pre_idx):
                if lam[rank] < worst_val:
                    worst_kind, worst_idx, worst_val = "pre", j, lam[rank]
            for i in W_lo:
                if i not in equality_set and g_full[i] < worst_val:
                    worst_kind, worst_idx, worst_val = "lo", i, g_full[i]
            for i in W_up:
                if -g_full[i] < worst_val:
                    worst_kind, worst_idx, worst_val = "up", i, -g_full[i]
            if worst_kind is None:
                return z
            {"pre": W_pre, "lo": W_lo, "up": W_up}[worst_kind].discard(worst_idx)
            continue

        # Ratio test against constraints outside the working set.
        t = 1.0
        block = None
        slack = red.prefix_slack(z)
        cum_d = np.cumsum(d[1:])
        rate = cum_d - red.sigma * d[0]
        for j in range(red.m):
            if j in W_pre or rate[j] <= eps:
                continue
            tj = max(slack[j], 0.0) / rate[j]
            if tj < t:
                t, block = tj, ("pre", j)
        for i in range(n):
            if i in W_lo or i in W_up:
                continue
            if d[i] < -eps:
                ti = (red.lo[i] - z[i]) / d[i]
                if ti < t:
                    t, block = ti, ("lo", i)
            elif d[i] > eps and np.isfinite(red.ub[i]):
                ti = (red.ub[i] - z[i]) / d[i]
                if ti < t:
                    t, block = ti, ("up", i)
        z = z + max(t, 0.0) * d
        z = np.clip(z, red.lo, red.ub)
        if block is None:
            z = y
        else:
            kind, idx = block
            {"pre": W_pre, "lo": W_lo, "up": W_up}[kind].add(idx)
            # Bulk activation: everything tight at the new point is a valid
            # working-set member and saves one pivot each.
            tight = red.prefix_slack(z) <= eps
            W_pre.update(int(j) for j in np.flatnonzero(tight))
            W_lo.update(int(i) for i in np.flatnonzero((z - red.lo) <= eps)
                        if i not in W_up)
            W_up.update(int(i) for i in np.flatnonzero((red.ub - z) <= eps)
                        if i not in W_lo)
    raise SolverNotConvergedError("projection active-set sweep did not terminate")


def kkt_residual(k0: float, k, X: DemandSeries, costs: SingleUseCostModel,
                 active_tol: float = 1e-9, check_stockpile: bool = True) -> float:
    """Maximum KKT violation of the reduced program at (k0, k).

    Stationarity multipliers are recovered structurally: the sum of prefix
    multipliers from day t onward is a level that is constant between
    storage-empty days, non-increasing over time, fixed by free coordinates,
    and bounded by pinned ones. Violations of those requirements, primal
    feasibility (converted to gradient units via the largest curvature), and
    the K0 stationarity condition are combined into a single max. Exactly
    zero at an optimum with a cleanly identified active set. With
    check_stockpile=False the K0 condition is skipped (residual of the
    fixed-stockpile subproblem).
    """
    red = _Reduced(X, costs)
    k = np.asarray(k, dtype=float)
    x, w, C, S, m = red.x, red.w, red.C, red.S, red.m
    prefix = np.cumsum(k)
    storage = k0 + costs.a * red.days - prefix

    L = max(float(np.max(w)), 1.0)
    primal = max(0.0, -k0)
    primal = max(primal, float(np.max(np.maximum(-k, 0.0), initial=0.0)))
    primal = max(primal, float(np.max(np.maximum(k - x, 0.0), initial=0.0)))
    primal = max(primal, float(np.max(np.maximum(-storage, 0.0), initial=0.0)))
    viol = primal * L

    atol_k = active_tol * np.maximum(1.0, x)
    storage_unit = max(1.0, k0 + costs.a * m, float(np.max(x, initial=0.0)))
    active_pre = storage <= active_tol * storage_unit
    lo_pin = k <= atol_k
    up_pin = (x - k) <= atol_k
    immaterial = x <= atol_k            # k pinned at 0 == X: no requirement
    free = ~(lo_pin | up_pin | immaterial)
    target = C + w * (x - k)

    def segment_violation(idx: np.ndarray, level: float, may_rise: bool):
        f_idx = idx[free[idx]]
        lo_idx = idx[lo_pin[idx] & ~immaterial[idx]]
        up_idx = idx[up_pin[idx] & ~immaterial[idx]]
        floor = level
        if may_rise and lo_idx.size:
            floor = max(floor, float(np.max(target[lo_idx])))
        ceil = float(np.min(C[up_idx])) if up_idx.size else np.inf
        worst = 0.0
        if f_idx.size:
            lvl = float(np.median(target[f_idx]))
            lvl = max(lvl, floor) if may_rise else level
            worst = float(np.max(np.abs(target[f_idx] - lvl)))
        else:
            lvl = floor
        if not may_rise:
            lvl = level
            if lo_idx.size:
                worst = max(worst, float(np.max(target[lo_idx])) - level)
        worst = max(worst, 0.0, lvl - ceil)
        return max(worst, 0.0), lvl

    # Walk right to left: the multiplier level may only rise when crossing a
    # storage-empty day, and days after the last empty day carry level zero.
    active_days = np.flatnonzero(active_pre)
    level = 0.0
    hi = m - 1
    if active_days.size:
        tail = np.arange(active_days[-1] + 1, m)
        if tail.size:
            worst, _ = segment_violation(tail, 0.0, may_rise=False)
            viol = max(viol, worst)
        hi = active_days[-1]
        for i in range(active_days.size - 1, -1, -1):
            start = active_days[i - 1] + 1 if i > 0 else 0
            idx = np.arange(start, hi + 1)
            worst, level = segment_violation(idx, level, may_rise=True)
            viol = max(viol, worst)
            hi = start - 1
    else:
        worst, _ = segment_violation(np.arange(m), 0.0, may_rise=False)
        viol = max(viol, worst)
        level = 0.0

    if check_stockpile:
        k0_pinned = k0 <= active_tol * storage_unit
        if k0_pinned:
            viol = max(viol, max(0.0, level - S))
        else:
            viol = max(viol, abs(S - level))
    return viol


def _polish(red: _Reduced, z: np.ndarray, activity: float = 1e-9,
            rounds: int = 60):
    """Refine z by active-set equality solves of the QP.

    Starting from the constraints active at z (relative tolerance
    `activity`), repeatedly: solve the equality-constrained problem, pin
    newly violated bounds / add newly violated storage days, and release the
    working constraint with the most negative multiplier once feasible.
    Returns a feasible candidate or None; optimality is left to the caller's
    independent residual check.
    """
    n = red.m + 1
    tol_box = activity * np.maximum(1.0, np.abs(red.ub))
    slack = red.prefix_slack(z)
    tol_pre = activity * np.maximum(1.0, np.abs(red.b_pre) + red.sigma * max(z[0], 0.0))
    feas_box = 1e-9 * np.maximum(1.0, np.abs(red.ub))
    feas_pre = 1e-9 * np.maximum(1.0, np.abs(red.b_pre) + red.sigma * max(z[0], 0.0))

    lo_pin = (z - red.lo) <= tol_box
    up_pin = (red.ub - z) <= tol_box
    lo_pin &= ~up_pin
    pre_act = set(int(j) for j in np.flatnonzero(slack <= tol_pre))

    Pdiag = np.concatenate(([0.0], red.w))
    q = np.concatenate(([red.S * red.sigma], -red.w * red.x - red.C))
    grad_unit = max(1.0, float(np.max(np.abs(q))))

    seen = set()
    for _ in range(rounds):
        signature = (lo_pin.tobytes(), up_pin.tobytes(), tuple(sorted(pre_act)))
        if signature in seen:
            return None                      # active-set cycle; give up
        seen.add(signature)
        pinned = lo_pin | up_pin
        target = np.where(up_pin, red.ub, red.lo)
        free = ~pinned
        nf = int(np.sum(free))
        pre_idx = sorted(pre_act)
        rows = np.zeros((len(pre_idx), n))
        for r, j in enumerate(pre_idx):
            rows[r, 0] = -red.sigma
            rows[r, 1: j + 2] = 1.0
        G = rows[:, free]
        rhs_g = red.b_pre[pre_idx] - rows[:, pinned] @ target[pinned]

        kkt = np.zeros((nf + len(pre_idx), nf + len(pre_idx)))
        kkt[:nf, :nf] = np.diag(Pdiag[free])
        kkt[:nf, nf:] = G.T
        kkt[nf:, :nf] = G
        rhs = np.concatenate((-q[free], rhs_g))
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        nu = sol[nf:]
        cand = np.where(pinned, target, 0.0)
        cand[free] = sol[:nf]

        viol_lo = np.flatnonzero(cand < red.lo - feas_box)
        viol_up = np.flatnonzero(cand > red.ub + feas_box)
        pre_slack = red.prefix_slack(np.clip(cand, red.lo, red.ub))
        viol_pre = [int(j) for j in np.flatnonzero(pre_slack < -feas_pre)
                    if j not in pre_act]
        if viol_lo.size or viol_up.size or viol_pre:
            for i in viol_lo:
                lo_pin[i], up_pin[i] = True, False
            for i in viol_up:
                up_pin[i], lo_pin[i] = True, False
            pre_act.update(viol_pre)
            continue
        # A working row left unsatisfied means the pins conflict with it;
        # free the box pins inside the widest such row and try again.
        equality = red.ub <= red.lo
        bad_rows = [j for j in pre_idx if abs(pre_slack[j]) > feas_pre[j]]
        if bad_rows:
            span = max(bad_rows) + 2        # coords 1..j+1 plus the stockpile
            releasable = (lo_pin | up_pin) & ~equality
            releasable[span:] = False
            if not np.any(releasable):
                return None
            lo_pin &= ~releasable
            up_pin &= ~releasable
            continue

        # Feasible; release every working constraint with a negative
        # multiplier (bulk release -- the round cap guards against cycling).
        # Equality coordinates (lo == ub) carry sign-free multipliers.
        g_full = Pdiag * cand + q + (rows.T @ nu if pre_idx else 0.0)
        dual_tol = 1e-10 * grad_unit
        equality = red.ub <= red.lo
        released = False
        for r, j in enumerate(pre_idx):
            if nu[r] < -dual_tol:
                pre_act.discard(j)
                released = True
        bad_lo = np.flatnonzero(lo_pin & ~equality & (g_full < -dual_tol))
        bad_up = np.flatnonzero(up_pin & ~equality & (-g_full < -dual_tol))
        if bad_lo.size:
            lo_pin[bad_lo] = False
            released = True
        if bad_up.size:
            up_pin[bad_up] = False
            released = True
        if not released:
            cand[0] = min(max(cand[0], red.needed_u0(cand[1:]), 0.0), red.ub[0])
            return np.clip(cand, red.lo, red.ub)
    return None


def _fixed_stockpile_view(red: _Reduced, u0: float) -> _Reduced:
    """A copy of the reduced problem with the stockpile coordinate pinned."""
    view = _Reduced.__new__(_Reduced)
    view.__dict__.update(red.__dict__)
    view.lo = red.lo.copy()
    view.ub = red.ub.copy()
    view.lo[0] = u0
    view.ub[0] = u0
    return view


def _inner_solve(red: _Reduced, u0: float, k_init: np.ndarray, tol: float,
                 budget: int) -> tuple[np.ndarray, float, int]:
    """Distribution amounts minimizing cost at a fixed stockpile size.

    Projected-gradient sweeps with the stockpile coordinate pinned, polished
    by active-set solves; certification uses the residual with the stockpile
    stationarity condition switched off. Returns (k, objective, iterations).
    """
    view = _fixed_stockpile_view(red, u0)
    z = _project(view, np.concatenate(([u0], k_init)))
    f_cur = view.objective(z)
    alpha = 1.0 / float(np.max(view.w))
    spent = 0
    resid = kkt_residual(view.sigma * u0, z[1:], view.X_ref, view.costs_ref,
                         check_stockpile=False)
    feas = 1e-9 * np.maximum(1.0, np.abs(view.b_pre) + view.sigma * u0)
    while resid > tol and spent < budget:
        if spent % 10 == 0:
            cand = _polish(view, z)
            if cand is not None and np.all(view.prefix_slack(cand) >= -feas):
                f_cand = view.objective(cand)
                if f_cand <= f_cur + 1e-12 * max(1.0, abs(f_cur)):
                    r_cand = kkt_residual(view.sigma * u0, cand[1:], view.X_ref,
                                          view.costs_ref, check_stockpile=False)
                    if r_cand < resid:
                        z, f_cur, resid = cand, f_cand, r_cand
                        continue
        grad = view.gradient(z)
        grad[0] = 0.0
        step = alpha
        accepted = False
        for _ in range(60):
            try:
                z_try = _project(view, z - step * grad)
            except SolverNotConvergedError:
                step *= 0.5
                continue
            f_try = view.objective(z_try)
            if f_try <= f_cur + 1e-12 * max(1.0, abs(f_cur)):
                accepted = True
                break
            step *= 0.5
        spent += 1
        if not accepted or float(np.max(np.abs(z_try - z))) == 0.0:
            break
        z, f_cur = z_try, f_try
        resid = kkt_residual(view.sigma * u0, z[1:], view.X_ref, view.costs_ref,
                             check_stockpile=False)
    return z[1:], f_cur, spent + 1


def optimize_schedule(X: DemandSeries, costs: SingleUseCostModel,
                      tol_scale: float = 1e-6, max_iter: int = 100_000,
                      trace: list | None = None) -> DistributionSchedule:
    """Solve the reduced single-use program.

    The stockpile size enters the objective linearly, so it is minimized by
    a golden-section search over [0, largest useful stockpile]; each probe
    runs a monotone projected-gradient solve (exact active-set projection,
    diminishing-step fallback) over the distribution amounts. A final
    active-set polish snaps the joint point, and optimality is certified by
    an independent KKT residual at tolerance
    tol_scale * max(1, max_j omega_j theta+_j X_j). Raises
    SolverNotConvergedError (with the residual attained) if the iteration
    budget runs out first. The objective of accepted incumbents never
    increases; `trace`, when given, records it.
    """
    if len(X) != costs.m:
        raise ValueError(f"demand length {len(X)} != cost horizon {costs.m}")
    red = _Reduced(X, costs)
    red.X_ref = X
    red.costs_ref = costs
    if not np.any(red.w > 0):
        raise DegenerateCostsError("all omega*theta_plus weights are zero")
    tol = tol_scale * red.scale
    inner_tol = min(tol, 1e-9 * red.scale)

    best_z = None
    f_inc = np.inf
    best_resid = np.inf

    def consider(z):
        # Adopt z as incumbent when it is feasible and improves the
        # objective; track the best certified residual seen at or below the
        # incumbent objective.
        nonlocal best_z, f_inc, best_resid
        feas = 1e-9 * np.maximum(1.0, np.abs(red.b_pre) + red.sigma * max(z[0], 0.0))
        if (z[0] < -1e-12 or np.any(z[1:] < -1e-9 * np.maximum(1.0, red.x))
                or np.any(z[1:] > red.x + 1e-9 * np.maximum(1.0, red.x))
                or np.any(red.prefix_slack(z) < -feas)):
            return
        f_val = red.objective(z)
        if f_val > f_inc + 1e-12 * max(1.0, abs(f_inc)):
            return
        resid = kkt_residual(red.sigma * z[0], z[1:], X, costs)
        if f_val < f_inc:
            f_inc = f_val
            if trace is not None:
                trace.append(f_val)
        if resid < best_resid:
            best_resid, best_z = resid, z.copy()

    # Natural starts: no distribution, full coverage, greedy passthrough.
    z_zero = np.zeros(red.m + 1)
    z_full = np.concatenate(([red.ub[0]], red.x))
    z_pass = np.zeros(red.m + 1)
    held = 0.0
    for j in range(red.m):
        z_pass[j + 1] = min(red.x[j], held + costs.a)
        held = held + costs.a - z_pass[j + 1]
    for z0 in (z_zero, z_pass, z_full):
        consider(z0)

    budget = max_iter
    warm: list[tuple[float, np.ndarray]] = []

    def probe(u0: float) -> float:
        nonlocal budget
        if not warm:
            k_init = red.x.copy()
        else:
            k_init = min(warm, key=lambda t: abs(t[0] - u0))[1]
        k_sol, f_val, spent = _inner_solve(red, u0, k_init, inner_tol,
                                           min(budget, 4000))
        budget -= spent
        warm.append((u0, k_sol))
        if len(warm) > 6:
            warm.pop(0)
        consider(np.concatenate(([u0], k_sol)))
        return f_val

    if best_resid > tol and red.ub[0] > 0.0 and budget > 0:
        # Golden-section over the stockpile size (convex in u0).
        invphi = (np.sqrt(5.0) - 1.0) / 2.0
        a_br, b_br = 0.0, float(red.ub[0])
        x1 = b_br - invphi * (b_br - a_br)
        x2 = a_br + invphi * (b_br - a_br)
        f1, f2 = probe(x1), probe(x2)
        width_tol = 1e-12 * max(1.0, b_br)
        for _ in range(200):
            if best_resid <= tol or budget <= 0 or (b_br - a_br) <= width_tol:
                break
            if f1 <= f2:
                b_br, x2, f2 = x2, x1, f1
                x1 = b_br - invphi * (b_br - a_br)
                f1 = probe(x1)
            else:
                a_br, x1, f1 = x1, x2, f2
                x2 = a_br + invphi * (b_br - a_br)
                f2 = probe(x2)
        for u0_end in (a_br, b_br):
            if best_resid <= tol or budget <= 0:
                break
            probe(u0_end)

    # Joint polish from the incumbent, trying a few activity tolerances.
    if best_z is not None:
        for activity in (1e-9, 1e-7, 1e-5):
            if best_resid <= tol:
                break
            cand = _polish(red, best_z, activity=activity)
            if cand is not None:
                cand[0] = max(red.needed_u0(cand[1:]), red.lo[0])
                consider(cand)

    if best_resid > tol:
        raise SolverNotConvergedError(
            f"single-use solver stopped at residual {best_resid:.3g} "
            f"(tolerance {tol:.3g}) with {budget} iterations left of {max_iter}",
            residual=best_resid,
        )
    return _build_schedule(red, best_z, X, costs, best_resid)


def _build_schedule(red: _Reduced, z: np.ndarray, X: DemandSeries,
                    costs: SingleUseCostModel, resid: float) -> DistributionSchedule:
    k0 = red.sigma * z[0]
    k = np.clip(z[1:], 0.0, red.x)
    # Forward repair: never release more than is on hand, so the storage
    # recursion is exactly non-negative (trims at most roundoff amounts).
    storage = np.empty(red.m + 1)
    storage[0] = k0
    for j in range(red.m):
        k[j] = min(k[j], storage[j] + costs.a)
        storage[j + 1] = storage[j] + costs.a - k[j]
    resid = kkt_residual(k0, k, X, costs)
    schedule = DistributionSchedule(k0=k0, k=k, storage=storage,
                                    objective_value=0.0, kkt_residual=resid)
    value = singleuse_objective(schedule, X, costs)
    return DistributionSchedule(k0=k0, k=k, storage=storage,
                                objective_value=value, kkt_residual=resid)
