import numpy as np
import pytest

from conftest import random_singleuse_instance
from epiplan.demand import DemandSeries
from epiplan.errors import DegenerateCostsError, InconsistentStorageError
from epiplan.oracle import brute_force_schedule
from epiplan.stockpile_singleuse import (DistributionSchedule,
                                         SingleUseCostModel, kkt_residual,
                                         optimize_schedule,
                                         singleuse_objective,
                                         storage_trajectory)


def uniform_costs(m, a, theta_plus=2.0, c=0.0, c0=0.0):
    return SingleUseCostModel(m=m, a=a, omega=1.0, theta_plus=theta_plus,
                              theta_minus=theta_plus, c=c, c0=c0)


def schedule_from(k0, k, a, X):
    storage = storage_trajectory(k0, k, a, X)
    return DistributionSchedule(k0=k0, k=np.asarray(k, dtype=float),
                                storage=storage, objective_value=0.0,
                                kkt_residual=0.0)


def test_storage_recursion_with_give_back():
    X = DemandSeries(values=np.array([60.0, 20.0]))
    storage = storage_trajectory(100.0, [50.0, 30.0], 10.0, X)
    assert storage.tolist() == [100.0, 60.0, 50.0]


def test_storage_zero_schedule_reduces_to_supply_path():
    X = DemandSeries(values=np.array([5.0, 5.0, 5.0]))
    storage = storage_trajectory(7.0, [0.0, 0.0, 0.0], 2.0, X)
    assert storage.tolist() == [7.0, 9.0, 11.0, 13.0]


def test_storage_passthrough_stays_empty():
    X = DemandSeries(values=np.array([4.0, 4.0]))
    storage = storage_trajectory(0.0, [3.0, 3.0], 3.0, X)
    assert storage.tolist() == [0.0, 0.0, 0.0]


def test_objective_zero_when_matching_demand_free_storage():
    X = DemandSeries(values=np.array([2.0, 3.0]))
    sched = schedule_from(5.0, X.values.copy(), 0.0, X)
    assert singleuse_objective(sched, X, uniform_costs(2, a=0.0)) == 0.0


def test_objective_zero_schedule_is_weighted_squares():
    X = DemandSeries(values=np.array([3.0, 4.0]))
    sched = schedule_from(0.0, np.zeros(2), 0.0, X)
    assert singleuse_objective(sched, X, uniform_costs(2, a=0.0)) == pytest.approx(25.0)


def test_objective_initial_cost_is_linear():
    X = DemandSeries(values=np.array([3.0, 4.0]))
    base = uniform_costs(2, a=5.0)
    plus = SingleUseCostModel(m=2, a=5.0, omega=1.0, theta_plus=2.0,
                              theta_minus=2.0, c=0.0, c0=1.0)
    for k0 in (0.0, 2.5, 9.0):
        sched = schedule_from(k0, np.array([1.0, 2.0]), 5.0, X)
        assert singleuse_objective(sched, X, plus) == pytest.approx(
            singleuse_objective(sched, X, base) + k0)


def test_inconsistent_storage_rejected():
    X = DemandSeries(values=np.array([3.0, 4.0]))
    storage = storage_trajectory(1.0, [1.0, 1.0], 2.0, X)
    storage[2] += 0.5
    sched = DistributionSchedule(k0=1.0, k=np.array([1.0, 1.0]), storage=storage,
                                 objective_value=0.0, kkt_residual=0.0)
    with pytest.raises(InconsistentStorageError):
        singleuse_objective(sched, X, uniform_costs(2, a=2.0))


def test_optimizer_matches_demand_with_ample_supply_and_free_storage():
    X = DemandSeries(values=np.array([4.0, 7.0, 2.0, 6.0]))
    sched = optimize_schedule(X, uniform_costs(4, a=8.0))
    assert np.max(np.abs(sched.k - X.values)) < 1e-6
    assert sched.objective_value < 1e-10


def test_optimizer_zero_demand_returns_zero_plan():
    X = DemandSeries(values=np.zeros(3))
    sched = optimize_schedule(X, uniform_costs(3, a=1.0, c=0.1, c0=0.2))
    assert sched.k0 == 0.0
    assert np.all(sched.k == 0.0)


def test_optimizer_spec_instance_matches_reference():
    X = DemandSeries(values=np.array([0.0, 10.0, 10.0, 0.0]))
    costs = SingleUseCostModel(m=4, a=4.0, omega=1.0, theta_plus=2.0,
                               theta_minus=2.0, c=0.1, c0=0.2)
    got = optimize_schedule(X, costs)
    ref = brute_force_schedule(X, costs)
    assert abs(got.k0 - ref.k0) < 1e-3
    assert np.max(np.abs(got.k - ref.k)) < 1e-3


def test_optimizer_feasibility_and_residual_on_random_instances():
    rng = np.random.default_rng(21)
    for _ in range(60):
        X, costs = random_singleuse_instance(rng)
        sched = optimize_schedule(X, costs)
        assert np.all(sched.k >= 0.0)
        assert np.all(sched.k <= X.values + 1e-9 * np.maximum(1.0, X.values))
        assert np.all(sched.storage >= -1e-9)
        recursion = sched.storage[:-1] + costs.a - sched.k
        assert np.max(np.abs(sched.storage[1:] - recursion)) <= 1e-9
        scale = max(1.0, float(np.max(costs.omega * costs.theta_plus * X.values)))
        assert sched.kkt_residual <= 1e-6 * scale


def test_optimizer_agrees_with_oracle():
    rng = np.random.default_rng(22)
    for _ in range(50):
        X, costs = random_singleuse_instance(rng)
        got = optimize_schedule(X, costs)
        ref = brute_force_schedule(X, costs)
        denom = max(1.0, abs(ref.objective_value))
        assert abs(got.objective_value - ref.objective_value) / denom <= 1e-6


def test_no_oversupply_is_ever_better():
    rng = np.random.default_rng(23)
    for _ in range(25):
        X, costs = random_singleuse_instance(rng)
        if np.all(X.values == 0.0):
            continue
        sched = optimize_schedule(X, costs)
        base = sched.objective_value
        for j in range(costs.m):
            bumped = sched.k.copy()
            bumped[j] = X.values[j] + rng.uniform(0.1, 1.0)
            storage = storage_trajectory(sched.k0, bumped, costs.a, X)
            if np.any(storage < 0.0):
                continue
            alt = DistributionSchedule(k0=sched.k0, k=bumped, storage=storage,
                                       objective_value=0.0, kkt_residual=0.0)
            value = singleuse_objective(alt, X, costs)
            assert value >= base - 1e-9 * max(1.0, abs(base))


def test_objective_trace_is_monotone():
    X = DemandSeries(values=np.array([2.0, 9.0, 4.0, 1.0, 6.0]))
    costs = SingleUseCostModel(m=5, a=2.0, omega=1.0, theta_plus=1.5,
                               theta_minus=1.5, c=0.2, c0=0.7)
    trace = []
    optimize_schedule(X, costs, trace=trace)
    assert len(trace) >= 1
    for earlier, later in zip(trace, trace[1:]):
        assert later <= earlier + 1e-12 * max(1.0, abs(earlier))


def test_zero_possession_limit_returns_demand():
    rng = np.random.default_rng(24)
    x = rng.uniform(0.0, 5.0, 8)
    X = DemandSeries(values=x)
    costs = SingleUseCostModel(m=8, a=6.0, omega=1.0, theta_plus=2.0,
                               theta_minus=2.0, c=1e-8, c0=1e-8)
    sched = optimize_schedule(X, costs)
    assert np.max(np.abs(sched.k - x)) < 1e-4


def test_determinism():
    X = DemandSeries(values=np.array([1.0, 5.0, 3.0]))
    costs = SingleUseCostModel(m=3, a=1.5, omega=1.0, theta_plus=2.0,
                               theta_minus=2.0, c=0.05, c0=0.3)
    a = optimize_schedule(X, costs)
    b = optimize_schedule(X, costs)
    assert a.k0 == b.k0 and np.array_equal(a.k, b.k)


def test_all_zero_shortage_weights_rejected():
    X = DemandSeries(values=np.array([1.0, 2.0]))
    costs = SingleUseCostModel(m=2, a=1.0, omega=1.0, theta_plus=0.0,
                               theta_minus=1.0, c=0.1, c0=0.0)
    with pytest.raises(DegenerateCostsError):
        optimize_schedule(X, costs)


def test_residual_positive_at_suboptimal_point():
    X = DemandSeries(values=np.array([4.0, 4.0]))
    costs = uniform_costs(2, a=5.0)
    # Optimal point is k = X; half coverage is clearly not stationary.
    assert kkt_residual(0.0, np.array([2.0, 2.0]), X, costs) > 0.1


def test_scipy_cross_check_medium_instance():
    scipy_opt = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(25)
    m = 30
    x = rng.uniform(0.0, 50.0, m)
    costs = SingleUseCostModel(m=m, a=8.0, omega=rng.uniform(0.3, 2.0, m),
                               theta_plus=rng.uniform(0.3, 2.0, m),
                               theta_minus=1.0, c=rng.uniform(0.0, 0.2, m),
                               c0=0.4)
    X = DemandSeries(values=x)
    got = optimize_schedule(X, costs)

    w = costs.omega * costs.theta_plus
    oc = costs.omega * costs.c
    C = np.cumsum(oc[::-1])[::-1]
    S = float(np.sum(oc) + costs.c0)
    b = costs.a * np.arange(1, m + 1.0)
    const = float(costs.a * np.sum(oc * np.arange(1, m + 1.0)))

    def objective(z):
        return 0.5 * np.sum(w * (x - z[1:]) ** 2) - np.sum(C * z[1:]) + S * z[0] + const

    def gradient(z):
        g = np.empty(m + 1)
        g[0] = S
        g[1:] = w * (z[1:] - x) - C
        return g

    A = np.zeros((m, m + 1))
    A[:, 0] = -1.0
    for j in range(m):
        A[j, 1: j + 2] = 1.0
    res = scipy_opt.minimize(
        objective, np.zeros(m + 1), jac=gradient,
        bounds=[(0, None)] + [(0, float(v)) for v in x],
        constraints=[scipy_opt.LinearConstraint(A, -np.inf, b)],
        method="SLSQP", options={"maxiter": 500, "ftol": 1e-12})
    assert abs(got.objective_value - res.fun) <= 1e-6 * max(1.0, abs(res.fun))
