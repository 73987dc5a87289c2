import numpy as np
import pytest

from conftest import random_durable_instance
from epiplan.demand import DemandSeries
from epiplan.errors import DegenerateCostsError
from epiplan.oracle import grid_search_k0
from epiplan.stockpile_durable import (DurableCostModel, durable_objective,
                                       optimal_initial_stockpile,
                                       projected_shortage, supply_path)


def uniform_costs(m, a=10.0, theta_plus=2.0, theta_minus=2.0, c=0.0, c0=0.0):
    return DurableCostModel(m=m, a=a, omega=1.0, theta_plus=theta_plus,
                            theta_minus=theta_minus, c=c, c0=c0)


TWO_DAY = DemandSeries(values=np.array([100.0, 50.0]))


def test_projected_shortage_arithmetic():
    assert projected_shortage(TWO_DAY, 10.0).tolist() == [90.0, 30.0]


def test_projected_shortage_zero_production_identity():
    assert np.array_equal(projected_shortage(TWO_DAY, 0.0), TWO_DAY.values)


def test_projected_shortage_matching_production_is_zero():
    X = DemandSeries(values=np.array([3.0, 6.0, 9.0]))
    assert np.allclose(projected_shortage(X, 3.0), 0.0)


def test_supply_path_values():
    assert supply_path(0.0, 10.0, 3).tolist() == [10.0, 20.0, 30.0]
    assert np.all(supply_path(7.0, 0.0, 5) == 7.0)


def test_supply_path_production_accumulates():
    path = supply_path(123.0, 10.0, 250)
    assert path[-1] == 123.0 + 2500.0


def test_objective_hand_value():
    # Y = [90, 30]; k0 = 60 sits symmetric: 2/2*30^2 twice = 1800
    assert durable_objective(60.0, TWO_DAY, uniform_costs(2)) == pytest.approx(1800.0)


def test_objective_zero_when_supply_matches_demand():
    X = DemandSeries(values=np.array([15.0, 25.0, 35.0]))
    costs = uniform_costs(3, a=10.0)
    assert durable_objective(5.0, X, costs) == 0.0


def test_objective_initial_cost_is_linear():
    base = uniform_costs(2)
    with_c0 = DurableCostModel(m=2, a=10.0, omega=1.0, theta_plus=2.0,
                               theta_minus=2.0, c=0.0, c0=1.0)
    for k0 in (0.0, 17.5, 60.0):
        assert durable_objective(k0, TWO_DAY, with_c0) == pytest.approx(
            durable_objective(k0, TWO_DAY, base) + k0)


def test_optimum_symmetric_two_point():
    result = optimal_initial_stockpile(TWO_DAY, uniform_costs(2))
    assert result.k0 == pytest.approx(60.0)
    assert result.objective_value == pytest.approx(1800.0)


def test_optimum_huge_initial_cost_clamps_to_zero():
    costs = DurableCostModel(m=2, a=10.0, omega=1.0, theta_plus=2.0,
                             theta_minus=2.0, c=0.0, c0=1e9)
    result = optimal_initial_stockpile(TWO_DAY, costs)
    assert result.k0 == 0.0


def test_degenerate_costs_rejected():
    costs = DurableCostModel(m=2, a=1.0, omega=0.0, theta_plus=1.0,
                             theta_minus=1.0, c=0.0, c0=0.0)
    with pytest.raises(DegenerateCostsError):
        optimal_initial_stockpile(TWO_DAY, costs)


def test_optimum_matches_grid_oracle_small_instances():
    rng = np.random.default_rng(7)
    step = 1e-3
    for _ in range(40):
        X, costs = random_durable_instance(rng, m_max=5)
        result = optimal_initial_stockpile(X, costs)
        hi = float(max(np.max(projected_shortage(X, costs.a)), result.k0)) + 0.5
        grid = grid_search_k0(X, costs, 0.0, max(hi, step), step)
        assert abs(result.k0 - grid) <= 2 * step


def test_optimum_beats_perturbations():
    rng = np.random.default_rng(8)
    for _ in range(150):
        X, costs = random_durable_instance(rng, m_max=20)
        result = optimal_initial_stockpile(X, costs)
        base = durable_objective(result.k0, X, costs)
        scale = max(1.0, result.k0)
        for eps in (1e-6 * scale, 1e-3 * scale, 1.0 * scale):
            up = durable_objective(result.k0 + eps, X, costs)
            assert base <= up + 1e-12 * max(1.0, abs(base))
            down = result.k0 - eps
            if down >= 0.0:
                assert base <= durable_objective(down, X, costs) + 1e-12 * max(1.0, abs(base))


def test_pivot_brackets_unclamped_optimum():
    rng = np.random.default_rng(9)
    for _ in range(200):
        X, costs = random_durable_instance(rng, m_max=12)
        result = optimal_initial_stockpile(X, costs)
        Y = np.sort(projected_shortage(X, costs.a), kind="stable")
        J = result.j_index
        lower = -np.inf if J == 1 else Y[J - 2]
        slack = 1e-9 * max(1.0, abs(result.k0))
        if result.k0 > 0.0:  # unclamped: bracket must hold
            assert lower - slack <= result.k0 <= Y[J - 1] + slack


def test_tie_robustness_duplicate_shortages():
    # Equal projected shortages on every day: any pivot gives the same k0.
    X = DemandSeries(values=np.array([12.0, 22.0, 32.0, 42.0]))
    costs = DurableCostModel(m=4, a=10.0, omega=1.0, theta_plus=3.0,
                             theta_minus=1.0, c=0.1, c0=0.5)
    result = optimal_initial_stockpile(X, costs)  # asserts internally on ties
    best = durable_objective(result.k0, X, costs)
    for k0 in (result.k0 * (1 + 1e-7) + 1e-9, max(result.k0 * (1 - 1e-7) - 1e-9, 0.0)):
        assert best <= durable_objective(k0, X, costs) * (1 + 1e-12)


def test_asymmetric_shortage_cost_raises_stockpile():
    rng = np.random.default_rng(10)
    values = np.concatenate((rng.uniform(20, 40, 10), rng.uniform(0, 5, 20)))
    X = DemandSeries(values=values)
    sym = optimal_initial_stockpile(X, uniform_costs(30, a=0.5, theta_plus=1000.0,
                                                     theta_minus=1000.0))
    asym = optimal_initial_stockpile(X, uniform_costs(30, a=0.5, theta_plus=1000.0,
                                                      theta_minus=20.0))
    assert asym.k0 > sym.k0


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        optimal_initial_stockpile(TWO_DAY, uniform_costs(3))
