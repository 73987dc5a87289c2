import numpy as np
import pytest
from importlib import resources

from epiplan.demand import DemandSeries
from epiplan.stockpile_durable import DurableCostModel
from epiplan.stockpile_singleuse import SingleUseCostModel


@pytest.fixture(scope="session")
def three_state_path():
    return str(resources.files("epiplan").joinpath("data/three_state.scn"))


ZERO_SCENARIO = """\
schema: epiplan-scenario-v1
horizon_days: 12
substeps: 4
demand_assessment:
  ventilator_icu_fraction: 0.9
  ppe_per_exposed: 5.0
  ppe_per_hospitalized_day: 15.0
  ppe_per_icu_day: 20.0
regions:
  - label: only
    population: 1000000.0
    rates: {beta1: 0.0, beta2: 0.0, beta3: 0.0, gamma: 0.2, delta1: 0.1,
            delta2: 0.1, delta3: 0.1, p1: 0.02, p2: 0.03, mu: 0.01}
    initial: {S: 1000000.0, E: 0.0, I1: 0.0, I2: 0.0, I3: 0.0, R: 0.0, D: 0.0}
durable:
  production_per_day: 0.0
  possession_cost_per_unit_day: 0.0
  initial_cost_per_unit: 0.0
  shortage_cost: 2.0
  surplus_cost: 2.0
  weight_rule: uniform
  cost_basis: per_unit
singleuse:
  production_per_day: 0.0
  possession_cost_per_unit_day: 0.0
  initial_cost_per_unit: 0.0
  shortage_cost: 2.0
  surplus_cost: 2.0
  weight_rule: uniform
  cost_basis: per_unit
allocation:
  shortage_cost: 1.0
  surplus_cost: 1.0
  weight_rule: uniform
"""


@pytest.fixture()
def zero_scenario_text():
    return ZERO_SCENARIO


def random_durable_instance(rng, m_max=30, x_scale=5.0):
    m = int(rng.integers(1, m_max + 1))
    X = DemandSeries(values=rng.uniform(0.0, x_scale, m))
    costs = DurableCostModel(
        m=m, a=float(rng.uniform(0.0, 0.3)),
        omega=rng.uniform(0.1, 2.0, m),
        theta_plus=rng.uniform(0.1, 3.0, m),
        theta_minus=rng.uniform(0.1, 3.0, m),
        c=rng.uniform(0.0, 0.5, m),
        c0=float(rng.uniform(0.0, 2.0)),
    )
    return X, costs


def random_singleuse_instance(rng, m_max=6):
    m = int(rng.integers(1, m_max + 1))
    x = rng.uniform(0.0, 8.0, m)
    if rng.random() < 0.2:
        x[rng.integers(0, m)] = 0.0
    X = DemandSeries(values=x)
    costs = SingleUseCostModel(
        m=m, a=float(rng.uniform(0.0, 4.0)),
        omega=rng.uniform(0.2, 2.0, m),
        theta_plus=rng.uniform(0.2, 3.0, m),
        theta_minus=rng.uniform(0.2, 3.0, m),
        c=rng.uniform(0.0, 0.8, m),
        c0=float(rng.uniform(0.0, 1.5)),
    )
    return X, costs
