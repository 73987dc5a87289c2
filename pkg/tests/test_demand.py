import numpy as np
import pytest

from epiplan.demand import (DemandAssessment, DemandSeries, aggregate,
                            ppe_demand, ventilator_demand)
from epiplan.epidemic import CompartmentState, EpidemicParams, Trajectory, simulate
from epiplan.errors import LengthMismatchError


def make_trajectory(rows):
    """Build a Trajectory from (S, E, I1, I2, I3, R, D) tuples."""
    states = tuple(CompartmentState(*row) for row in rows)
    N = states[0].total()
    params = EpidemicParams(beta1=0, beta2=0, beta3=0, gamma=0, delta1=0,
                            delta2=0, delta3=0, p1=0, p2=0, mu=0, N=N)
    return Trajectory(states=states, params=params)


ASSESS = DemandAssessment(alpha=0.9, theta_e=5.0, theta_i2=15.0, theta_i3=20.0)


def test_ventilator_fraction_of_icu():
    traj = make_trajectory([(800, 0, 0, 0, 100, 100, 0),
                            (800, 0, 0, 0, 100, 100, 0)])
    series = ventilator_demand(traj, ASSESS)
    assert series.values.tolist() == [90.0]


def test_ventilator_zero_alpha():
    traj = make_trajectory([(800, 0, 0, 0, 100, 100, 0)] * 4)
    assess = DemandAssessment(alpha=0.0, theta_e=1, theta_i2=1, theta_i3=1)
    assert np.all(ventilator_demand(traj, assess).values == 0.0)


def test_ventilator_alpha_one_is_identity():
    rows = [(900, 0, 0, 0, 10 * j, 100 - 10 * j, 0) for j in range(5)]
    traj = make_trajectory([(r[0], r[1], r[2], r[3], r[4], 100 - r[4], 0) for r in rows])
    assess = DemandAssessment(alpha=1.0, theta_e=0, theta_i2=0, theta_i3=0)
    series = ventilator_demand(traj, assess)
    assert np.array_equal(series.values, traj.column("I3")[1:])


def test_ventilator_time_varying_alpha():
    traj = make_trajectory([(800, 0, 0, 0, 100, 100, 0)] * 3)
    series = ventilator_demand(traj, ASSESS, alpha_by_day=[0.5, 1.0])
    assert series.values.tolist() == [50.0, 100.0]


def test_ppe_hand_value():
    # S drops by 10; I2=2, I3=1 => 5*10 + 15*2 + 20*1 = 100
    traj = make_trajectory([(100, 0, 0, 2, 1, 0, 0),
                            (90, 10, 0, 2, 1, 0, 0)])
    series = ppe_demand(traj, ASSESS)
    assert series.values.tolist() == [100.0]


def test_ppe_zero_dynamics_zero_series():
    traj = make_trajectory([(100, 0, 0, 0, 0, 0, 0)] * 6)
    assert np.all(ppe_demand(traj, ASSESS).values == 0.0)


def test_ppe_zero_factors_zero_series():
    traj = make_trajectory([(100, 0, 0, 2, 1, 0, 0), (90, 10, 0, 2, 1, 0, 0)])
    assess = DemandAssessment(alpha=0.5, theta_e=0, theta_i2=0, theta_i3=0)
    assert np.all(ppe_demand(traj, assess).values == 0.0)


def test_linearity_in_assessment_factors():
    traj = make_trajectory([(100, 0, 0, 2, 1, 0, 0), (90, 5, 2, 4, 2, 2, 0)])
    one = ppe_demand(traj, DemandAssessment(alpha=0, theta_e=1, theta_i2=0, theta_i3=0)).values
    two = ppe_demand(traj, DemandAssessment(alpha=0, theta_e=0, theta_i2=1, theta_i3=0)).values
    three = ppe_demand(traj, DemandAssessment(alpha=0, theta_e=0, theta_i2=0, theta_i3=1)).values
    combined = ppe_demand(traj, ASSESS).values
    assert np.allclose(combined, 5 * one + 15 * two + 20 * three)
    v1 = ventilator_demand(traj, DemandAssessment(alpha=0.3, theta_e=0, theta_i2=0, theta_i3=0)).values
    v2 = ventilator_demand(traj, DemandAssessment(alpha=0.6, theta_e=0, theta_i2=0, theta_i3=0)).values
    assert np.allclose(2 * v1, v2)


def test_outputs_nonnegative_on_simulated_trajectory():
    params = EpidemicParams(beta1=2.5e-7, beta2=2e-8, beta3=1e-8, gamma=0.3,
                            delta1=0.2, delta2=0.12, delta3=0.08, p1=0.03,
                            p2=0.04, mu=0.03, N=1e6)
    init = CompartmentState(S=1e6 - 500, E=500, I1=0, I2=0, I3=0, R=0, D=0)
    traj = simulate(init, params, m=120)
    assert np.all(ventilator_demand(traj, ASSESS).values >= 0)
    assert np.all(ppe_demand(traj, ASSESS).values >= 0)


def test_aggregate_single_region_identity():
    series = DemandSeries(values=np.array([1.0, 2.0]), region="a")
    out = aggregate([series])
    assert np.array_equal(out.values, series.values)


def test_aggregate_elementwise_sum():
    a = DemandSeries(values=np.array([1.0, 2.0, 3.0]), region="a")
    b = DemandSeries(values=np.array([4.0, 5.0, 6.0]), region="b")
    assert aggregate([a, b]).values.tolist() == [5.0, 7.0, 9.0]


def test_aggregate_linearity_in_copies():
    series = DemandSeries(values=np.array([2.0, 0.5, 7.0]), region="a")
    out = aggregate([series] * 4)
    assert np.allclose(out.values, 4 * series.values)


def test_aggregate_commutative():
    rng = np.random.default_rng(5)
    series = [DemandSeries(values=rng.uniform(0, 10, 8), region=str(i))
              for i in range(5)]
    forward = aggregate(series).values
    perm = aggregate([series[i] for i in (3, 0, 4, 1, 2)]).values
    assert np.array_equal(forward, perm)


def test_aggregate_length_mismatch():
    a = DemandSeries(values=np.array([1.0, 2.0]), region="a")
    b = DemandSeries(values=np.array([1.0]), region="b")
    with pytest.raises(LengthMismatchError):
        aggregate([a, b])


def test_aggregate_empty_list_rejected():
    with pytest.raises(ValueError):
        aggregate([])


def test_assessment_validation():
    with pytest.raises(ValueError):
        DemandAssessment(alpha=1.5, theta_e=1, theta_i2=1, theta_i3=1)
    with pytest.raises(ValueError):
        DemandAssessment(alpha=0.5, theta_e=-1, theta_i2=1, theta_i3=1)
