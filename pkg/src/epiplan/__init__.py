"""Pandemic resource planning: forecast demand, size stockpiles, allocate supply.

Three stages, usable separately or chained by the pipeline module:

1. epidemic / demand — compartment-model simulation and per-region daily
   resource demand series.
2. stockpile_durable / stockpile_singleuse — optimal initial stockpile for
   reusable equipment (closed form) and an optimal stockpile-plus-release
   schedule for consumables (convex program).
3. allocation — per-period split of the available supply across regions
   under surplus or shortage.
"""

from .allocation import (AllocationPlan, PeriodAllocation, RegionalPeriodDemand,
                         allocate_horizon, allocate_period, harmonic_weights)
from .demand import (DemandAssessment, DemandSeries, aggregate, ppe_demand,
                     ventilator_demand)
from .epidemic import (CompartmentState, EpidemicParams, Trajectory, r0,
                       simulate, step)
from .stockpile_durable import (DurableCostModel, StockpileResult,
                                durable_objective, optimal_initial_stockpile,
                                projected_shortage, supply_path)
from .stockpile_singleuse import (DistributionSchedule, SingleUseCostModel,
                                  optimize_schedule, singleuse_objective,
                                  storage_trajectory)

__version__ = "0.1.0"

__all__ = [
    "AllocationPlan", "CompartmentState", "DemandAssessment", "DemandSeries",
    "DistributionSchedule", "DurableCostModel", "EpidemicParams",
    "PeriodAllocation", "RegionalPeriodDemand", "SingleUseCostModel",
    "StockpileResult", "Trajectory", "aggregate", "allocate_horizon",
    "allocate_period", "durable_objective", "harmonic_weights",
    "optimal_initial_stockpile", "optimize_schedule", "ppe_demand",
    "projected_shortage", "r0", "simulate", "singleuse_objective", "step",
    "storage_trajectory", "supply_path", "ventilator_demand", "__version__",
]
