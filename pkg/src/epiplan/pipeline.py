"""End-to-end runs: simulate, forecast demand, plan stockpiles, allocate.

The pipeline chains the three planning stages for both resource classes of
a scenario and collects diagnostics (branch labels, frugality indices, KKT
residuals). Region simulations and allocation horizons run in a small
thread pool; results are deterministic regardless of scheduling because
every task is a pure function collected by index.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .allocation import AllocationPlan, allocate_horizon
from .demand import DemandSeries, aggregate, ppe_demand, ventilator_demand
from .epidemic import Trajectory, simulate
from .scenario import (ResourceConfig, Scenario, allocation_weights,
                       stockpile_weights)
from .stockpile_durable import (DurableCostModel, StockpileResult,
                                optimal_initial_stockpile, supply_path)
from .stockpile_singleuse import (DistributionSchedule, SingleUseCostModel,
                                  optimize_schedule)

RESOURCES = ("durable", "singleuse")


@dataclass(frozen=True)
class ResourceOutcome:
    """Stage II + III results for one resource class."""

    regional_demand: tuple          # one DemandSeries per region
    aggregate_demand: DemandSeries
    supply: np.ndarray              # per-day system supply handed to Pillar III
    plan: AllocationPlan
    stockpile: StockpileResult | None = None
    schedule: DistributionSchedule | None = None


@dataclass(frozen=True)
class PipelineResult:
    scenario: Scenario
    trajectories: dict              # label -> Trajectory
    outcomes: dict                  # resource name -> ResourceOutcome

    def diagnostics(self) -> dict:
        """Machine-readable run summary (stable key order)."""
        out = {"tool_version": __version__,
               "horizon_days": self.scenario.horizon_days,
               "regions": list(self.scenario.labels)}
        for name, outcome in sorted(self.outcomes.items()):
            entry = {
                "max_allocation_kkt_residual": float(np.max(outcome.plan.residuals)),
                "shortage_days": sum(1 for b in outcome.plan.branches if b == "shortage"),
                "surplus_days": sum(1 for b in outcome.plan.branches if b == "surplus"),
            }
            if outcome.stockpile is not None:
                entry["k0"] = outcome.stockpile.k0
                entry["pivot_rank"] = outcome.stockpile.j_index
                entry["objective"] = outcome.stockpile.objective_value
            if outcome.schedule is not None:
                entry["k0"] = outcome.schedule.k0
                entry["objective"] = outcome.schedule.objective_value
                entry["solver_kkt_residual"] = outcome.schedule.kkt_residual
            out[name] = entry
        return out


def _simulate_regions(scenario: Scenario, substeps: int, workers: int) -> dict:
    def run_one(region):
        return simulate(region.initial, region.params, scenario.horizon_days,
                        substeps=substeps)

    if workers > 1 and len(scenario.regions) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trajectories = list(pool.map(run_one, scenario.regions))
    else:
        trajectories = [run_one(r) for r in scenario.regions]
    return {r.label: t for r, t in zip(scenario.regions, trajectories)}


def _demand_series(scenario: Scenario, trajectories: dict, resource: str):
    series = []
    for region in scenario.regions:
        traj = trajectories[region.label]
        if resource == "durable":
            series.append(ventilator_demand(traj, scenario.assessment,
                                            region=region.label))
        else:
            series.append(ppe_demand(traj, scenario.assessment,
                                     region=region.label))
    return tuple(series)


def _plan_resource(scenario: Scenario, resource: str, regional, agg) -> ResourceOutcome:
    config: ResourceConfig = getattr(scenario, resource)
    m = scenario.horizon_days
    omega = stockpile_weights(agg.values, config.weight_rule)
    stockpile = None
    schedule = None
    if resource == "durable":
        costs = DurableCostModel(m=m, a=config.production_per_day, omega=omega,
                                 theta_plus=config.shortage_cost,
                                 theta_minus=config.surplus_cost,
                                 c=config.possession_cost_per_unit_day,
                                 c0=config.initial_cost_per_unit)
        stockpile = optimal_initial_stockpile(agg, costs)
        supply = supply_path(stockpile.k0, config.production_per_day, m)
    else:
        costs = SingleUseCostModel(m=m, a=config.production_per_day, omega=omega,
                                   theta_plus=config.shortage_cost,
                                   theta_minus=config.surplus_cost,
                                   c=config.possession_cost_per_unit_day,
                                   c0=config.initial_cost_per_unit)
        schedule = optimize_schedule(agg, costs)
        supply = schedule.k

    x_matrix = np.column_stack([s.values for s in regional])
    alloc_omega = allocation_weights(x_matrix, scenario.allocation.weight_rule)
    plan = allocate_horizon(list(regional),
                            omega=alloc_omega,
                            theta_plus=np.full(len(regional), scenario.allocation.shortage_cost),
                            theta_minus=np.full(len(regional), scenario.allocation.surplus_cost),
                            supply=supply)
    return ResourceOutcome(regional_demand=regional, aggregate_demand=agg,
                           supply=supply, plan=plan, stockpile=stockpile,
                           schedule=schedule)


def run_pipeline(scenario: Scenario, resource: str = "all",
                 substeps: int | None = None, workers: int = 4) -> PipelineResult:
    """Execute demand forecasting, stockpiling, and allocation.

    resource selects which resource classes to plan ("durable", "singleuse",
    or "all"). substeps overrides the scenario's integrator setting.
    """
    if resource not in RESOURCES and resource != "all":
        raise ValueError(f"resource must be one of {RESOURCES + ('all',)}, got {resource!r}")
    chosen = RESOURCES if resource == "all" else (resource,)
    steps = substeps if substeps is not None else scenario.substeps
    trajectories = _simulate_regions(scenario, steps, workers)
    outcomes = {}
    for name in chosen:
        regional = _demand_series(scenario, trajectories, name)
        agg = aggregate(list(regional))
        outcomes[name] = _plan_resource(scenario, name, regional, agg)
    return PipelineResult(scenario=scenario, trajectories=trajectories,
                          outcomes=outcomes)


# ----------------------------------------------------------------------
# Export: bit-stable CSV files plus a JSON run summary.
# ----------------------------------------------------------------------

def _fmt(value) -> str:
    # repr of a float is its shortest round-trip decimal form.
    return repr(float(value))


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else _fmt(cell)
                              for cell in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


ALL_SECTIONS = ("trajectories", "demand", "supply", "allocation", "summary")


def export(result: PipelineResult, outdir, include=ALL_SECTIONS) -> list:
    """Write trajectories, demand, supply, and allocation tables plus
    summary.json into outdir; returns the file names written. `include`
    restricts which sections are written."""
    import os

    os.makedirs(outdir, exist_ok=True)
    written = []

    if "trajectories" in include:
        for label, traj in result.trajectories.items():
            name = f"trajectory_{label}.csv"
            rows = [(str(day), s.S, s.E, s.I1, s.I2, s.I3, s.R, s.D)
                    for day, s in enumerate(traj.states)]
            _write_csv(os.path.join(outdir, name),
                       ("day", "S", "E", "I1", "I2", "I3", "R", "D"), rows)
            written.append(name)

    for res_name, outcome in sorted(result.outcomes.items()):
        if "demand" in include:
            for series in outcome.regional_demand:
                name = f"demand_{res_name}_{series.region}.csv"
                rows = [(str(j + 1), v) for j, v in enumerate(series.values)]
                _write_csv(os.path.join(outdir, name), ("day", "demand"), rows)
                written.append(name)
        if "supply" in include:
            name = f"supply_{res_name}.csv"
            rows = [(str(j + 1), v) for j, v in enumerate(outcome.supply)]
            _write_csv(os.path.join(outdir, name), ("day", "supply"), rows)
            written.append(name)
        if "allocation" in include:
            name = f"allocation_{res_name}.csv"
            plan = outcome.plan
            rows = []
            for j in range(plan.allocations.shape[0]):
                frug = plan.frugality[j]
                for i, region in enumerate(plan.regions):
                    rows.append((str(j + 1), region, plan.allocations[j, i],
                                 outcome.regional_demand[i].values[j],
                                 plan.branches[j],
                                 "" if frug is None else str(frug)))
            _write_csv(os.path.join(outdir, name),
                       ("day", "region", "allocated", "demand", "branch",
                        "frugality_index"), rows)
            written.append(name)

    if "summary" in include:
        summary_path = os.path.join(outdir, "summary.json")
        with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(result.diagnostics(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append("summary.json")
    return written
