"""Batch command-line front end.

Subcommands run a scenario file through part or all of the planning
pipeline and write bit-stable CSV outputs. Exit codes: 0 success,
2 scenario validation failure, 3 solver non-convergence or failed
self-check, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import (EpiPlanError, ScenarioParseError, ScenarioValidationError,
                     SolverNotConvergedError)
from .pipeline import export, run_pipeline
from .scenario import Scenario, load_scenario, stockpile_weights

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_IO = 4

_EXPORT_SCOPE = {
    "simulate": ("trajectories", "summary"),
    "demand": ("trajectories", "demand", "summary"),
    "stockpile-durable": ("trajectories", "demand", "supply", "summary"),
    "stockpile-singleuse": ("trajectories", "demand", "supply", "summary"),
    "allocate": ("trajectories", "demand", "supply", "allocation", "summary"),
    "pipeline": ("trajectories", "demand", "supply", "allocation", "summary"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epiplan",
        description="Pandemic resource planning: simulate, forecast demand, "
                    "size stockpiles, and allocate supply across regions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "run the epidemic simulations and export trajectories"),
        ("demand", "export per-region and aggregate resource demand"),
        ("stockpile-durable", "plan the durable-resource stockpile"),
        ("stockpile-singleuse", "plan the single-use stockpile and schedule"),
        ("allocate", "allocate planned supply across regions day by day"),
        ("pipeline", "run all three stages for the configured resources"),
        ("check", "cross-validate the solvers against brute-force references "
                  "on a down-scaled copy of the scenario"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, help="path to the scenario file")
        p.add_argument("--out", default=None,
                       help="output directory (required for exporting commands)")
        p.add_argument("--resource", choices=("durable", "singleuse", "all"),
                       default="all", help="which resource class to plan")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized self-checks (check only)")
        p.add_argument("--substeps", type=int, default=None,
                       help="override the scenario's integrator substeps")
    return parser


def _effective_resource(command: str, requested: str) -> str:
    if command == "stockpile-durable":
        return "durable"
    if command == "stockpile-singleuse":
        return "singleuse"
    return requested


def _run_export_command(args) -> int:
    scenario = load_scenario(args.scenario)
    resource = _effective_resource(args.command, args.resource)
    result = run_pipeline(scenario, resource=resource, substeps=args.substeps)
    if args.out is None:
        print("no --out directory given; nothing exported", file=sys.stderr)
        return EXIT_IO
    files = export(result, args.out, include=_EXPORT_SCOPE[args.command])
    print(f"wrote {len(files)} files to {args.out}")
    for key, entry in sorted(result.diagnostics().items()):
        if isinstance(entry, dict) and "k0" in entry:
            print(f"{key}: k0={entry['k0']:.6g} objective={entry['objective']:.6g}")
    return EXIT_OK


def _downscale(values: np.ndarray, count: int) -> np.ndarray:
    """Pick `count` evenly spaced days and normalize to unit peak scale."""
    m = values.size
    idx = np.unique(np.linspace(0, m - 1, num=min(count, m)).round().astype(int))
    sample = values[idx]
    peak = float(np.max(sample))
    if peak > 0:
        sample = sample / peak * 10.0
    return sample


def _run_check(args) -> int:
    from .allocation import RegionalPeriodDemand, allocate_period
    from .demand import DemandSeries, aggregate, ppe_demand, ventilator_demand
    from .epidemic import simulate
    from .oracle import (brute_force_allocation, brute_force_schedule,
                         grid_search_k0)
    from .stockpile_durable import DurableCostModel, optimal_initial_stockpile
    from .stockpile_singleuse import SingleUseCostModel, optimize_schedule

    scenario = load_scenario(args.scenario)
    rng = np.random.default_rng(args.seed)
    failures = []

    trajectories = {r.label: simulate(r.initial, r.params, scenario.horizon_days,
                                      substeps=args.substeps or scenario.substeps)
                    for r in scenario.regions}
    vent = [ventilator_demand(trajectories[r.label], scenario.assessment, region=r.label)
            for r in scenario.regions]
    ppe = [ppe_demand(trajectories[r.label], scenario.assessment, region=r.label)
           for r in scenario.regions]

    # Durable stockpile vs grid search on a 10-day down-scaled instance.
    agg = aggregate(vent).values
    small = _downscale(agg, 10)
    cfg = scenario.durable
    m_small = small.size
    costs = DurableCostModel(m=m_small, a=cfg.production_per_day * 10.0 / max(float(np.max(agg)), 1.0),
                             omega=stockpile_weights(small, cfg.weight_rule),
                             theta_plus=cfg.shortage_cost, theta_minus=cfg.surplus_cost,
                             c=cfg.possession_cost_per_unit_day,
                             c0=cfg.initial_cost_per_unit)
    X_small = DemandSeries(values=small, region="downscaled")
    step = 1e-3
    analytic = optimal_initial_stockpile(X_small, costs)
    hi = float(max(np.max(small), analytic.k0)) + 1.0
    gridded = grid_search_k0(X_small, costs, 0.0, hi, step)
    if abs(analytic.k0 - gridded) <= 2 * step:
        print(f"check durable-stockpile: PASS (analytic {analytic.k0:.6f}, "
              f"grid {gridded:.6f})")
    else:
        failures.append("durable-stockpile")
        print(f"check durable-stockpile: FAIL (analytic {analytic.k0:.6f}, "
              f"grid {gridded:.6f})")

    # Single-use schedule vs coordinate-descent reference on 6 days.
    agg_ppe = aggregate(ppe).values
    small = _downscale(agg_ppe, 6)
    cfg = scenario.singleuse
    costs = SingleUseCostModel(m=small.size,
                               a=cfg.production_per_day * 10.0 / max(float(np.max(agg_ppe)), 1.0),
                               omega=stockpile_weights(small, cfg.weight_rule),
                               theta_plus=cfg.shortage_cost, theta_minus=cfg.surplus_cost,
                               c=cfg.possession_cost_per_unit_day,
                               c0=cfg.initial_cost_per_unit)
    X_small = DemandSeries(values=small, region="downscaled")
    got = optimize_schedule(X_small, costs)
    ref = brute_force_schedule(X_small, costs)
    rel = abs(got.objective_value - ref.objective_value) / max(1.0, abs(ref.objective_value))
    if rel <= 1e-6:
        print(f"check singleuse-schedule: PASS (relative objective gap {rel:.2e})")
    else:
        failures.append("singleuse-schedule")
        print(f"check singleuse-schedule: FAIL (relative objective gap {rel:.2e})")

    # Allocation vs projected-gradient reference on randomly sampled days.
    n = min(len(scenario.regions), 4)
    values = np.column_stack([s.values for s in vent[:n]])
    peak = max(float(np.max(values)), 1.0)
    worst = 0.0
    days = rng.choice(scenario.horizon_days, size=min(8, scenario.horizon_days),
                      replace=False)
    for day in sorted(int(d) for d in days):
        x = values[day] / peak * 10.0
        if np.all(x <= 0):
            continue
        demand = RegionalPeriodDemand(
            x=x, omega=np.full(n, 1.0 / n),
            theta_plus=np.full(n, scenario.allocation.shortage_cost),
            theta_minus=np.full(n, scenario.allocation.surplus_cost))
        K = float(rng.uniform(0.2, 1.3) * np.sum(x))
        alloc = allocate_period(demand, K)
        ref_k = brute_force_allocation(demand, K)
        worst = max(worst, float(np.max(np.abs(alloc.k - ref_k))))
    if worst <= 1e-4:
        print(f"check allocation: PASS (worst per-component gap {worst:.2e})")
    else:
        failures.append("allocation")
        print(f"check allocation: FAIL (worst per-component gap {worst:.2e})")

    if failures:
        print(f"self-check failed: {', '.join(failures)}", file=sys.stderr)
        return EXIT_SOLVER
    print("all self-checks passed")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "check":
            return _run_check(args)
        return _run_export_command(args)
    except (ScenarioParseError, ScenarioValidationError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverNotConvergedError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EpiPlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
