"""Scenario files: strict loading, validation, and round-trip export.

A scenario is a YAML document (conventional extension .scn) describing the
regions, the planning horizon, demand assessment factors, and one cost
section per resource class. Unknown keys are errors: planning inputs fail
loudly rather than silently ignoring typos.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .demand import DemandAssessment
from .epidemic import CompartmentState, EpidemicParams
from .errors import NonFiniteError, ScenarioParseError, ScenarioValidationError

SCHEMA = "epiplan-scenario-v1"

WEIGHT_RULES_STOCKPILE = ("proportional_to_demand", "uniform")
WEIGHT_RULES_ALLOCATION = ("proportional_to_remaining_demand", "uniform")
COST_BASES = ("per_unit", "per_1000")

_RATE_KEYS = ("beta1", "beta2", "beta3", "gamma", "delta1", "delta2",
              "delta3", "p1", "p2", "mu")
_STATE_KEYS = ("S", "E", "I1", "I2", "I3", "R", "D")


@dataclass(frozen=True)
class ResourceConfig:
    """Cost section for one resource class, converted to per-unit terms."""

    production_per_day: float
    possession_cost_per_unit_day: float
    initial_cost_per_unit: float
    shortage_cost: float
    surplus_cost: float
    weight_rule: str
    cost_basis: str


@dataclass(frozen=True)
class AllocationConfig:
    shortage_cost: float
    surplus_cost: float
    weight_rule: str


@dataclass(frozen=True)
class Region:
    label: str
    params: EpidemicParams
    initial: CompartmentState


@dataclass(frozen=True)
class Scenario:
    horizon_days: int
    substeps: int
    regions: tuple
    assessment: DemandAssessment
    durable: ResourceConfig
    singleuse: ResourceConfig
    allocation: AllocationConfig

    @property
    def labels(self) -> tuple:
        return tuple(r.label for r in self.regions)


def _require(mapping, key, where, kind=None):
    if key not in mapping:
        raise ScenarioValidationError(f"{where}.{key}", "missing required field")
    value = mapping[key]
    if kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioValidationError(f"{where}.{key}",
                                          f"expected a number, got {value!r}")
        value = float(value)
    elif kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioValidationError(f"{where}.{key}",
                                          f"expected an integer, got {value!r}")
    elif kind == "str":
        if not isinstance(value, str):
            raise ScenarioValidationError(f"{where}.{key}",
                                          f"expected a string, got {value!r}")
    elif kind == "map":
        if not isinstance(value, dict):
            raise ScenarioValidationError(f"{where}.{key}",
                                          f"expected a mapping, got {value!r}")
    elif kind == "list":
        if not isinstance(value, list):
            raise ScenarioValidationError(f"{where}.{key}",
                                          f"expected a list, got {value!r}")
    return value


def _reject_unknown(mapping, allowed, where):
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ScenarioValidationError(where, f"unknown keys {unknown}; "
                                             f"allowed keys are {sorted(allowed)}")


def _parse_region(entry, index) -> Region:
    where = f"regions[{index}]"
    if not isinstance(entry, dict):
        raise ScenarioValidationError(where, "expected a mapping")
    _reject_unknown(entry, ("label", "population", "rates", "initial"), where)
    label = _require(entry, "label", where, "str")
    population = _require(entry, "population", where, "number")
    rates = _require(entry, "rates", where, "map")
    _reject_unknown(rates, _RATE_KEYS, f"{where}.rates")
    initial = _require(entry, "initial", where, "map")
    _reject_unknown(initial, _STATE_KEYS, f"{where}.initial")
    try:
        params = EpidemicParams(
            **{k: float(_require(rates, k, f"{where}.rates", "number"))
               for k in _RATE_KEYS},
            N=population,
        )
    except ValueError as exc:
        raise ScenarioValidationError(f"{where}.rates", str(exc)) from exc
    try:
        state = CompartmentState(
            **{k: float(_require(initial, k, f"{where}.initial", "number"))
               for k in _STATE_KEYS}
        )
    except (ValueError, NonFiniteError) as exc:
        raise ScenarioValidationError(f"{where}.initial", str(exc)) from exc
    total = state.total()
    if abs(total - population) > 1e-9 * population:
        raise ScenarioValidationError(
            f"{where}.initial",
            f"compartments sum to {total!r} but population is {population!r}",
        )
    return Region(label=label, params=params, initial=state)


def _parse_resource(section, where) -> ResourceConfig:
    keys = ("production_per_day", "possession_cost_per_unit_day",
            "initial_cost_per_unit", "shortage_cost", "surplus_cost",
            "weight_rule", "cost_basis")
    _reject_unknown(section, keys, where)
    a = _require(section, "production_per_day", where, "number")
    c = _require(section, "possession_cost_per_unit_day", where, "number")
    c0 = _require(section, "initial_cost_per_unit", where, "number")
    theta_plus = _require(section, "shortage_cost", where, "number")
    theta_minus = _require(section, "surplus_cost", where, "number")
    rule = section.get("weight_rule", "proportional_to_demand")
    basis = section.get("cost_basis", "per_unit")
    if rule not in WEIGHT_RULES_STOCKPILE:
        raise ScenarioValidationError(f"{where}.weight_rule",
                                      f"must be one of {WEIGHT_RULES_STOCKPILE}, got {rule!r}")
    if basis not in COST_BASES:
        raise ScenarioValidationError(f"{where}.cost_basis",
                                      f"must be one of {COST_BASES}, got {basis!r}")
    if basis == "per_1000":
        # Costs quoted per 1000 units are stored per unit internally.
        c, c0 = c / 1000.0, c0 / 1000.0
    for name, value in (("production_per_day", a),
                        ("possession_cost_per_unit_day", c),
                        ("initial_cost_per_unit", c0),
                        ("shortage_cost", theta_plus),
                        ("surplus_cost", theta_minus)):
        if value < 0:
            raise ScenarioValidationError(f"{where}.{name}", "must be >= 0")
    if theta_plus <= 0 and theta_minus <= 0:
        raise ScenarioValidationError(f"{where}.shortage_cost",
                                      "shortage_cost and surplus_cost cannot both be zero")
    return ResourceConfig(production_per_day=a, possession_cost_per_unit_day=c,
                          initial_cost_per_unit=c0, shortage_cost=theta_plus,
                          surplus_cost=theta_minus, weight_rule=rule,
                          cost_basis=basis)


def _parse_allocation(section, where) -> AllocationConfig:
    keys = ("shortage_cost", "surplus_cost", "weight_rule")
    _reject_unknown(section, keys, where)
    theta_plus = _require(section, "shortage_cost", where, "number")
    theta_minus = _require(section, "surplus_cost", where, "number")
    rule = section.get("weight_rule", "proportional_to_remaining_demand")
    if rule not in WEIGHT_RULES_ALLOCATION:
        raise ScenarioValidationError(f"{where}.weight_rule",
                                      f"must be one of {WEIGHT_RULES_ALLOCATION}, got {rule!r}")
    if theta_plus <= 0:
        raise ScenarioValidationError(f"{where}.shortage_cost", "must be > 0")
    if theta_minus <= 0:
        raise ScenarioValidationError(f"{where}.surplus_cost", "must be > 0")
    return AllocationConfig(shortage_cost=theta_plus, surplus_cost=theta_minus,
                            weight_rule=rule)


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document from a string."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"not valid scenario syntax: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioParseError("scenario document must be a mapping")
    top_keys = ("schema", "horizon_days", "substeps", "demand_assessment",
                "regions", "durable", "singleuse", "allocation")
    _reject_unknown(doc, top_keys, "top level")
    schema = _require(doc, "schema", "top level", "str")
    if schema != SCHEMA:
        raise ScenarioValidationError("schema", f"expected {SCHEMA!r}, got {schema!r}")
    m = _require(doc, "horizon_days", "top level", "int")
    if m < 1:
        raise ScenarioValidationError("horizon_days", f"must be >= 1, got {m}")
    substeps = doc.get("substeps", 4)
    if isinstance(substeps, bool) or not isinstance(substeps, int) or substeps < 1:
        raise ScenarioValidationError("substeps", f"must be a positive integer, got {substeps!r}")

    da = _require(doc, "demand_assessment", "top level", "map")
    da_keys = ("ventilator_icu_fraction", "ppe_per_exposed",
               "ppe_per_hospitalized_day", "ppe_per_icu_day")
    _reject_unknown(da, da_keys, "demand_assessment")
    try:
        assessment = DemandAssessment(
            alpha=_require(da, "ventilator_icu_fraction", "demand_assessment", "number"),
            theta_e=_require(da, "ppe_per_exposed", "demand_assessment", "number"),
            theta_i2=_require(da, "ppe_per_hospitalized_day", "demand_assessment", "number"),
            theta_i3=_require(da, "ppe_per_icu_day", "demand_assessment", "number"),
        )
    except ValueError as exc:
        raise ScenarioValidationError("demand_assessment", str(exc)) from exc

    region_entries = _require(doc, "regions", "top level", "list")
    if not region_entries:
        raise ScenarioValidationError("regions", "need at least one region")
    regions = tuple(_parse_region(entry, i) for i, entry in enumerate(region_entries))
    labels = [r.label for r in regions]
    if len(set(labels)) != len(labels):
        raise ScenarioValidationError("regions", f"labels are not unique: {labels}")

    durable = _parse_resource(_require(doc, "durable", "top level", "map"), "durable")
    singleuse = _parse_resource(_require(doc, "singleuse", "top level", "map"), "singleuse")
    allocation = _parse_allocation(_require(doc, "allocation", "top level", "map"), "allocation")
    return Scenario(horizon_days=m, substeps=substeps, regions=regions,
                    assessment=assessment, durable=durable, singleuse=singleuse,
                    allocation=allocation)


def load_scenario(path) -> Scenario:
    """Load and validate a scenario file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError:
        raise
    return parse_scenario(text)


def export_config(scenario: Scenario) -> str:
    """Serialize a Scenario back into loadable document text."""
    def resource_map(r: ResourceConfig) -> dict:
        factor = 1000.0 if r.cost_basis == "per_1000" else 1.0
        return {
            "production_per_day": r.production_per_day,
            "possession_cost_per_unit_day": r.possession_cost_per_unit_day * factor,
            "initial_cost_per_unit": r.initial_cost_per_unit * factor,
            "shortage_cost": r.shortage_cost,
            "surplus_cost": r.surplus_cost,
            "weight_rule": r.weight_rule,
            "cost_basis": r.cost_basis,
        }

    doc = {
        "schema": SCHEMA,
        "horizon_days": scenario.horizon_days,
        "substeps": scenario.substeps,
        "demand_assessment": {
            "ventilator_icu_fraction": scenario.assessment.alpha,
            "ppe_per_exposed": scenario.assessment.theta_e,
            "ppe_per_hospitalized_day": scenario.assessment.theta_i2,
            "ppe_per_icu_day": scenario.assessment.theta_i3,
        },
        "regions": [
            {
                "label": r.label,
                "population": r.params.N,
                "rates": {k: getattr(r.params, k) for k in _RATE_KEYS},
                "initial": {k: getattr(r.initial, k) for k in _STATE_KEYS},
            }
            for r in scenario.regions
        ],
        "durable": resource_map(scenario.durable),
        "singleuse": resource_map(scenario.singleuse),
        "allocation": {
            "shortage_cost": scenario.allocation.shortage_cost,
            "surplus_cost": scenario.allocation.surplus_cost,
            "weight_rule": scenario.allocation.weight_rule,
        },
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)


def stockpile_weights(demand_values: np.ndarray, rule: str) -> np.ndarray:
    """Per-day significance weights for the stockpile objectives.

    proportional_to_demand: omega_j = X_j / mean(X) (uniform if the series
    is identically zero). uniform: all ones.
    """
    m = demand_values.size
    if rule == "uniform":
        return np.ones(m)
    if rule == "proportional_to_demand":
        mean = float(np.mean(demand_values))
        if mean <= 0.0:
            return np.ones(m)
        return demand_values / mean
    raise ValueError(f"unknown stockpile weight rule {rule!r}")


def allocation_weights(demand_matrix: np.ndarray, rule: str) -> np.ndarray:
    """Per-day-per-region weights (m, n) for the allocation problems.

    proportional_to_remaining_demand: weight of region i on day j follows
    the remaining demand sum_{t>=j} X_t^(i), normalized per day across
    regions. Days where every region's remainder is zero fall back to
    uniform weights, and exact zeros are floored so the weights stay
    strictly positive.
    """
    m, n = demand_matrix.shape
    if rule == "uniform":
        return np.ones((m, n))
    if rule == "proportional_to_remaining_demand":
        tails = np.cumsum(demand_matrix[::-1], axis=0)[::-1]
        weights = np.empty((m, n))
        for j in range(m):
            total = float(np.sum(tails[j]))
            if total <= 0.0:
                weights[j] = np.full(n, 1.0 / n)
                continue
            w = tails[j] / total
            w = np.maximum(w, 1e-12)
            weights[j] = w / np.sum(w)
        return weights
    raise ValueError(f"unknown allocation weight rule {rule!r}")
