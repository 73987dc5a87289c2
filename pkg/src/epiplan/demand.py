"""Resource demand derived from epidemic trajectories.

Ventilator need is a fraction of the intensive-care census; protective
equipment need combines newly exposed cases with the daily census of
hospitalized and intensive-care patients. Series run over days 1..m
(day 0 is the simulation's initial condition and generates no demand).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .epidemic import Trajectory
from .errors import LengthMismatchError


@dataclass(frozen=True)
class DemandAssessment:
    """Per-patient resource consumption factors.

    alpha: fraction of intensive-care patients needing a ventilator.
    theta_e: equipment sets consumed per newly exposed case.
    theta_i2 / theta_i3: sets per day per hospitalized / intensive-care patient.
    """

    alpha: float
    theta_e: float
    theta_i2: float
    theta_i3: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        for name in ("theta_e", "theta_i2", "theta_i3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class DemandSeries:
    """Daily demand for one resource in one region, days 1..m."""

    values: np.ndarray
    region: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("demand values must be a non-empty 1-d sequence")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("demand values must be finite and >= 0")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


def ventilator_demand(traj: Trajectory, assessment: DemandAssessment,
                      alpha_by_day=None, region: str | None = None) -> DemandSeries:
    """Ventilator demand: alpha * I3 on each day 1..m.

    A per-day alpha sequence (length m) may be supplied for time-varying
    severity fractions; it overrides the constant from the assessment.
    """
    i3 = traj.column("I3")[1:]
    if alpha_by_day is None:
        alpha = np.full(i3.size, assessment.alpha)
    else:
        alpha = np.asarray(alpha_by_day, dtype=float)
        if alpha.shape != i3.shape:
            raise LengthMismatchError(
                f"alpha_by_day has length {alpha.size}, expected {i3.size}"
            )
        if np.any(alpha < 0) or np.any(alpha > 1):
            raise ValueError("per-day alpha values must be in [0, 1]")
    return DemandSeries(values=alpha * i3, region=region or "")


def ppe_demand(traj: Trajectory, assessment: DemandAssessment,
               region: str | None = None) -> DemandSeries:
    """Protective-equipment demand on each day 1..m.

    value_j = theta_e*(S_{j-1} - S_j) + theta_i2*I2_j + theta_i3*I3_j.
    """
    S = traj.column("S")
    if S.size < 2:
        raise ValueError("trajectory needs at least two grid states")
    newly_exposed = S[:-1] - S[1:]
    # S is non-increasing; clip pure roundoff wiggle so values stay >= 0.
    newly_exposed = np.maximum(newly_exposed, 0.0)
    values = (assessment.theta_e * newly_exposed
              + assessment.theta_i2 * traj.column("I2")[1:]
              + assessment.theta_i3 * traj.column("I3")[1:])
    return DemandSeries(values=values, region=region or "")


def aggregate(regional: list[DemandSeries], region: str = "aggregate") -> DemandSeries:
    """Element-wise sum of same-length regional series."""
    if not regional:
        raise ValueError("cannot aggregate an empty list of series")
    lengths = {len(s) for s in regional}
    if len(lengths) != 1:
        raise LengthMismatchError(f"series lengths differ: {sorted(lengths)}")
    total = np.sum([s.values for s in regional], axis=0)
    return DemandSeries(values=total, region=region)
