"""Seven-compartment epidemic dynamics and the basic reproductive ratio.

Compartments: susceptible (S), exposed (E), mild infected (I1), hospitalized
infected (I2), intensive-care infected (I3), recovered (R), deceased (D).
The flow structure conserves total population exactly, which downstream
modules rely on (demand formulas use compartment paths directly).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativityViolationError, NonFiniteError

_RATE_FIELDS = ("beta1", "beta2", "beta3", "gamma", "delta1", "delta2",
                "delta3", "p1", "p2", "mu")

# Relative slack (vs. N) under which a negative compartment is treated as
# integration roundoff and clamped; anything larger is a hard error.
CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class EpidemicParams:
    """Rate constants of the compartment system plus total population N.

    beta1..beta3 are per-capita transmission rates of the three infected
    tiers, gamma the latency exit rate, delta1..delta3 per-tier recovery
    rates, p1/p2 severity progression rates, mu the intensive-care mortality
    rate. All rates are per day; N is in persons.
    """

    beta1: float
    beta2: float
    beta3: float
    gamma: float
    delta1: float
    delta2: float
    delta3: float
    p1: float
    p2: float
    mu: float
    N: float

    def __post_init__(self):
        for name in _RATE_FIELDS:
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"rate {name} must be finite and >= 0, got {value}")
        if not np.isfinite(self.N) or self.N <= 0:
            raise ValueError(f"population N must be finite and > 0, got {self.N}")


@dataclass(frozen=True)
class CompartmentState:
    """Point-in-time compartment census (real-valued expected counts)."""

    S: float
    E: float
    I1: float
    I2: float
    I3: float
    R: float
    D: float

    def __post_init__(self):
        for name, value in zip(_STATE_FIELDS, self.as_tuple()):
            if not np.isfinite(value):
                raise NonFiniteError(f"compartment {name} is not finite: {value}")
            if value < 0:
                raise ValueError(f"compartment {name} must be >= 0, got {value}")

    def as_tuple(self):
        return (self.S, self.E, self.I1, self.I2, self.I3, self.R, self.D)

    def total(self) -> float:
        return sum(self.as_tuple())


_STATE_FIELDS = ("S", "E", "I1", "I2", "I3", "R", "D")


@dataclass(frozen=True)
class Trajectory:
    """Daily compartment states, grid points 0..m (dt fixed at one day)."""

    states: tuple
    params: EpidemicParams
    dt: float = 1.0

    @property
    def m(self) -> int:
        return len(self.states) - 1

    def column(self, name: str) -> np.ndarray:
        """Path of one compartment over the whole grid, as an array."""
        return np.array([getattr(s, name) for s in self.states], dtype=float)

    def as_array(self) -> np.ndarray:
        """(m+1, 7) array in compartment order S,E,I1,I2,I3,R,D."""
        return np.array([s.as_tuple() for s in self.states], dtype=float)


def _rhs(y, p: EpidemicParams):
    S, E, I1, I2, I3, R, D = y
    infection = (p.beta1 * I1 + p.beta2 * I2 + p.beta3 * I3) * S
    return (
        -infection,
        infection - p.gamma * E,
        p.gamma * E - (p.delta1 + p.p1) * I1,
        p.p1 * I1 - (p.delta2 + p.p2) * I2,
        p.p2 * I2 - (p.delta3 + p.mu) * I3,
        p.delta1 * I1 + p.delta2 * I2 + p.delta3 * I3,
        p.mu * I3,
    )


# Where each compartment's outflow goes, for rebalancing a roundoff clamp:
# (recipient index, rate field) pairs. The deficit added to a clamped
# compartment is taken back from its dominant outflow recipient so the
# population total is preserved exactly.
_OUTFLOWS = {
    0: ((1, None),),                       # S -> E (only flow out of S)
    1: ((2, "gamma"),),                    # E -> I1
    2: ((5, "delta1"), (3, "p1")),         # I1 -> R or I2
    3: ((5, "delta2"), (4, "p2")),         # I2 -> R or I3
    4: ((5, "delta3"), (6, "mu")),         # I3 -> R or D
    5: (),                                 # R is terminal
    6: (),                                 # D is terminal
}


def _clamp_negative(y, params: EpidemicParams):
    out = list(y)
    for i, value in enumerate(out):
        if value >= 0.0:
            continue
        deficit = -value
        if deficit >= CLAMP_TOL * params.N:
            raise NegativityViolationError(
                f"compartment {_STATE_FIELDS[i]} reached {value:.6g}; "
                f"reduce the step size or check the rate magnitudes"
            )
        out[i] = 0.0
        targets = _OUTFLOWS[i]
        if targets:
            rates = [1.0 if f is None else getattr(params, f) for _, f in targets]
            j = targets[int(np.argmax(rates))][0]
        else:
            j = int(np.argmax(out))
        out[j] -= deficit
    return tuple(out)


def step(state: CompartmentState, params: EpidemicParams, dt: float = 1.0,
         substeps: int = 4) -> CompartmentState:
    """Advance the state by dt days with classical 4th-order integration.

    The interval is split into `substeps` equal internal steps. Tiny negative
    values produced by roundoff are clamped to zero with the deficit removed
    from the clamped compartment's outflow recipient; larger negatives raise
    NegativityViolationError.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    h = dt / substeps
    y = tuple(float(v) for v in state.as_tuple())
    for _ in range(substeps):
        k1 = _rhs(y, params)
        k2 = _rhs(tuple(y[i] + 0.5 * h * k1[i] for i in range(7)), params)
        k3 = _rhs(tuple(y[i] + 0.5 * h * k2[i] for i in range(7)), params)
        k4 = _rhs(tuple(y[i] + h * k3[i] for i in range(7)), params)
        y = tuple(y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                  for i in range(7))
    for v in y:
        if not np.isfinite(v):
            raise NonFiniteError("integration produced a non-finite compartment")
    y = _clamp_negative(y, params)
    return CompartmentState(*y)


def simulate(initial: CompartmentState, params: EpidemicParams, m: int,
             substeps: int = 4) -> Trajectory:
    """Run m daily steps from the initial state; returns m+1 grid states."""
    if m < 1:
        raise ValueError(f"horizon m must be >= 1, got {m}")
    total = initial.total()
    if abs(total - params.N) > 1e-9 * params.N:
        raise ValueError(
            f"initial compartments sum to {total:.6g}, expected N={params.N:.6g}"
        )
    states = [initial]
    current = initial
    for day in range(1, m + 1):
        try:
            current = step(current, params, dt=1.0, substeps=substeps)
        except (NonFiniteError, NegativityViolationError) as exc:
            raise type(exc)(f"day {day}: {exc}") from exc
        states.append(current)
    return Trajectory(states=tuple(states), params=params)


def r0(params: EpidemicParams) -> float:
    """Basic reproductive ratio of the compartment system.

    R0 = N/(p1+d1) * (b1 + p1/(p2+d2) * (b2 + b3*p2/(mu+d3))).
    """
    d_mild = params.p1 + params.delta1
    d_hosp = params.p2 + params.delta2
    d_icu = params.mu + params.delta3
    for name, value in (("p1+delta1", d_mild), ("p2+delta2", d_hosp),
                        ("mu+delta3", d_icu)):
        if value == 0:
            raise ZeroDivisionError(f"r0 undefined: {name} is zero")
    return (params.N / d_mild) * (
        params.beta1
        + (params.p1 / d_hosp) * (params.beta2 + params.beta3 * params.p2 / d_icu)
    )
