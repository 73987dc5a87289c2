"""Exception types shared across the package."""


class EpiPlanError(Exception):
    """Base class for all package-specific errors."""


class NonFiniteError(EpiPlanError):
    """A compartment became NaN or infinite during integration."""


class NegativityViolationError(EpiPlanError):
    """A compartment went negative beyond the roundoff-clamping threshold.

    Usually a sign that the step size is too large for the configured rates.
    """


class LengthMismatchError(EpiPlanError):
    """Sequences that must share a length do not."""


class DegenerateCostsError(EpiPlanError):
    """All imbalance cost weights are zero; the objective has no curvature."""


class InconsistentStorageError(EpiPlanError):
    """A schedule's stored trajectory does not match the storage recursion."""


class SolverNotConvergedError(EpiPlanError):
    """Iterative solver exhausted its budget above the residual tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EmptySubsetError(EpiPlanError):
    """A weight computation was asked for an empty region subset."""


class NoFrugalIndexError(EpiPlanError):
    """No support size passes the frugality test (implementation bug)."""


class AmbiguousFrugalIndexError(EpiPlanError):
    """More than one support size passes the frugality test strictly."""


class InstanceTooLargeError(EpiPlanError):
    """A brute-force reference solver was given an oversized instance."""


class ScenarioParseError(EpiPlanError):
    """Scenario file is not syntactically valid."""


class ScenarioValidationError(EpiPlanError):
    """Scenario file parsed but violates a field constraint."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
