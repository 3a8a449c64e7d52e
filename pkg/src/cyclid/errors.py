"""Exception and warning classes raised across the package."""


class CyclidError(Exception):
    """Base class for all errors raised by cyclid."""

    #: process exit code used by the command line front end
    exit_code = 3


class DimensionMismatch(CyclidError, ValueError):
    exit_code = 2


class SparsityViolation(CyclidError):
    """A cycled signal has energy outside its active block (phase mismatch)."""


class AssumptionViolation(CyclidError):
    """A structural assumption on the plant or controller does not hold.

    Attributes
    ----------
    assumption : int
        Which assumption failed (1: square strictly proper plant,
        2: controller without feedthrough and relative degree one,
        3: internal stability, 4: minimality of the cycled loop).
    phase : int or None
        Periodic phase index at which the failure was detected.
    """

    exit_code = 2

    def __init__(self, assumption, message, phase=None):
        self.assumption = assumption
        self.phase = phase
        where = "" if phase is None else f" (phase k={phase})"
        super().__init__(f"assumption {assumption} violated{where}: {message}")


class DivergenceDetected(CyclidError):
    """A simulated signal exceeded the divergence bound."""


class RankDeficientData(CyclidError):
    """The data are not informative enough for subspace identification."""


class SingularControllerPath(CyclidError):
    """The controller path matrix C_u B (or C_u A^(d-1) B) is numerically singular."""


class GapNotFound(CyclidError):
    """No singular-value gap separates the requested order."""

    def __init__(self, message, singular_values=None):
        self.singular_values = singular_values
        super().__init__(message)


class SingularTransform(CyclidError):
    """The recovery transform T is singular for the chosen F blocks."""


class StructureResidualExceeded(CyclidError):
    """The transformed realization is too far from the cyclic block pattern."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class DegenerateSignal(CyclidError, ValueError):
    """A reference signal is constant, so the fit measure is undefined."""


class DataFileError(CyclidError):
    """A model, dataset or configuration file is missing or malformed."""

    exit_code = 4


class OrderGapWarning(UserWarning):
    """The singular spectrum suggests a smaller effective order."""


class ConditioningWarning(UserWarning):
    """A matrix that gets inverted is poorly conditioned."""


class StabilityMarginWarning(UserWarning):
    """The closed loop is stable but very close to the unit circle."""


class DataLengthWarning(UserWarning):
    """Fewer samples than recommended for the requested model order."""
