"""Exception taxonomy for decohist.

Every error raised by the library derives from DecohistError, so callers can
catch one type at the CLI boundary. Validation failures carry the offending
numeric payload (residual, eigenvalue, trace) as an attribute where one exists.
"""

from __future__ import annotations


class DecohistError(Exception):
    """Base class for all decohist errors."""


class ValidationError(DecohistError):
    """An input failed a structural or tolerance-based invariant."""


class DimensionMismatch(ValidationError):
    """Matrix shapes or system dimensions are inconsistent."""


class NotHermitian(ValidationError):
    """Matrix is not Hermitian within the validation tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class NotPSD(ValidationError):
    """Matrix has an eigenvalue below -tolerance."""

    def __init__(self, message: str, min_eigenvalue: float | None = None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class TraceNotOne(ValidationError):
    """Density matrix trace differs from 1 beyond tolerance."""

    def __init__(self, message: str, trace: complex | None = None):
        super().__init__(message)
        self.trace = trace


class NotUnitary(ValidationError):
    """Operator fails |U'U - 1| <= tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class IncompleteInstrument(ValidationError):
    """Effects do not satisfy completeness sum A'A = 1 within tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class NotHermitianEffects(ValidationError):
    """A criterion restricted to Hermitian effects received a non-Hermitian one."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class KentNotApplicable(ValidationError):
    """Kent's criterion needs one internal index per outcome label."""


class AsymmetricDirectionSet(ValidationError):
    """Direction set does not sum to zero, so completeness would fail."""


class CoverageError(ValidationError):
    """Quasi-projection centers cover the grid too unevenly to be faithful."""

    def __init__(self, message: str, variation: float | None = None):
        super().__init__(message)
        self.variation = variation


class UnresolvableWidth(ValidationError):
    """Wavepacket width below the grid resolution limit."""


class EdgeOverlap(ValidationError):
    """Wavepacket tails exceed tolerance at the grid boundary."""


class PathMismatch(DecohistError):
    """An outcome path does not fit the history it is applied to."""


class ZeroProbabilityOutcome(DecohistError):
    """Conditioning on an outcome whose probability is below tolerance."""

    def __init__(self, message: str, probability: float | None = None):
        super().__init__(message)
        self.probability = probability


class NumericalUnderflow(DecohistError):
    """All outcome probabilities vanished; the instrument or state is broken."""


class BudgetExceeded(DecohistError):
    """An enumeration would exceed its configured budget."""


class SubsetBudgetExceeded(BudgetExceeded):
    """Too many measured steps for exhaustive subset checking."""


class SubsetInvalid(DecohistError):
    """A step subset refers to positions that carry no instrument."""


class ScenarioError(DecohistError):
    """Base class for scenario-file problems."""


class ScenarioSyntaxError(ScenarioError):
    """Scenario file is not well-formed; carries line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class UnknownKey(ScenarioError):
    """Scenario file contains a key the schema does not define."""


class UnknownModel(ScenarioError):
    """Scenario file names a model, state, unitary or instrument that does not exist."""
