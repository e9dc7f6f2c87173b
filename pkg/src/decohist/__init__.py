"""decohist — decide whether declared quantum histories decohere.

A history is an initial density matrix and a sequence of steps, each a
unitary followed by an optional generalized measurement (instrument). The
package builds the decoherence functional, checks weak, measurement-based and
Kent-style decoherence conditions, runs a two-ensemble sampling protocol that
probes the measurement-based condition statistically, ships a small model
library (spin-1/2, position grids with Gaussian quasi-projections), and reads
scenario files describing all of the above.
"""

from .core import (
    DEFAULT_TOLERANCES,
    DensityMatrix,
    Effect,
    Instrument,
    Tolerances,
    UnitaryOp,
    apply_channel,
    apply_outcome,
    outcome_probabilities,
    psd_sqrt,
    state_statistics,
    tensor_product,
    validate_density,
    validate_instrument,
    validate_unitary,
)
from .criteria import (
    DEFAULT_SUBSET_BUDGET,
    MAX_WITNESSES,
    CriterionReport,
    KentSpec,
    KentStep,
    Witness,
    check_kent,
    check_measurement_based,
    check_weak,
    random_classical_spec,
    random_spec,
    trivial_instrument,
)
from .errors import (
    AsymmetricDirectionSet,
    BudgetExceeded,
    CoverageError,
    DecohistError,
    DimensionMismatch,
    EdgeOverlap,
    IncompleteInstrument,
    KentNotApplicable,
    NotHermitian,
    NotHermitianEffects,
    NotPSD,
    NotUnitary,
    NumericalUnderflow,
    PathMismatch,
    ScenarioError,
    ScenarioSyntaxError,
    SubsetBudgetExceeded,
    SubsetInvalid,
    TraceNotOne,
    UnknownKey,
    UnknownModel,
    UnresolvableWidth,
    ValidationError,
    ZeroProbabilityOutcome,
)
from .histories import (
    DEFAULT_PATH_PAIR_BUDGET,
    TRIVIAL_LABEL,
    DecoherenceFunctional,
    HistorySpec,
    Step,
    decoherence_functional,
    grouped_diagonal,
    marginal_distribution,
    marginal_functional,
    omit_functional,
    omitted_distribution,
    path_operator,
    posterior_state,
)
from .models import (
    AXIS_DIRECTIONS,
    GridSystem,
    SpinDirectionSet,
    SpinHalfLibrary,
    dephasing_instrument,
    free_particle_unitary,
    gaussian_instrument,
    gaussian_wavepacket,
    interference_circuit,
    spin_direction_instrument,
    spin_half_library,
)
from .protocol import (
    ProtocolConfig,
    ProtocolResult,
    measure_and_forget_channel,
    run_protocol,
    sample_history,
    tv_distance,
)
from .scenario import (
    Report,
    Scenario,
    emit_report,
    parse_report,
    parse_scenario,
    run_scenario,
    with_overrides,
)

__version__ = "0.1.0"

__all__ = [
    "AXIS_DIRECTIONS",
    "AsymmetricDirectionSet",
    "BudgetExceeded",
    "CoverageError",
    "CriterionReport",
    "DEFAULT_PATH_PAIR_BUDGET",
    "DEFAULT_SUBSET_BUDGET",
    "DEFAULT_TOLERANCES",
    "DecoherenceFunctional",
    "DecohistError",
    "DensityMatrix",
    "DimensionMismatch",
    "EdgeOverlap",
    "Effect",
    "GridSystem",
    "HistorySpec",
    "IncompleteInstrument",
    "Instrument",
    "KentNotApplicable",
    "KentSpec",
    "KentStep",
    "MAX_WITNESSES",
    "NotHermitian",
    "NotHermitianEffects",
    "NotPSD",
    "NotUnitary",
    "NumericalUnderflow",
    "PathMismatch",
    "ProtocolConfig",
    "ProtocolResult",
    "Report",
    "Scenario",
    "ScenarioError",
    "ScenarioSyntaxError",
    "SpinDirectionSet",
    "SpinHalfLibrary",
    "Step",
    "SubsetBudgetExceeded",
    "SubsetInvalid",
    "TRIVIAL_LABEL",
    "Tolerances",
    "TraceNotOne",
    "UnitaryOp",
    "UnknownKey",
    "UnknownModel",
    "UnresolvableWidth",
    "ValidationError",
    "Witness",
    "ZeroProbabilityOutcome",
    "apply_channel",
    "apply_outcome",
    "check_kent",
    "check_measurement_based",
    "check_weak",
    "decoherence_functional",
    "dephasing_instrument",
    "emit_report",
    "free_particle_unitary",
    "gaussian_instrument",
    "gaussian_wavepacket",
    "grouped_diagonal",
    "interference_circuit",
    "marginal_distribution",
    "marginal_functional",
    "measure_and_forget_channel",
    "omit_functional",
    "omitted_distribution",
    "outcome_probabilities",
    "parse_report",
    "parse_scenario",
    "path_operator",
    "posterior_state",
    "psd_sqrt",
    "random_classical_spec",
    "random_spec",
    "run_protocol",
    "run_scenario",
    "sample_history",
    "spin_direction_instrument",
    "spin_half_library",
    "state_statistics",
    "tensor_product",
    "trivial_instrument",
    "tv_distance",
    "validate_density",
    "validate_instrument",
    "validate_unitary",
    "with_overrides",
]
