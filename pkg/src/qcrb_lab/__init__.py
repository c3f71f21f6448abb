"""Quantum Fisher information, SLD operators, and Cramér-Rao saturation
checks for finite-dimensional parametric states."""

from .core import (
    IDENTITY_2,
    PAULIS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    HermitianObservable,
    Povm,
    PureState,
    collective_spin,
    eigenprojector_povm,
    hermitian_eigendecomposition,
    matrix_sqrt_psd,
    product_basis_povm,
    product_basis_vectors,
    product_observable,
    single_site_observable,
    tensor_power,
    tensor_product,
)
from .errors import (
    DimensionMismatchError,
    EvaluationFailureError,
    FlatLikelihoodError,
    InsufficientSamplesError,
    InsufficientTrialsError,
    InvalidCoefficientsError,
    MetrologyError,
    NotHermitianError,
    NotPositiveError,
    SingularOutcomeError,
    SingularSensitivityError,
    SldUnsolvableError,
    SpecFileError,
    VariantInapplicableError,
)
from .fisher import (
    OutcomeDistribution,
    ParametricModel,
    SldResult,
    blackbox_model,
    cfi,
    outcome_distribution,
    qfi,
    qfi_from_generator_variance,
    second_state_derivative,
    sld,
    state_derivative,
    unitary_model,
)
from .ghz import (
    X_BASIS,
    Y_BASIS,
    LambdaSolution,
    SeparableObservableCoeffs,
    SingularPhiSet,
    ghz_closed_form_expectations,
    ghz_model,
    ghz_sld_closed_form,
    ghz_state,
    optimal_separable_observable,
    parity_from_collective_spin,
    parity_observable,
    ramsey_rotate,
    rotation_about_y,
    singular_points,
    two_qubit_lambda_solution,
)
from .optimality import (
    ErrorDecomposition,
    ErrorPropagationReport,
    OptimalityReport,
    PovmOptimalityReport,
    check_observable_optimality,
    check_povm_optimality,
    error_propagation,
    estimator_error_decomposition,
    observable_expectations,
)
from .simulate import (
    CltReport,
    EstimatorResult,
    ShotRecord,
    SimulationSummary,
    default_mle_interval,
    estimate_phi_mle,
    estimate_phi_sample_mean,
    exact_record,
    run_mle_trials,
    run_sample_mean_trials,
    sample_shots,
    verify_clt_link,
)

__version__ = "0.1.0"
