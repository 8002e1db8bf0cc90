"""Stochastic linearized ADMM for non-convex composite objectives.

Solves min_x H(x) + F(Ax) where H is a finite-sum smooth loss, F a
separable sparsity penalty and A a linear operator, replacing the full
gradient in the linearized primal step with a pluggable (optionally
variance-reduced) stochastic estimate.
"""

from .diagnostics import (
    DiagnosticsRecord,
    StabilityConstants,
    apply_B,
    augmented_lagrangian,
    stability_constants,
    stability_psi,
    subgradient_p_constant,
)
from .estimators import (
    EstimatorDiagnostics,
    EstimatorSpec,
    GradientEstimator,
    VarianceConstants,
    init_estimator,
    theoretical_constants,
)
from .exceptions import (
    ConfigError,
    DataError,
    DiagnosticUndefinedError,
    DivergenceError,
    NoCertifiedConstantsError,
    ParameterError,
    ParseError,
    ShapeError,
    SpectralEstimationError,
)
from .libsvm import parse_libsvm, write_libsvm
from .linops import (
    DenseMatrix,
    FiniteDifference1D,
    FiniteDifference2D,
    Identity,
    LinearOperator,
    SpectralEstimates,
    VerticalStack,
    estimate_spectral,
    load_dense_matrix,
)
from .losses import (
    SIGMOID_CURVATURE,
    FiniteSumLoss,
    LeastSquaresComponent,
    LipschitzBound,
    SigmoidComponent,
)
from .problems import (
    Dataset,
    GraphSpec,
    Problem,
    build_fused_lasso,
    build_graph,
    build_toy_reconstruction,
    generate_synthetic_quadratic,
    rectangle_phantom,
    write_pgm,
)
from .regularizers import L0, L1, Regularizer, WeightedL0
from .solver import (
    ETA_GRID,
    IterationRecord,
    ParamReport,
    RunResult,
    SolverConfig,
    SolverState,
    descent_coefficient,
    run,
    step,
    u_update,
    validate_params,
    x_update,
    z_update,
)

__version__ = "0.1.0"
