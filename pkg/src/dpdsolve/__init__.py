"""Accelerated first-order solvers for bilinearly coupled saddle point
problems, with a total variation deblurring application layer.

Two solver families are provided: a linearized method that takes
gradient steps on the primal block, and an exact proximal method for
nonsmooth primal terms. Each ships the published step-size schedules
whose primal-dual gap decays at 1/k, or at 1/k^2 when one block is
strongly convex, together with the matching guarantee curves so runs can
be checked against the theory.
"""

import os as _os

# Best-effort thread cap for the numerical backends. This must happen
# before numpy loads its BLAS, hence before any submodule import.
_threads = _os.environ.get("DPD_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)
del _os

from .errors import (  # noqa: E402
    ConfigurationError,
    ContractViolationError,
    DivergenceError,
    DpdError,
    NumericalFailureError,
    UnsupportedPointError,
)
from .linops import (  # noqa: E402
    ImageGrid,
    Kernel2D,
    LinearOperator,
    NormEstimate,
    estimate_operator_norm,
    identity_operator,
    make_average_kernel,
    make_convolution_operator,
    make_difference_operator,
    make_motion_kernel,
    make_stacked_operator,
)
from .model import (  # noqa: E402
    EXACT_PROX_ORACLE,
    GRADIENT_ORACLE,
    DualProxOracle,
    IterationSnapshot,
    PrimalOracle,
    SaddleProblem,
    SolverConsts,
    kkt_residual,
    lagrangian,
)
from .prox import (  # noqa: E402
    pair_norms,
    project_ball2_pairs,
    project_box,
    prox_linear_plus_box,
    prox_quadratic_primal,
    prox_smoothed_tv_dual,
)
from .ldpd import (  # noqa: E402
    LdpdParams,
    LdpdRegime,
    LdpdState,
    RunResult,
    aggregate_closed_form,
    init_ldpd_state,
    ldpd_schedule,
    ldpd_step,
    run_ldpd,
)
from .edpd import (  # noqa: E402
    EdpdParams,
    EdpdRegime,
    EdpdState,
    edpd_schedule,
    edpd_step,
    init_edpd_state,
    run_edpd,
)
from .diagnostics import (  # noqa: E402
    GapReference,
    HistoryRecord,
    HistoryRecorder,
    RateCheckResult,
    dual_distance_rate_check,
    fit_loglog_slope,
    primal_dual_gap,
    read_history_csv,
    snr_db,
    theoretical_bound,
    write_history_csv,
)
from .bench import (  # noqa: E402
    QuadraticSaddle,
    make_ball_capped_saddle,
    make_quadratic_saddle,
)
from .imaging import (  # noqa: E402
    GaussianDeblurSpec,
    SaltPepperDeblurSpec,
    add_gaussian_noise,
    add_salt_pepper,
    build_gaussian_problem,
    build_saltpepper_problem,
    continuation_mu_g,
    make_phantom,
    read_dpdf,
    read_pgm,
    write_dpdf,
    write_pgm,
)

__version__ = "0.1.0"
