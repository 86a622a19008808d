"""Multi-level modified Galerkin solver for the 2D periodic Navier-Stokes equations.

Each ladder level pairs a small ODE solve for the large-scale velocity with an
algebraic reconstruction of the small scales; a resolved pseudo-spectral
reference solver and a convergence harness verify the error decay in the
spectral-gap parameter delta = 1/(m+1)^2.
"""

from .basis import (
    ModeIndex,
    ProblemSpec,
    SpectralField,
    SpectralParams,
    Variant,
    dof_count,
    eigenvalue,
    evaluate_physical,
    field_from_physical,
    inner_l2,
    inv_nuA,
    norm_h1,
    norm_l2,
    norm_lap,
    project,
    random_field,
    spectral_params,
)
from .convect import BilinearWorkspace, bilinear_B, bilinear_B_oracle, trilinear_b
from .harness import (
    ConfigError,
    EocFit,
    ErrorRow,
    ErrorTable,
    ExperimentConfig,
    build_problem,
    eoc_fit,
    error_table,
    load_config,
    make_forcing,
    make_initial,
    save_config,
    smallscale_diagnostics,
)
from .integrate import (
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    integrate,
    sample_interpolate,
    time_derivative,
)
from .ladder import (
    LadderLevel,
    LadderResult,
    level_rhs,
    phi0,
    postprocess_at_T,
    q1_map,
    qk2_map,
    run_ladder,
    run_ladder_postprocessed,
)
from .reference import exact_special_solution, run_reference, single_mode_field
from .storage import (
    load_ladder_result,
    load_trajectory,
    read_field,
    save_ladder_result,
    save_trajectory,
    write_field,
)

__version__ = "0.1.0"
