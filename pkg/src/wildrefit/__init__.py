"""Risk bounds for black-box regression predictors from refits on sign-flipped residuals."""

__version__ = "0.1.0"

from .bounds import (
    Crossing,
    NonMonotoneWarning,
    OracleDiagnostics,
    RhoSweepPoint,
    RiskReport,
    Selection,
    UnreachableTargetError,
    calibrate_rho,
    default_rho_grid,
    find_crossing,
    model_select,
    mse_upper_bound,
    optimism_bound_check,
    oracle_diagnostics,
    refine_crossing,
    rho_sweep,
    risk_report,
    wild_complexity_at,
)
from .core import (
    EmpiricalGeometry,
    InvalidInputError,
    MethodError,
    NumericError,
    PredictorMethod,
    WildRefitError,
    apply_method,
    constant_method,
    emp_inner,
    emp_norm,
    identity_method,
)
from .datagen import NoiseSpec, NrsfmScene, SignalSpec, draw_noise, make_nrsfm_scene, make_signal
from .predictors import (
    CameraMatrix,
    NuclearBallParams,
    TikhonovParams,
    TVParams,
    check_firm_nonexpansive,
    nuclear_ball_ls,
    nuclear_ball_method,
    project_nuclear_ball,
    projection_predictor,
    tikhonov_ball_method,
    tikhonov_fit,
    tikhonov_method,
    tv_ball_method,
    tv_fit,
    tv_method,
)
from .wild import (
    WildConfig,
    WildReplicate,
    compute_residuals,
    draw_signs,
    run_wild_replicate,
    wild_optimism,
    wild_responses,
)
