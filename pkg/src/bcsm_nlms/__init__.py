"""Set-membership NLMS adaptive filtering with bias compensation for
noisy regressors, plus a deterministic system-identification benchmark
harness."""

from .kernels import (
    FilterConfig,
    FilterState,
    StepOutcome,
    bcsm_nlms_step,
    bias_compensation_vector,
    compute_error,
    nlms_step,
    sm_nlms_step,
)
from .variance import NoiseVarianceEstimator, shrink_error
from .signals import (
    Ar1Input,
    FileInput,
    Scenario,
    TrialSignals,
    WhiteInput,
    derive_seed,
    generate_ar1,
    load_samples,
    noise_variance_for_snr,
    random_system,
    save_series,
    sliding_regressors,
    synthesize_trial,
)
from .harness import (
    AlgorithmSpec,
    BoundSpec,
    EstimatorSpec,
    LearningCurve,
    TrialRecord,
    compute_nmsd,
    compute_update_ratio,
    run_ensemble,
    run_trial,
    write_learning_curve_csv,
)

__version__ = "0.1.0"

__all__ = [
    "FilterConfig",
    "FilterState",
    "StepOutcome",
    "compute_error",
    "nlms_step",
    "sm_nlms_step",
    "bcsm_nlms_step",
    "bias_compensation_vector",
    "NoiseVarianceEstimator",
    "shrink_error",
    "Ar1Input",
    "WhiteInput",
    "FileInput",
    "Scenario",
    "TrialSignals",
    "derive_seed",
    "generate_ar1",
    "noise_variance_for_snr",
    "random_system",
    "load_samples",
    "sliding_regressors",
    "synthesize_trial",
    "save_series",
    "AlgorithmSpec",
    "BoundSpec",
    "EstimatorSpec",
    "LearningCurve",
    "TrialRecord",
    "compute_nmsd",
    "compute_update_ratio",
    "run_trial",
    "run_ensemble",
    "write_learning_curve_csv",
    "__version__",
]
