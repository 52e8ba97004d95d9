"""Single-trial and ensemble runs of the adaptive filters, with NMSD
learning curves, steady-state statistics, and update ratios.

An :class:`AlgorithmSpec` names one filter variant and its parameters.
Error bounds and shrinkage thresholds may be stated as multiples of the
output-noise standard deviation, in which case they are resolved against
each trial's injected noise level. Trials are pure functions of
``(Scenario, AlgorithmSpec)``; ensembles derive per-trial seeds from the
scenario's master seed, so the same master seed reproduces a run bit for
bit regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import _engine
from .kernels import (
    BOUND_MODES,
    FilterConfig,
    FilterState,
    bcsm_nlms_step,
    nlms_step,
    sm_nlms_step,
)
from .signals import (
    Scenario,
    TrialSignals,
    derive_seed,
    sliding_regressors,
    synthesize_trial,
)
from .variance import NoiseVarianceEstimator

__all__ = [
    "ALGORITHM_KINDS",
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
]

ALGORITHM_KINDS = ("nlms", "sm_nlms", "bcsm_known", "bcsm_estimated")

#: dB floor standing in for -inf when the weight deviation is exactly zero.
NMSD_FLOOR_DB = -320.0

#: Fraction of final iterations averaged into the steady-state figure.
STEADY_STATE_WINDOW = 0.1

#: Spawn-key namespace for per-trial seeds (the system draw uses 1).
_TRIAL_KEY = 0


@dataclass(frozen=True)
class BoundSpec:
    """An error-domain magnitude, absolute or scaled by the trial's
    output-noise standard deviation."""

    value: float
    relative_to_sigma_v: bool = False

    def __post_init__(self) -> None:
        if not self.value >= 0.0:
            raise ValueError(f"bound value must be >= 0, got {self.value!r}")

    @classmethod
    def absolute(cls, value: float) -> "BoundSpec":
        return cls(value=value, relative_to_sigma_v=False)

    @classmethod
    def sigma_v_multiple(cls, multiple: float) -> "BoundSpec":
        return cls(value=multiple, relative_to_sigma_v=True)

    def resolve(self, sigma_v: float) -> float:
        return self.value * sigma_v if self.relative_to_sigma_v else self.value


@dataclass(frozen=True)
class EstimatorSpec:
    """Parameters of the online variance estimator used by bcsm_estimated."""

    beta: float = 0.99
    threshold: BoundSpec = BoundSpec(0.0)
    wnorm_floor: float = 1e-6


@dataclass(frozen=True)
class AlgorithmSpec:
    """One algorithm variant of the benchmark.

    ``kind`` selects the update rule; the remaining fields must match it:
    ``error_bound`` is required for the set-membership kinds and must be
    absent for plain nlms, ``estimator`` only accompanies bcsm_estimated,
    and ``known_variance`` only bcsm_known (None means "use the trial's
    injected regression-noise variance"). ``length``, when given, must
    agree with the scenario it is run against.
    """

    kind: str
    step_size: float
    error_bound: BoundSpec | None = None
    regularizer: float = 1e-8
    bound_mode: str = "symmetric"
    estimator: EstimatorSpec | None = None
    known_variance: float | None = None
    length: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ALGORITHM_KINDS:
            raise ValueError(f"kind must be one of {ALGORITHM_KINDS}, got {self.kind!r}")
        if not self.step_size > 0.0:
            raise ValueError(f"step_size must be > 0, got {self.step_size!r}")
        if self.bound_mode not in BOUND_MODES:
            raise ValueError(f"bound_mode must be one of {BOUND_MODES}")
        if self.kind == "nlms":
            if self.error_bound is not None:
                raise ValueError("nlms takes no error_bound")
        elif self.error_bound is None:
            raise ValueError(f"{self.kind} requires an error_bound")
        if self.kind == "bcsm_estimated":
            if self.estimator is None:
                object.__setattr__(self, "estimator", EstimatorSpec())
        elif self.estimator is not None:
            raise ValueError("estimator config is only valid for bcsm_estimated")
        if self.known_variance is not None:
            if self.kind != "bcsm_known":
                raise ValueError("known_variance is only valid for bcsm_known")
            if not self.known_variance >= 0.0:
                raise ValueError("known_variance must be >= 0")


@dataclass(eq=False)
class TrialRecord:
    """Per-iteration stream of one trial.

    ``deviation_sq[i]`` is the squared weight deviation after iteration
    ``i``'s (possibly held) update; ``sigma_eta_hat`` is only present for
    bcsm_estimated. Resolved per-trial values of the bound, threshold,
    and injected variances ride along for diagnostics.
    """

    deviation_sq: np.ndarray
    updated: np.ndarray
    sigma_eta_hat: np.ndarray | None
    final_weights: np.ndarray
    sigma_eta_sq: float
    sigma_v_sq: float
    error_bound: float
    threshold: float | None


@dataclass(eq=False)
class LearningCurve:
    """Ensemble result: per-iteration NMSD plus summary statistics.

    ``nmsd_db`` averages squared deviations across trials *before* the
    log. ``sigma_eta_hat`` is the ensemble-mean estimator trajectory
    (None unless the algorithm estimates), and ``sigma_eta_true`` /
    ``sigma_v_true`` are the injected variances averaged over trials.
    """

    nmsd_db: np.ndarray
    update_ratio: float
    steady_state_db: float
    trials: int
    mean_final_weights: np.ndarray
    sigma_eta_hat: np.ndarray | None
    sigma_eta_true: float
    sigma_v_true: float


def _deviation_to_db(ratio) -> np.ndarray:
    ratio = np.asarray(ratio, dtype=np.float64)
    return np.maximum(10.0 * np.log10(np.maximum(ratio, 1e-32)), NMSD_FLOOR_DB)


def compute_nmsd(w, w_o) -> float:
    """Normalized mean-square deviation, ``10 log10(||w - w_o||^2 / ||w_o||^2)``.

    Exact agreement returns the :data:`NMSD_FLOOR_DB` sentinel instead of
    negative infinity.
    """
    w = np.asarray(w, dtype=np.float64)
    w_o = np.asarray(w_o, dtype=np.float64)
    if w.shape != w_o.shape:
        raise ValueError(f"shape mismatch: {w.shape} vs {w_o.shape}")
    denom = float(w_o @ w_o)
    if denom == 0.0:
        raise ValueError("reference system must be nonzero")
    dev = w - w_o
    return float(_deviation_to_db(float(dev @ dev) / denom))


def compute_update_ratio(updated_flags) -> float:
    """Fraction of iterations whose bound test fired."""
    flags = np.asarray(updated_flags, dtype=bool)
    if flags.size == 0:
        raise ValueError("update ratio of an empty series is undefined")
    return float(np.mean(flags))


def _steady_state(nmsd_db: np.ndarray) -> float:
    window = max(1, int(len(nmsd_db) * STEADY_STATE_WINDOW))
    return float(np.mean(nmsd_db[-window:]))


def _resolve_trial_params(algo: AlgorithmSpec, sig: TrialSignals):
    sigma_v = math.sqrt(sig.sigma_v_sq)
    gamma = algo.error_bound.resolve(sigma_v) if algo.error_bound is not None else 0.0
    tau = None
    if algo.kind == "bcsm_estimated":
        tau = algo.estimator.threshold.resolve(sigma_v)
    sigma_known = 0.0
    if algo.kind == "bcsm_known":
        sigma_known = (
            algo.known_variance if algo.known_variance is not None else sig.sigma_eta_sq
        )
    return gamma, tau, sigma_known


def _run_reference(X, d, w_o, algo, gamma, tau, sigma_known):
    n = X.shape[0]
    cfg = FilterConfig(
        length=X.shape[1],
        step_size=algo.step_size,
        error_bound=gamma,
        regularizer=algo.regularizer,
        bound_mode=algo.bound_mode,
    )
    state = FilterState(cfg)
    estimating = algo.kind == "bcsm_estimated"
    est = None
    if estimating:
        est = NoiseVarianceEstimator(
            beta=algo.estimator.beta,
            threshold=tau,
            wnorm_floor=algo.estimator.wnorm_floor,
        )
    deviation_sq = np.empty(n)
    updated = np.empty(n, dtype=np.bool_)
    sigma_hat = np.zeros(n) if estimating else None
    for i in range(n):
        x = X[i]
        if algo.kind == "nlms":
            out = nlms_step(state, x, d[i])
        elif algo.kind == "sm_nlms":
            out = sm_nlms_step(state, x, d[i])
        elif algo.kind == "bcsm_known":
            out = bcsm_nlms_step(state, x, d[i], sigma_known)
        else:
            out = bcsm_nlms_step(state, x, d[i], est.sigma_eta_sq)
            sigma_hat[i] = est.update(out.error, state.weights)
        updated[i] = out.updated
        dev = state.weights - w_o
        deviation_sq[i] = float(dev @ dev)
    return deviation_sq, updated, sigma_hat, state.weights


def _resolve_engine(engine: str) -> str:
    if engine == "auto":
        return "fast" if _engine.HAVE_NUMBA else "reference"
    if engine not in ("fast", "reference"):
        raise ValueError(f"engine must be auto, fast, or reference, got {engine!r}")
    return engine


def run_trial(
    scenario: Scenario, algo: AlgorithmSpec, engine: str = "auto"
) -> TrialRecord:
    """Run one trial and record the per-iteration stream.

    Each iteration forms the sliding regressor from the noisy input, runs
    the selected step rule, then (for bcsm_estimated) feeds the error and
    post-update weights to the variance estimator, so the estimate used
    at step ``n`` always comes from step ``n - 1``.
    """
    if algo.length is not None and algo.length != scenario.length:
        raise ValueError(
            f"algorithm length {algo.length} does not match scenario length "
            f"{scenario.length}"
        )
    engine = _resolve_engine(engine)
    sig = synthesize_trial(scenario)
    gamma, tau, sigma_known = _resolve_trial_params(algo, sig)
    X = sliding_regressors(sig.noisy_input, scenario.length)
    w_o = scenario.system
    if engine == "fast":
        kind = {
            "nlms": _engine.KIND_NLMS,
            "sm_nlms": _engine.KIND_SM_NLMS,
            "bcsm_known": _engine.KIND_BCSM,
            "bcsm_estimated": _engine.KIND_BCSM,
        }[algo.kind]
        estimating = algo.kind == "bcsm_estimated"
        deviation_sq, updated, sigma_hat, final = _engine.run_trial_fast(
            X,
            sig.desired,
            w_o,
            mu=algo.step_size,
            gamma=gamma,
            eps=algo.regularizer,
            literal_mode=algo.bound_mode == "literal",
            kind=kind,
            sigma_known=sigma_known,
            use_estimator=estimating,
            beta=algo.estimator.beta if estimating else 0.99,
            tau=tau if tau is not None else 0.0,
            wnorm_floor=algo.estimator.wnorm_floor if estimating else 1e-6,
        )
    else:
        deviation_sq, updated, sigma_hat, final = _run_reference(
            X, sig.desired, w_o, algo, gamma, tau, sigma_known
        )
    return TrialRecord(
        deviation_sq=deviation_sq,
        updated=updated,
        sigma_eta_hat=sigma_hat,
        final_weights=final,
        sigma_eta_sq=sig.sigma_eta_sq,
        sigma_v_sq=sig.sigma_v_sq,
        error_bound=gamma,
        threshold=tau,
    )


def _trial_worker(args):
    scenario, algo, engine = args
    return run_trial(scenario, algo, engine)


def run_ensemble(
    scenario: Scenario,
    algo: AlgorithmSpec,
    trials: int,
    engine: str = "auto",
    workers: int | None = 1,
    trial_seeds: Sequence[int] | None = None,
) -> LearningCurve:
    """Average ``trials`` independent trials into a learning curve.

    Per-trial seeds derive from ``scenario.seed`` unless ``trial_seeds``
    overrides them. Squared deviations are averaged across trials before
    conversion to dB. ``workers`` > 1 runs trials in separate processes;
    aggregation always happens in trial order, so results are identical
    for any worker count.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials!r}")
    if trial_seeds is None:
        seeds = [derive_seed(scenario.seed, _TRIAL_KEY, t) for t in range(trials)]
    else:
        seeds = [int(s) for s in trial_seeds]
        if len(seeds) != trials:
            raise ValueError(f"expected {trials} trial seeds, got {len(seeds)}")
    scenarios = [replace(scenario, seed=s) for s in seeds]

    if workers is None:
        import os

        workers = min(trials, os.cpu_count() or 1)
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=min(workers, trials)) as pool:
            records = list(
                pool.map(
                    _trial_worker,
                    [(s, algo, engine) for s in scenarios],
                    chunksize=max(1, trials // (4 * workers)),
                )
            )
    else:
        records = [run_trial(s, algo, engine) for s in scenarios]

    numerators = np.stack([r.deviation_sq for r in records])
    denom = float(scenario.system @ scenario.system)
    nmsd_db = _deviation_to_db(numerators.mean(axis=0) / denom)
    ratios = [compute_update_ratio(r.updated) for r in records]
    estimating = records[0].sigma_eta_hat is not None
    sigma_hat = (
        np.stack([r.sigma_eta_hat for r in records]).mean(axis=0) if estimating else None
    )
    return LearningCurve(
        nmsd_db=nmsd_db,
        update_ratio=float(np.mean(ratios)),
        steady_state_db=_steady_state(nmsd_db),
        trials=trials,
        mean_final_weights=np.stack([r.final_weights for r in records]).mean(axis=0),
        sigma_eta_hat=sigma_hat,
        sigma_eta_true=float(np.mean([r.sigma_eta_sq for r in records])),
        sigma_v_true=float(np.mean([r.sigma_v_sq for r in records])),
    )


def write_learning_curve_csv(path, curve: LearningCurve) -> None:
    """Write ``iteration,nmsd_db[,sigma_eta_hat]`` rows, 17 significant digits."""
    with open(path, "w", newline="") as fh:
        if curve.sigma_eta_hat is None:
            fh.write("iteration,nmsd_db\n")
            for i, v in enumerate(curve.nmsd_db):
                fh.write(f"{i},{v:.17g}\n")
        else:
            fh.write("iteration,nmsd_db,sigma_eta_hat\n")
            for i, (v, s) in enumerate(zip(curve.nmsd_db, curve.sigma_eta_hat)):
                fh.write(f"{i},{v:.17g},{s:.17g}\n")
