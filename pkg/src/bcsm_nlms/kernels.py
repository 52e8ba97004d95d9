"""Per-sample update rules for the NLMS family with set-membership gating.

Three step rules share one state layout:

* :func:`nlms_step` -- plain normalized LMS; adapts on every sample.
* :func:`sm_nlms_step` -- set-membership NLMS; adapts only when the
  a-priori error magnitude exceeds the bound ``error_bound``.
* :func:`bcsm_nlms_step` -- set-membership NLMS plus an additive
  bias-compensation vector that cancels the weight bias caused by
  noisy regressors (errors-in-variables setting). The compensation
  needs the regression-noise variance, either known or tracked online
  by :class:`bcsm_nlms.variance.NoiseVarianceEstimator`.

Weight vectors store taps oldest-first: ``w[j]`` multiplies the input
sample from ``L - 1 - j`` steps ago. The signal and harness modules use
the same layout, so the convention never leaks unless you build
regressors by hand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BOUND_MODES",
    "FilterConfig",
    "FilterState",
    "StepOutcome",
    "compute_error",
    "nlms_step",
    "sm_nlms_step",
    "bcsm_nlms_step",
    "bias_compensation_vector",
]

#: Treatment of the bound term inside the update. "symmetric" uses
#: ``e - error_bound * sign(e)``, consistent with the two-sided test
#: ``|e| > error_bound``; "literal" always subtracts the bound, which
#: over-corrects for errors below ``-error_bound`` and is kept only for
#: comparison.
BOUND_MODES = ("literal", "symmetric")


def _sign(x: float) -> float:
    """Sign with sign(0) = 0, keeping the symmetric bound continuous at zero."""
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@dataclass(frozen=True)
class FilterConfig:
    """Hyper-parameters shared by every step rule.

    Parameters
    ----------
    length : int
        Number of taps, >= 1.
    step_size : float
        Adaptation gain, > 0.
    error_bound : float
        Set-membership threshold, >= 0. Zero makes the gate always fire.
    regularizer : float
        Small positive constant added to ``||x||^2`` so all-zero
        regressors (silent stretches) never divide by zero.
    bound_mode : str
        One of :data:`BOUND_MODES`. Default "symmetric".
    """

    length: int
    step_size: float
    error_bound: float = 0.0
    regularizer: float = 1e-8
    bound_mode: str = "symmetric"

    def __post_init__(self) -> None:
        if int(self.length) != self.length or self.length < 1:
            raise ValueError(f"length must be a positive integer, got {self.length!r}")
        if not self.step_size > 0.0:
            raise ValueError(f"step_size must be > 0, got {self.step_size!r}")
        if not self.error_bound >= 0.0:
            raise ValueError(f"error_bound must be >= 0, got {self.error_bound!r}")
        if not self.regularizer > 0.0:
            raise ValueError(f"regularizer must be > 0, got {self.regularizer!r}")
        if self.bound_mode not in BOUND_MODES:
            raise ValueError(
                f"bound_mode must be one of {BOUND_MODES}, got {self.bound_mode!r}"
            )


class FilterState:
    """Adaptive weight vector plus its configuration.

    Instances are single-writer: run one step at a time per instance.
    Distinct instances share nothing and may live on distinct threads.
    """

    __slots__ = ("config", "weights")

    def __init__(self, config: FilterConfig, weights: np.ndarray | None = None):
        self.config = config
        if weights is None:
            self.weights = np.zeros(config.length)
        else:
            w = np.array(weights, dtype=np.float64)
            if w.shape != (config.length,):
                raise ValueError(
                    f"weights shape {w.shape} does not match length {config.length}"
                )
            if not np.all(np.isfinite(w)):
                raise ValueError("weights must be finite")
            self.weights = w

    def __repr__(self) -> str:
        return f"FilterState(config={self.config!r}, weights={self.weights!r})"


@dataclass(frozen=True)
class StepOutcome:
    """Per-sample result: a-priori error, whether the weights moved, and
    whether a bias-compensation vector was added (update branch only)."""

    error: float
    updated: bool
    compensation_applied: bool = False


def _as_regressor(x, length: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (length,):
        raise ValueError(f"regressor shape {x.shape} does not match length {length}")
    return x


def compute_error(state: FilterState, x, d: float) -> float:
    """A-priori error ``d - x . w`` for the current weights."""
    x = _as_regressor(x, state.config.length)
    return float(d - x @ state.weights)


def nlms_step(state: FilterState, x, d: float) -> StepOutcome:
    """Normalized LMS step: ``w += mu * e * x / (||x||^2 + reg)``.

    The bound is ignored; the weights move every call (``updated`` is
    always True, even when the error happens to be exactly zero).
    """
    cfg = state.config
    x = _as_regressor(x, cfg.length)
    e = float(d - x @ state.weights)
    den = float(x @ x) + cfg.regularizer
    state.weights += (cfg.step_size * e / den) * x
    return StepOutcome(error=e, updated=True)


def sm_nlms_step(state: FilterState, x, d: float) -> StepOutcome:
    """Set-membership NLMS step.

    Holds (weights untouched) while ``|e| <= error_bound``; otherwise
    applies the normalized update with the bound-shrunk error. With
    ``error_bound = 0`` the rule reduces to :func:`nlms_step`.
    """
    cfg = state.config
    x = _as_regressor(x, cfg.length)
    e = float(d - x @ state.weights)
    if not abs(e) > cfg.error_bound:
        return StepOutcome(error=e, updated=False)
    if cfg.bound_mode == "literal":
        alpha = e - cfg.error_bound
    else:
        alpha = e - cfg.error_bound * _sign(e)
    den = float(x @ x) + cfg.regularizer
    state.weights += (cfg.step_size * alpha / den) * x
    return StepOutcome(error=e, updated=True)


def bias_compensation_vector(
    state: FilterState, x, error: float, sigma_eta_sq: float
) -> np.ndarray:
    """Additive correction cancelling the expected update bias from noisy
    regressors.

    Returns ``mu * sigma_eta_sq * w / (||x||^2 + reg)
    + mu * error_bound * g(e) * x / (||x||^2 + reg)`` where ``g(e)`` is 1
    in literal mode and ``sign(e)`` in symmetric mode (so the bound term
    cancels against the update's bound shrinkage in either mode).

    ``sigma_eta_sq`` must be non-negative; estimators clamp before calling.
    """
    if not sigma_eta_sq >= 0.0:
        raise ValueError(f"sigma_eta_sq must be >= 0, got {sigma_eta_sq!r}")
    cfg = state.config
    x = _as_regressor(x, cfg.length)
    den = float(x @ x) + cfg.regularizer
    g = 1.0 if cfg.bound_mode == "literal" else _sign(error)
    return (cfg.step_size * sigma_eta_sq / den) * state.weights + (
        cfg.step_size * cfg.error_bound * g / den
    ) * x


def bcsm_nlms_step(
    state: FilterState, x, d: float, sigma_eta_sq: float
) -> StepOutcome:
    """Bias-compensated set-membership NLMS step.

    Identical to :func:`sm_nlms_step` on the hold branch; on the update
    branch it additionally adds :func:`bias_compensation_vector`. With
    ``sigma_eta_sq = 0`` and ``error_bound = 0`` the rule reduces to
    :func:`nlms_step`.
    """
    cfg = state.config
    x = _as_regressor(x, cfg.length)
    if not sigma_eta_sq >= 0.0:
        raise ValueError(f"sigma_eta_sq must be >= 0, got {sigma_eta_sq!r}")
    e = float(d - x @ state.weights)
    if not abs(e) > cfg.error_bound:
        return StepOutcome(error=e, updated=False, compensation_applied=False)
    if cfg.bound_mode == "literal":
        alpha = e - cfg.error_bound
    else:
        alpha = e - cfg.error_bound * _sign(e)
    den = float(x @ x) + cfg.regularizer
    xi = bias_compensation_vector(state, x, e, sigma_eta_sq)
    state.weights += (cfg.step_size * alpha / den) * x + xi
    return StepOutcome(error=e, updated=True, compensation_applied=True)
