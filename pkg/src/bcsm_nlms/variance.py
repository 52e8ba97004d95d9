"""Online regression-noise variance estimation from the observable error.

The observable a-priori error of a noisy-regressor filter carries three
parts: the residual mismatch, the output noise, and the regression-noise
leakage through the weights. Soft-thresholding the error suppresses the
output-noise part, and the ratio of the surviving error power to the
weight-vector power isolates the regression-noise variance:

    sigma_eta^2  =  E[shrunk_error^2] / E[||w||^2]

Both expectations are tracked with exponentially-weighted moving
averages, so the estimator is O(L) per sample and needs no buffering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["shrink_error", "NoiseVarianceEstimator"]


def shrink_error(error: float, threshold: float) -> float:
    """Soft-threshold ``error``: ``sign(e) * max(|e| - threshold, 0)``.

    ``sign(0) = 0``, so the output is continuous and odd in ``error``.
    """
    if not threshold >= 0.0:
        raise ValueError(f"threshold must be >= 0, got {threshold!r}")
    mag = abs(error) - threshold
    if mag <= 0.0:
        return 0.0
    return mag if error > 0.0 else -mag


@dataclass
class NoiseVarianceEstimator:
    """Running estimate of the regression-noise variance.

    Parameters
    ----------
    beta : float
        Forgetting factor of the moving averages, 0 < beta < 1.
        Values close to 1 average over roughly ``1 / (1 - beta)`` samples.
    threshold : float
        Shrinkage threshold applied to the raw error before squaring;
        set it near the output-noise standard deviation.
    wnorm_floor : float
        Guard on the averaged ``||w||^2``: below it the variance ratio is
        left untouched, which keeps the zero-initialized cold start from
        dividing by zero.

    The running state (``ef2_avg``, ``wnorm_avg``, ``sigma_eta_sq``)
    starts at zero and is only mutated by :meth:`update`. Single-writer:
    pair one estimator with one filter instance.
    """

    beta: float = 0.99
    threshold: float = 0.0
    wnorm_floor: float = 1e-6
    ef2_avg: float = 0.0
    wnorm_avg: float = 0.0
    sigma_eta_sq: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0, 1), got {self.beta!r}")
        if not self.threshold >= 0.0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold!r}")
        if not self.wnorm_floor > 0.0:
            raise ValueError(f"wnorm_floor must be > 0, got {self.wnorm_floor!r}")
        if self.ef2_avg < 0.0 or self.wnorm_avg < 0.0 or self.sigma_eta_sq < 0.0:
            raise ValueError("running moments must start non-negative")

    def update(self, error: float, weights) -> float:
        """Fold one sample into the moving averages and return the estimate.

        ``error`` is the filter's a-priori error for this sample and
        ``weights`` the post-update weight vector. Non-finite inputs are
        rejected rather than poisoning the running state.
        """
        w = np.asarray(weights, dtype=np.float64)
        if not math.isfinite(error):
            raise ValueError(f"error must be finite, got {error!r}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        s = shrink_error(error, self.threshold)
        self.ef2_avg = self.beta * self.ef2_avg + (1.0 - self.beta) * (s * s)
        self.wnorm_avg = self.beta * self.wnorm_avg + (1.0 - self.beta) * float(w @ w)
        if self.wnorm_avg > self.wnorm_floor:
            self.sigma_eta_sq = self.ef2_avg / self.wnorm_avg
        return self.sigma_eta_sq
