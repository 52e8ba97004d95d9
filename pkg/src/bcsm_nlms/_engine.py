"""Compiled fast path for whole-trial filter runs.

The step functions in :mod:`bcsm_nlms.kernels` are the reference
implementation. This module replays the same per-sample arithmetic inside
a single numba-compiled loop so Monte-Carlo ensembles stay cheap on one
core. The two paths are interchangeable and pinned together by tests;
without numba the harness silently falls back to the reference loop.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        return wrap


KIND_NLMS = 0
KIND_SM_NLMS = 1
KIND_BCSM = 2


@njit(cache=True)
def _trial_loop(
    X,
    d,
    w_o,
    mu,
    gamma,
    eps,
    literal_mode,
    kind,
    sigma_known,
    use_estimator,
    beta,
    tau,
    wnorm_floor,
    deviation_sq,
    updated,
    sigma_hat,
):
    n, L = X.shape
    w = np.zeros(L)
    ef2_avg = 0.0
    wnorm_avg = 0.0
    sigma = 0.0 if use_estimator else sigma_known
    for i in range(n):
        dot_xw = 0.0
        dot_xx = 0.0
        for j in range(L):
            dot_xw += X[i, j] * w[j]
            dot_xx += X[i, j] * X[i, j]
        e = d[i] - dot_xw
        den = dot_xx + eps
        did_update = False
        if kind == KIND_NLMS:
            coeff = mu * e / den
            for j in range(L):
                w[j] = w[j] + coeff * X[i, j]
            did_update = True
        elif kind == KIND_SM_NLMS:
            if abs(e) > gamma:
                if literal_mode:
                    alpha = e - gamma
                else:
                    sg = 1.0 if e > 0.0 else (-1.0 if e < 0.0 else 0.0)
                    alpha = e - gamma * sg
                coeff = mu * alpha / den
                for j in range(L):
                    w[j] = w[j] + coeff * X[i, j]
                did_update = True
        else:
            if abs(e) > gamma:
                sg = 1.0 if e > 0.0 else (-1.0 if e < 0.0 else 0.0)
                if literal_mode:
                    alpha = e - gamma
                    g = 1.0
                else:
                    alpha = e - gamma * sg
                    g = sg
                coeff = mu * alpha / den
                a = mu * sigma / den
                b = mu * gamma * g / den
                for j in range(L):
                    w[j] = w[j] + ((coeff * X[i, j]) + ((a * w[j]) + (b * X[i, j])))
                did_update = True
        if use_estimator:
            mag = abs(e) - tau
            if mag <= 0.0:
                shrunk = 0.0
            else:
                shrunk = mag if e > 0.0 else -mag
            dot_ww = 0.0
            for j in range(L):
                dot_ww += w[j] * w[j]
            ef2_avg = beta * ef2_avg + (1.0 - beta) * (shrunk * shrunk)
            wnorm_avg = beta * wnorm_avg + (1.0 - beta) * dot_ww
            if wnorm_avg > wnorm_floor:
                sigma = ef2_avg / wnorm_avg
            sigma_hat[i] = sigma
        updated[i] = did_update
        acc = 0.0
        for j in range(L):
            dev = w[j] - w_o[j]
            acc += dev * dev
        deviation_sq[i] = acc
    return w


def run_trial_fast(
    X,
    d,
    w_o,
    *,
    mu,
    gamma,
    eps,
    literal_mode,
    kind,
    sigma_known=0.0,
    use_estimator=False,
    beta=0.99,
    tau=0.0,
    wnorm_floor=1e-6,
):
    """Run one whole trial through the compiled loop.

    Returns ``(deviation_sq, updated, sigma_hat, final_weights)`` where
    ``sigma_hat`` is None unless ``use_estimator``.
    """
    if not HAVE_NUMBA:
        raise RuntimeError("fast engine requested but numba is not installed")
    n = X.shape[0]
    deviation_sq = np.empty(n)
    updated = np.empty(n, dtype=np.bool_)
    sigma_hat = np.zeros(n) if use_estimator else np.zeros(0)
    final = _trial_loop(
        X,
        np.ascontiguousarray(d, dtype=np.float64),
        np.ascontiguousarray(w_o, dtype=np.float64),
        float(mu),
        float(gamma),
        float(eps),
        bool(literal_mode),
        int(kind),
        float(sigma_known),
        bool(use_estimator),
        float(beta),
        float(tau),
        float(wnorm_floor),
        deviation_sq,
        updated,
        sigma_hat,
    )
    return deviation_sq, updated, (sigma_hat if use_estimator else None), final
