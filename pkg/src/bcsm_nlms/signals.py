"""Deterministic signal generation and ingestion for noisy-input
system-identification experiments.

A :class:`Scenario` fully describes one trial: the true system, the input
process (AR(1), white noise, or a user-supplied sample file), the
input/output SNRs, the trial length, and a seed. :func:`synthesize_trial`
turns it into concrete series; everything is a pure function of the
scenario, so identical scenarios give bit-identical signals.

Noise levels are set against empirical powers: the input SNR is measured
against the clean input ``x`` and the output SNR against the clean system
output ``y = x * w``, which keeps requested SNRs meaningful for inputs of
any scale (including peak-normalized audio).
"""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "Ar1Input",
    "WhiteInput",
    "FileInput",
    "InputSpec",
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
]


@dataclass(frozen=True)
class Ar1Input:
    """First-order autoregressive input ``x[n] = pole * x[n-1] + u[n]``.

    ``drive_variance`` is the white-drive variance; the default
    ``1 - pole**2`` yields unit stationary power.
    """

    pole: float
    drive_variance: float | None = None

    def __post_init__(self) -> None:
        if not abs(self.pole) < 1.0:
            raise ValueError(f"AR(1) pole must satisfy |pole| < 1, got {self.pole!r}")
        if self.drive_variance is not None and not self.drive_variance > 0.0:
            raise ValueError(
                f"drive_variance must be > 0, got {self.drive_variance!r}"
            )

    @property
    def effective_drive_variance(self) -> float:
        if self.drive_variance is not None:
            return self.drive_variance
        return 1.0 - self.pole * self.pole


@dataclass(frozen=True)
class WhiteInput:
    """White Gaussian input with the given variance."""

    variance: float = 1.0

    def __post_init__(self) -> None:
        if not self.variance > 0.0:
            raise ValueError(f"variance must be > 0, got {self.variance!r}")


@dataclass(frozen=True)
class FileInput:
    """Input read from a sample file (16-bit PCM WAV or one-column CSV)."""

    path: str
    channel: int = 0


InputSpec = Union[Ar1Input, WhiteInput, FileInput]


@dataclass(frozen=True, eq=False)
class Scenario:
    """One system-identification trial, fully determined by its fields.

    ``input_snr_db`` / ``output_snr_db`` of ``None`` mean no injected
    noise on that side. ``seed`` drives three independent substreams
    (input, input noise, output noise).
    """

    system: np.ndarray
    input_spec: InputSpec
    n_samples: int
    seed: int
    input_snr_db: float | None = None
    output_snr_db: float | None = None

    def __post_init__(self) -> None:
        w = np.asarray(self.system, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("system must be a non-empty 1-D weight vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("system weights must be finite")
        object.__setattr__(self, "system", w)
        if int(self.n_samples) != self.n_samples or self.n_samples < w.size:
            raise ValueError(
                f"n_samples must be an integer >= filter length {w.size}, "
                f"got {self.n_samples!r}"
            )
        for name in ("input_snr_db", "output_snr_db"):
            v = getattr(self, name)
            if v is not None and math.isnan(v):
                raise ValueError(f"{name} must not be NaN")

    @property
    def length(self) -> int:
        return int(self.system.size)


@dataclass(frozen=True, eq=False)
class TrialSignals:
    """Concrete series for one trial plus the injected noise variances.

    ``desired - clean_output`` is exactly the injected output noise, and
    ``noisy_input - clean_input`` exactly the injected regression noise.
    """

    clean_input: np.ndarray
    noisy_input: np.ndarray
    clean_output: np.ndarray
    desired: np.ndarray
    sigma_eta_sq: float
    sigma_v_sq: float


def sliding_regressors(series, length: int) -> np.ndarray:
    """Row ``n`` holds ``series[n-length+1 .. n]`` (oldest-first taps),
    zero-padded before the first sample. Returns a view, not a copy."""
    series = np.asarray(series, dtype=np.float64)
    padded = np.concatenate([np.zeros(length - 1), series])
    return np.lib.stride_tricks.sliding_window_view(padded, length)


def derive_seed(master: int, *key: int) -> int:
    """Deterministic 64-bit child seed for (master, key path).

    Distinct key paths give independent, well-mixed streams; used for
    per-trial seeds and for drawing the random system of a run.
    """
    ss = np.random.SeedSequence(master, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0])


def generate_ar1(pole: float, drive_variance: float, n: int, seed) -> np.ndarray:
    """AR(1) series ``x[n] = pole * x[n-1] + u[n]`` with ``x[-1] = 0``.

    ``u`` is white Gaussian with variance ``drive_variance``; ``seed``
    may be anything :func:`numpy.random.default_rng` accepts.
    """
    if not abs(pole) < 1.0:
        raise ValueError(f"AR(1) pole must satisfy |pole| < 1, got {pole!r}")
    if not drive_variance > 0.0:
        raise ValueError(f"drive_variance must be > 0, got {drive_variance!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    rng = np.random.default_rng(seed)
    u = rng.normal(0.0, math.sqrt(drive_variance), size=n)
    return lfilter([1.0], [1.0, -pole], u)


def noise_variance_for_snr(signal_power: float, snr_db: float) -> float:
    """Noise variance giving the requested SNR against ``signal_power``."""
    if not signal_power >= 0.0:
        raise ValueError(f"signal_power must be >= 0, got {signal_power!r}")
    return signal_power / (10.0 ** (snr_db / 10.0))


def random_system(length: int, seed) -> np.ndarray:
    """Random unknown system: i.i.d. standard-normal taps, unit-normalized.

    Unit norm pins the misalignment at 0 dB for zero-initialized filters,
    making learning curves comparable across seeds.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length!r}")
    rng = np.random.default_rng(seed)
    while True:
        w = rng.standard_normal(length)
        norm = float(np.linalg.norm(w))
        if norm > 0.0:
            return w / norm


def load_samples(path, channel: int = 0) -> np.ndarray:
    """Read a sample file and scale it to unit peak magnitude.

    Supports 16-bit PCM WAV (mono or multi-channel; ``channel`` selects
    one) and single-column CSV/TXT of floats. PCM values are first mapped
    to [-1, 1) by dividing by 32768, then peak-normalized like any other
    source.
    """
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"sample file not found: {p}")
    suffix = p.suffix.lower()
    if suffix == ".wav":
        data = _read_wav_pcm16(p, channel)
    elif suffix in (".csv", ".txt"):
        if channel != 0:
            raise ValueError(f"CSV input has a single column; channel {channel} invalid")
        data = _read_float_column(p)
    else:
        raise ValueError(f"unsupported sample format {suffix!r} (expected .wav or .csv)")
    if data.size == 0:
        raise ValueError(f"sample file is empty: {p}")
    peak = float(np.max(np.abs(data)))
    if peak > 0.0:
        data = data / peak
    return data


def _read_wav_pcm16(p: Path, channel: int) -> np.ndarray:
    with wave.open(str(p), "rb") as wf:
        if wf.getsampwidth() != 2 or wf.getcomptype() != "NONE":
            raise ValueError(f"{p}: only uncompressed 16-bit PCM WAV is supported")
        n_channels = wf.getnchannels()
        if not 0 <= channel < n_channels:
            raise ValueError(
                f"{p}: channel {channel} out of range for {n_channels}-channel file"
            )
        frames = wf.readframes(wf.getnframes())
    samples = np.frombuffer(frames, dtype="<i2").reshape(-1, n_channels)
    return samples[:, channel].astype(np.float64) / 32768.0


def _read_float_column(p: Path) -> np.ndarray:
    try:
        data = np.loadtxt(p, dtype=np.float64, ndmin=1)
    except ValueError as exc:
        raise ValueError(f"{p}: could not parse as one float per line ({exc})") from exc
    if data.ndim != 1:
        raise ValueError(f"{p}: expected a single column, got shape {data.shape}")
    return data


def synthesize_trial(scenario: Scenario) -> TrialSignals:
    """Build the clean input, noisy input, and desired output of a trial.

    The clean output is ``y[n] = sum_j w[j] * x[n - (L-1-j)]`` over the
    same zero-padded sliding regressors the filters see (taps
    oldest-first). Input and output noises are independent white Gaussian
    streams seeded from ``scenario.seed``; their variances are set
    against the empirical powers of ``x`` and ``y`` respectively.
    """
    n = int(scenario.n_samples)
    input_ss, eta_ss, v_ss = np.random.SeedSequence(scenario.seed).spawn(3)

    spec = scenario.input_spec
    if isinstance(spec, Ar1Input):
        x = generate_ar1(spec.pole, spec.effective_drive_variance, n, input_ss)
    elif isinstance(spec, WhiteInput):
        rng = np.random.default_rng(input_ss)
        x = rng.normal(0.0, math.sqrt(spec.variance), size=n)
    elif isinstance(spec, FileInput):
        samples = load_samples(spec.path, spec.channel)
        if samples.size < n:
            raise ValueError(
                f"sample file {spec.path} has {samples.size} samples; "
                f"scenario needs {n}"
            )
        x = samples[:n].copy()
    else:
        raise TypeError(f"unsupported input spec: {spec!r}")

    y = sliding_regressors(x, scenario.length) @ scenario.system

    if scenario.input_snr_db is None:
        sigma_eta_sq = 0.0
        xbar = x.copy()
    else:
        sigma_eta_sq = noise_variance_for_snr(
            float(np.mean(x * x)), scenario.input_snr_db
        )
        eta = np.random.default_rng(eta_ss).normal(0.0, math.sqrt(sigma_eta_sq), size=n)
        xbar = x + eta

    if scenario.output_snr_db is None:
        sigma_v_sq = 0.0
        d = y.copy()
    else:
        sigma_v_sq = noise_variance_for_snr(
            float(np.mean(y * y)), scenario.output_snr_db
        )
        v = np.random.default_rng(v_ss).normal(0.0, math.sqrt(sigma_v_sq), size=n)
        d = y + v

    return TrialSignals(
        clean_input=x,
        noisy_input=xbar,
        clean_output=y,
        desired=d,
        sigma_eta_sq=sigma_eta_sq,
        sigma_v_sq=sigma_v_sq,
    )


def save_series(path, series) -> None:
    """Write a series as CSV, one float per line, 17 significant digits."""
    data = np.asarray(series, dtype=np.float64)
    if data.ndim != 1:
        raise ValueError(f"expected a 1-D series, got shape {data.shape}")
    np.savetxt(path, data, fmt="%.17g")
