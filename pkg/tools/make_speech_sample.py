#!/usr/bin/env python3
"""Regenerate the bundled speech-like test sample.

Builds ~1.5 s of 16 kHz audio alternating voiced segments (harmonic
stacks with pitch glides and hann-ish envelopes), unvoiced noise bursts,
and silent gaps, then writes it as mono 16-bit PCM. Deterministic, so the
checked-in file can always be reproduced:

    python tools/make_speech_sample.py src/bcsm_nlms/data/speech_like.wav
"""

import sys
import wave
from pathlib import Path

import numpy as np

RATE = 16000
SEED = 424242


def voiced(rng, n, f0_start, f0_end):
    t = np.arange(n) / RATE
    f0 = np.linspace(f0_start, f0_end, n)
    phase = 2 * np.pi * np.cumsum(f0) / RATE
    out = np.zeros(n)
    for k in range(1, 9):
        out += np.sin(k * phase + rng.uniform(0, 2 * np.pi)) / k
    env = np.sin(np.linspace(0, np.pi, n)) ** 0.7
    return out * env


def unvoiced(rng, n):
    noise = rng.standard_normal(n)
    hp = np.diff(noise, prepend=0.0)  # crude high-pass for a fricative feel
    env = np.sin(np.linspace(0, np.pi, n)) ** 2
    return 0.35 * hp * env


def silence(n):
    return np.zeros(n)


def build():
    rng = np.random.default_rng(SEED)
    pieces = [
        silence(400),
        voiced(rng, 3600, 120, 150),
        silence(900),
        unvoiced(rng, 1400),
        voiced(rng, 4200, 180, 130),
        silence(1400),
        voiced(rng, 3000, 110, 110),
        unvoiced(rng, 1100),
        silence(700),
        voiced(rng, 4600, 140, 200),
        silence(1000),
        unvoiced(rng, 1300),
        voiced(rng, 209 * 16, 160, 120),
    ]
    x = np.concatenate(pieces)
    x = 0.9 * x / np.max(np.abs(x))
    return np.round(x * 32767.0).astype(np.int16)


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "speech_like.wav")
    samples = build()
    with wave.open(str(out), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(RATE)
        wf.writeframes(samples.tobytes())
    print(f"wrote {out} ({samples.size} samples, {samples.size / RATE:.2f} s)")


if __name__ == "__main__":
    main()
