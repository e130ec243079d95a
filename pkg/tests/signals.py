"""Deterministic test-signal builders shared by the test suite."""

import numpy as np

from subwave.audio import AudioBuffer
from subwave.wavelet import wavedec, waverec


def make_speechlike(seconds=3.0, fs=44100, seed=11, peak=0.4) -> AudioBuffer:
    """Speech-shaped synthetic signal: gliding pitch harmonics with a
    syllable-rate envelope plus gated fricative-like noise bursts."""
    rng = np.random.default_rng(seed)
    n = int(seconds * fs)
    t = np.arange(n) / fs
    f0 = 165 + 30 * np.sin(2 * np.pi * 0.7 * t)
    phase = 2 * np.pi * np.cumsum(f0) / fs
    voiced = np.zeros(n)
    for k in range(1, 26):
        amp = 1.0 / (1 + 0.22 * k ** 1.5)
        voiced += amp * np.sin(k * phase + rng.uniform(0, 2 * np.pi))
    envelope = 0.5 + 0.5 * np.clip(np.sin(2 * np.pi * 3.1 * t) + 0.4, 0, 1)
    voiced *= envelope
    hiss = np.diff(rng.standard_normal(n), prepend=0.0)  # crude high-pass
    gate = (np.sin(2 * np.pi * 1.3 * t + 1.0) > 0.82).astype(float)
    sig = voiced + 0.35 * hiss * gate
    sig *= peak / np.max(np.abs(sig))
    return AudioBuffer(sig, fs)


def make_babble(seconds=3.0, fs=44100, seed=40, voices=5, peak=0.4) -> AudioBuffer:
    """Multi-talker babble: several speechlike signals summed."""
    rng = np.random.default_rng(seed)
    n = int(seconds * fs)
    total = np.zeros(n)
    for v in range(voices):
        voice = make_speechlike(seconds, fs, seed=int(rng.integers(1, 1 << 30)), peak=1.0)
        total += voice.samples * rng.uniform(0.5, 1.0)
    total *= peak / np.max(np.abs(total))
    return AudioBuffer(total, fs)


def make_band_balanced(n=24000, fs=8000, seed=5, peak=0.4) -> AudioBuffer:
    """Signal whose six sub-band energies are (nearly) equal: decompose
    white noise, rescale every band to unit energy, reconstruct."""
    rng = np.random.default_rng(seed)
    x = AudioBuffer(rng.standard_normal(n), fs)
    sb = wavedec(x, 5)
    bands = {k: v / np.sqrt(v @ v) for k, v in sb.bands.items()}
    y = waverec(sb.with_bands(bands)).samples
    y = y * (peak / np.max(np.abs(y)))
    return AudioBuffer(y, fs)


def make_tone(freq_hz, seconds=1.0, fs=44100, amplitude=0.5) -> AudioBuffer:
    t = np.arange(int(seconds * fs)) / fs
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq_hz * t), fs)
