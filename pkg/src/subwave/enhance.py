"""Per-band gain enhancement at constant signal energy.

The pipeline: decompose, multiply each band by its gain, reconstruct,
rescale to the input energy, then limit peaks only if the rescaled signal
would clip. Energy is not re-normalized after the limiter engages; the
deviation is reported in a log record instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer
from .errors import DegenerateSignalError
from .wavelet import MODE_PERIODIC, SubbandSet, wavedec, waverec

log = logging.getLogger(__name__)

BAND_COUNT = 5 + 1  # level-5 split: one approximation plus five detail bands


@dataclass(frozen=True)
class GainVector:
    """Six non-negative multipliers ordered low to high frequency (cA5..cD1)."""

    gains: tuple

    def __post_init__(self):
        gains = tuple(float(g) for g in self.gains)
        if len(gains) != BAND_COUNT:
            raise ValueError(f"expected {BAND_COUNT} gains, got {len(gains)}")
        if any(not np.isfinite(g) or g < 0 for g in gains):
            raise ValueError("gains must be finite and non-negative")
        object.__setattr__(self, "gains", gains)

    @classmethod
    def unit(cls) -> "GainVector":
        return cls((1.0,) * BAND_COUNT)

    def scaled(self, factor: float) -> "GainVector":
        return GainVector(tuple(g * factor for g in self.gains))

    def __iter__(self):
        return iter(self.gains)

    def __getitem__(self, i):
        return self.gains[i]


@dataclass(frozen=True)
class LimiterConfig:
    """Soft-knee peak limiter settings: pass below the knee, saturate above."""

    peak_threshold: float = 0.99
    knee_start: float = 0.80

    def __post_init__(self):
        if not 0 < self.peak_threshold <= 1:
            raise ValueError("peak_threshold must be in (0, 1]")
        if not 0 < self.knee_start < self.peak_threshold:
            raise ValueError("knee_start must be in (0, peak_threshold)")


def apply_gains(subbands: SubbandSet, gains) -> SubbandSet:
    """Multiply each band's coefficients by the matching gain."""
    values = list(gains)
    if len(values) != len(subbands.bands):
        raise ValueError(
            f"{len(values)} gains for {len(subbands.bands)} bands"
        )
    new_bands = {
        name: coeffs * g
        for (name, coeffs), g in zip(subbands.bands.items(), values)
    }
    return subbands.with_bands(new_bands)


def compress_peaks(audio: AudioBuffer, config: LimiterConfig = LimiterConfig()) -> AudioBuffer:
    """Memoryless soft-knee waveshaper.

    Magnitudes at or below the knee pass unchanged; above it they map
    monotonically onto (knee, threshold), asymptoting to the threshold.
    Signs are preserved, so the output peak never exceeds the threshold.
    """
    s = audio.samples
    mag = np.abs(s)
    span = config.peak_threshold - config.knee_start
    over = mag > config.knee_start
    shaped = mag.copy()
    shaped[over] = config.knee_start + span * np.tanh((mag[over] - config.knee_start) / span)
    return AudioBuffer(np.sign(s) * shaped, audio.sample_rate_hz)


@dataclass(frozen=True)
class EnhanceReport:
    """What one enhancement run did, for logs and effective-gain reporting."""

    audio: AudioBuffer
    normalization_factor: float
    limiter_engaged: bool
    energy_ratio: float  # output energy / input energy (1.0 unless limited)


def enhance_details(
    audio: AudioBuffer,
    gains,
    limiter: LimiterConfig = LimiterConfig(),
    level: int = 5,
    mode: str = MODE_PERIODIC,
) -> EnhanceReport:
    """Run the full enhancement and report the normalization it applied."""
    subbands = wavedec(audio, level, mode)
    shaped = waverec(apply_gains(subbands, gains))
    energy_in = float(np.sum(audio.samples ** 2))
    energy_shaped = float(np.sum(shaped.samples ** 2))
    if energy_shaped == 0.0:
        raise DegenerateSignalError("degenerate gains: enhanced signal is all zero")
    factor = float(np.sqrt(energy_in / energy_shaped))
    normalized = AudioBuffer(shaped.samples * factor, audio.sample_rate_hz)
    peak = float(np.max(np.abs(normalized.samples)))
    if peak < limiter.peak_threshold:
        return EnhanceReport(normalized, factor, False, 1.0)
    limited = compress_peaks(normalized, limiter)
    energy_out = float(np.sum(limited.samples ** 2))
    ratio = energy_out / energy_in if energy_in > 0 else 0.0
    log.info(
        "peak limiter engaged: pre-limit peak %.4f, energy ratio after limiting %.6f",
        peak, ratio,
    )
    return EnhanceReport(limited, factor, True, ratio)


def wavelet_enhance(
    audio: AudioBuffer,
    gains,
    limiter: LimiterConfig = LimiterConfig(),
    level: int = 5,
    mode: str = MODE_PERIODIC,
) -> AudioBuffer:
    """Reshape band energies at constant total energy; limit peaks if needed."""
    return enhance_details(audio, gains, limiter, level, mode).audio
