"""Mono audio container, WAV file I/O, level statistics, and mixing."""

from __future__ import annotations

import struct
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AudioFormatError, DegenerateSignalError, SampleRateMismatch

# Integer sample types are scaled by their maximum positive magnitude so that
# the 16-bit write/read round trip stays within 1/32767 per sample.
_INT_FULL_SCALE = {8: 127.0, 16: 32767.0, 24: 8388607.0, 32: 2147483647.0}

_FORMAT_PCM = 1
_FORMAT_IEEE_FLOAT = 3
_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True)
class AudioBuffer:
    """Mono discrete-time signal with its sample rate.

    Samples are float64 at nominal [-1, 1] full scale. The array is frozen
    (read-only) after construction so buffers can be shared between threads.
    """

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioBuffer samples must be one-dimensional")
        if samples.size == 0:
            raise DegenerateSignalError("AudioBuffer requires at least one sample")
        if int(self.sample_rate_hz) <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioBuffer samples must be finite")
        if samples.flags.writeable:
            if samples is self.samples:
                samples = samples.copy()
            samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class SignalStats:
    rms: float
    energy: float
    peak: float


def read_wav(path) -> AudioBuffer:
    """Read a PCM WAV file as a mono AudioBuffer.

    Accepts 8/16/24/32-bit integer and 32-bit float PCM. Multi-channel
    input is downmixed by averaging the channels; integer samples are
    scaled to [-1, 1] by the type's maximum positive magnitude.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise AudioFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos:pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8:pos + 8 + size]
        if chunk_id == b"fmt ":
            fmt = body
        elif chunk_id == b"data":
            data = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None or len(fmt) < 16:
        raise AudioFormatError(f"{path}: missing fmt chunk")
    if data is None:
        raise AudioFormatError(f"{path}: missing data chunk")

    tag, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if tag == _FORMAT_EXTENSIBLE:
        if len(fmt) < 26:
            raise AudioFormatError(f"{path}: truncated extensible fmt chunk")
        (tag,) = struct.unpack_from("<H", fmt, 24)  # first two bytes of the subformat GUID
    if tag not in (_FORMAT_PCM, _FORMAT_IEEE_FLOAT):
        raise AudioFormatError(f"{path}: non-PCM codec (format tag {tag})")
    if channels < 1:
        raise AudioFormatError(f"{path}: zero channels")

    if tag == _FORMAT_IEEE_FLOAT:
        if bits != 32:
            raise AudioFormatError(f"{path}: unsupported float width {bits}")
        frame_bytes = 4 * channels
        frames = len(data) // frame_bytes
        if frames == 0:
            raise AudioFormatError(f"{path}: zero frames")
        flat = np.frombuffer(data[:frames * frame_bytes], dtype="<f4").astype(np.float64)
    else:
        if bits not in _INT_FULL_SCALE:
            raise AudioFormatError(f"{path}: unsupported PCM width {bits}")
        frame_bytes = (bits // 8) * channels
        frames = len(data) // frame_bytes
        if frames == 0:
            raise AudioFormatError(f"{path}: zero frames")
        usable = data[:frames * frame_bytes]
        if bits == 8:
            flat = np.frombuffer(usable, dtype=np.uint8).astype(np.float64) - 128.0
        elif bits == 16:
            flat = np.frombuffer(usable, dtype="<i2").astype(np.float64)
        elif bits == 32:
            flat = np.frombuffer(usable, dtype="<i4").astype(np.float64)
        else:  # 24-bit: widen each triplet to int32, then shift back
            b = np.frombuffer(usable, dtype=np.uint8).reshape(-1, 3)
            as32 = (b[:, 0].astype(np.uint32)
                    | (b[:, 1].astype(np.uint32) << 8)
                    | (b[:, 2].astype(np.uint32) << 16))
            flat = (as32.astype(np.int32) << 8 >> 8).astype(np.float64)
        flat /= _INT_FULL_SCALE[bits]

    mono = flat.reshape(frames, channels).mean(axis=1)
    return AudioBuffer(mono, rate)


def write_wav(path, audio: AudioBuffer) -> None:
    """Write a 16-bit PCM mono WAV.

    Samples are clipped to [-1, 1] and quantized symmetrically (+-32767)
    by rounding to nearest.
    """
    pcm = np.rint(np.clip(audio.samples, -1.0, 1.0) * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as out:
        out.setnchannels(1)
        out.setsampwidth(2)
        out.setframerate(audio.sample_rate_hz)
        out.writeframes(pcm.tobytes())


def signal_stats(audio: AudioBuffer) -> SignalStats:
    """RMS, energy (sum of squares), and peak absolute amplitude."""
    s = audio.samples
    energy = float(np.sum(s * s))
    return SignalStats(
        rms=float(np.sqrt(energy / s.size)),
        energy=energy,
        peak=float(np.max(np.abs(s))),
    )


def normalize_rms(audio: AudioBuffer, target_rms: float) -> AudioBuffer:
    """Uniformly scale so the output RMS equals target_rms."""
    if target_rms <= 0:
        raise ValueError("target_rms must be positive")
    current = signal_stats(audio).rms
    if current == 0.0:
        raise DegenerateSignalError("cannot normalize an all-zero signal")
    return AudioBuffer(audio.samples * (target_rms / current), audio.sample_rate_hz)


def normalize_energy(audio: AudioBuffer, target_energy: float) -> AudioBuffer:
    """Uniformly scale so the output energy equals target_energy."""
    if target_energy <= 0:
        raise ValueError("target_energy must be positive")
    current = signal_stats(audio).energy
    if current == 0.0:
        raise DegenerateSignalError("cannot normalize an all-zero signal")
    return AudioBuffer(audio.samples * np.sqrt(target_energy / current), audio.sample_rate_hz)


def mix_at_nsr(speech: AudioBuffer, noise: AudioBuffer, nsr: float) -> AudioBuffer:
    """Superimpose noise onto speech at the given noise-to-signal ratio.

    The ratio is an amplitude multiplier applied to the noise, which the
    caller should have RMS-matched to the speech beforehand. Noise shorter
    than the speech is tiled; longer noise is truncated.
    """
    if nsr < 0:
        raise ValueError("nsr must be non-negative")
    if speech.sample_rate_hz != noise.sample_rate_hz:
        raise SampleRateMismatch(
            f"speech at {speech.sample_rate_hz} Hz, noise at {noise.sample_rate_hz} Hz"
        )
    idx = np.arange(len(speech)) % len(noise)
    return AudioBuffer(speech.samples + nsr * noise.samples[idx], speech.sample_rate_hz)
