"""Magnitude spectrogram export: portable graymap image and text matrix."""

from __future__ import annotations

import numpy as np

from .audio import AudioBuffer
from .errors import DegenerateSignalError

FLOOR_DB = -80.0


def magnitude_spectrogram(audio: AudioBuffer, frame: int, hop: int) -> np.ndarray:
    """Hann-windowed short-time magnitude spectrum.

    Returns a (frame/2 + 1) x n_frames matrix, row 0 = DC. Frames are laid
    out at hop intervals with no padding, so n_frames = 1 + (n - frame)//hop.
    """
    if frame < 2 or frame & (frame - 1):
        raise ValueError("frame must be a power of two")
    if not 1 <= hop <= frame:
        raise ValueError("hop must be in 1..frame")
    x = audio.samples
    if x.size < frame:
        raise DegenerateSignalError(f"audio of {x.size} samples is shorter than one {frame}-sample frame")
    n_frames = 1 + (x.size - frame) // hop
    window = np.hanning(frame)
    out = np.empty((frame // 2 + 1, n_frames))
    for i in range(n_frames):
        start = i * hop
        out[:, i] = np.abs(np.fft.rfft(window * x[start:start + frame]))
    return out


def to_db(magnitudes: np.ndarray, floor_db: float = FLOOR_DB) -> np.ndarray:
    """Normalize to peak 1 and convert to dB, clipped at the floor.

    Silence (an all-zero matrix) maps to all-floor.
    """
    peak = magnitudes.max()
    if peak <= 0:
        return np.full_like(magnitudes, floor_db)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(magnitudes / peak)
    return np.maximum(db, floor_db)


def write_pgm(path, db_matrix: np.ndarray, floor_db: float = FLOOR_DB) -> None:
    """Binary PGM, 8-bit: floor maps to black, 0 dB to white, top row = Nyquist."""
    scaled = np.rint((db_matrix - floor_db) / -floor_db * 255.0).astype(np.uint8)
    flipped = scaled[::-1, :]  # highest frequency on top
    rows, cols = flipped.shape
    with open(path, "wb") as out:
        out.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        out.write(flipped.tobytes())


def write_matrix(path, db_matrix: np.ndarray) -> None:
    """Plain-text dB matrix: rows = frequency bins (row 0 = DC), cols = frames."""
    with open(path, "w") as out:
        for row in db_matrix:
            out.write(" ".join(f"{v:.6g}" for v in row) + "\n")
