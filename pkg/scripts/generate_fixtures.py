#!/usr/bin/env python3
"""Regenerate the committed test fixtures.

Produces, under tests/:
  data/speech.wav, data/noise.wav   bundled deterministic test audio
  golden/*.txt                      decomposition vectors pinning the
                                    filter-bank phase convention
  golden/edit_distances.npz         full edit-distance table over all token
                                    sequences of length <= 6 on {a, b, c},
                                    computed by the recursive oracle below

Run from the repository root: python scripts/generate_fixtures.py
"""

import sys
from itertools import product
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from subwave.audio import AudioBuffer, write_wav
from subwave.wavelet import MODE_PERIODIC, MODE_SYMMETRIC, dwt_step, sym12_filters, wavedec
from signals import make_babble, make_speechlike

GOLDEN = ROOT / "tests" / "golden"
DATA = ROOT / "tests" / "data"

EDIT_SYMBOLS = ("a", "b", "c")
EDIT_MAX_LEN = 6


def edit_sequences():
    """Canonical enumeration order: by length, then product order."""
    seqs = [()]
    for length in range(1, EDIT_MAX_LEN + 1):
        seqs.extend(product(EDIT_SYMBOLS, repeat=length))
    return seqs


def recursive_edit_distance(a, b, _memo={}):
    """Brute-force recursive Levenshtein definition (the oracle)."""
    key = (a, b)
    value = _memo.get(key)
    if value is not None:
        return value
    if not a:
        value = len(b)
    elif not b:
        value = len(a)
    else:
        value = min(
            recursive_edit_distance(a[:-1], b) + 1,
            recursive_edit_distance(a, b[:-1]) + 1,
            recursive_edit_distance(a[:-1], b[:-1]) + (a[-1] != b[-1]),
        )
    _memo[key] = value
    return value


def write_vector(path, values):
    with open(path, "w") as out:
        for v in values:
            out.write(f"{v:.17g}\n")


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    DATA.mkdir(parents=True, exist_ok=True)

    # bundled audio
    write_wav(DATA / "speech.wav", make_speechlike(seconds=5.0, fs=44100, seed=11))
    write_wav(DATA / "noise.wav", make_babble(seconds=3.0, fs=44100, seed=40))

    # golden decomposition vectors
    filters = sym12_filters()
    impulse = np.zeros(48)
    impulse[0] = 1.0
    for mode in (MODE_PERIODIC, MODE_SYMMETRIC):
        ca, cd = dwt_step(impulse, filters, mode)
        write_vector(GOLDEN / f"impulse48_{mode}_cA.txt", ca)
        write_vector(GOLDEN / f"impulse48_{mode}_cD.txt", cd)

    rng = np.random.default_rng(20260809)
    x = AudioBuffer(rng.standard_normal(160), 44100)
    for mode in (MODE_PERIODIC, MODE_SYMMETRIC):
        subbands = wavedec(x, 5, mode)
        for name, coeffs in subbands.bands.items():
            write_vector(GOLDEN / f"rand160_{mode}_{name}.txt", coeffs)
    write_vector(GOLDEN / "rand160_input.txt", x.samples)

    # frozen edit-distance oracle table
    sys.setrecursionlimit(20000)
    seqs = edit_sequences()
    n = len(seqs)
    table = np.empty((n, n), dtype=np.int8)
    for i, a in enumerate(seqs):
        for j, b in enumerate(seqs):
            table[i, j] = recursive_edit_distance(a, b)
    np.savez_compressed(GOLDEN / "edit_distances.npz", table=table)
    print(f"edit table {table.shape}, checksum {int(table.sum())}")


if __name__ == "__main__":
    main()
