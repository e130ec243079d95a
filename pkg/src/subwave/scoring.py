"""Transcription-accuracy scoring and pluggable transcribers.

Accuracy is token-level (character-level for Chinese) edit distance turned
into a percentage: ``100 * max(0, 1 - distance / reference_length)``. The
transcriber abstraction has three implementations: an HTTP client for a
speech-recognition endpoint, a digest-keyed fixture table, and a synthetic
scorer that degrades a known transcript based on the audio's band-energy
profile (used to close the optimization loop offline).
"""

from __future__ import annotations

import base64
import hashlib
import json
import threading
import time
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import AudioBuffer
from .errors import (
    TranscriberConfigError,
    TranscriberRequestError,
    TranscriberResponseError,
    UnknownFixtureError,
)
from .wavelet import wavedec


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple
    language: str = "en"


@dataclass(frozen=True)
class ScoreReport:
    accuracy_percent: float
    hypothesis: TokenSequence
    reference: TokenSequence
    edit_distance: int


def normalize_text(raw: str, language: str = "en") -> TokenSequence:
    """Lowercase, strip punctuation, and tokenize.

    Space-delimited languages tokenize on whitespace; ``zh`` tokenizes per
    character. Empty input yields an empty sequence.
    """
    cleaned = "".join(
        " " if unicodedata.category(c).startswith("P") else c
        for c in raw.lower()
    )
    if language == "zh":
        tokens = tuple(c for c in cleaned if not c.isspace())
    else:
        tokens = tuple(cleaned.split())
    return TokenSequence(tokens, language)


_PATTERN_MASKS: dict = {}


def _pattern_masks(pattern: tuple) -> dict:
    # token -> bitmask of its positions in the pattern; memoized because
    # scoring sweeps compare many texts against the same reference
    masks = _PATTERN_MASKS.get(pattern)
    if masks is None:
        if len(_PATTERN_MASKS) > 65536:
            _PATTERN_MASKS.clear()
        masks = {}
        for i, token in enumerate(pattern):
            masks[token] = masks.get(token, 0) | (1 << i)
        _PATTERN_MASKS[pattern] = masks
    return masks


def token_edit_distance(a, b) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs.

    Uses the bit-parallel column recurrence (Myers), which runs in
    O(len(b) * len(a)/wordsize) and handles arbitrary hashable tokens.
    """
    if type(a) is not tuple:
        a = tuple(a)
    if type(b) is not tuple:
        b = tuple(b)
    if len(a) > len(b):
        a, b = b, a
    m = len(a)
    if m == 0:
        return len(b)
    lookup = _pattern_masks(a).get
    pv = (1 << m) - 1
    mv = 0
    score = m
    high = 1 << (m - 1)
    for token in b:
        eq = lookup(token, 0)
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = mv | ~(xh | pv)
        mh = pv & xh
        if ph & high:
            score += 1
        elif mh & high:
            score -= 1
        ph = (ph << 1) | 1
        mh <<= 1
        pv = mh | ~(xv | ph)
        mv = ph & xv
    return score


def transcription_accuracy(hypothesis: str, reference: str, language: str = "en") -> ScoreReport:
    """Score a transcript against the correct text."""
    hyp = normalize_text(hypothesis, language)
    ref = normalize_text(reference, language)
    if not ref.tokens:
        raise ValueError("reference text is empty after normalization")
    distance = token_edit_distance(hyp.tokens, ref.tokens)
    accuracy = max(0.0, 1.0 - distance / len(ref.tokens)) * 100.0
    return ScoreReport(accuracy, hyp, ref, distance)


def buffer_digest(audio: AudioBuffer) -> str:
    """Content digest of the exact samples and rate (keys fixture tables)."""
    h = hashlib.sha256()
    h.update(str(audio.sample_rate_hz).encode())
    h.update(audio.samples.tobytes())
    return h.hexdigest()


class Transcriber:
    """Turns audio into text. Implementations must tolerate concurrent calls."""

    def transcribe(self, audio: AudioBuffer, language: str) -> str:
        raise NotImplementedError


class FixtureTranscriber(Transcriber):
    """Deterministic lookup of transcripts by audio content digest."""

    def __init__(self, table: dict | None = None):
        self._table = dict(table or {})

    @classmethod
    def from_json(cls, path) -> "FixtureTranscriber":
        return cls(json.loads(Path(path).read_text()))

    def register(self, audio: AudioBuffer, transcript: str) -> None:
        self._table[buffer_digest(audio)] = transcript

    def transcribe(self, audio: AudioBuffer, language: str) -> str:
        digest = buffer_digest(audio)
        try:
            return self._table[digest]
        except KeyError:
            raise UnknownFixtureError(f"unknown fixture: no transcript for digest {digest[:12]}…")


class SyntheticTranscriber(Transcriber):
    """Deterministic transcript degradation driven by band-energy mismatch.

    Holds a reference transcript and a hidden target band-energy profile.
    The further the input audio's profile sits from the target (total
    variation distance of the share vectors), the larger the fraction of
    reference tokens deleted. Token selection is pseudo-random but seeded
    from the audio content, so identical audio always yields an identical
    transcript.
    """

    def __init__(
        self,
        reference_text: str,
        target_profile,
        language: str = "en",
        level: int = 5,
        sensitivity: float = 1.0,
        seed: int = 0,
    ):
        profile = np.asarray(target_profile, dtype=np.float64)
        if profile.ndim != 1 or profile.size != level + 1:
            raise ValueError(f"target profile must have {level + 1} shares")
        total = profile.sum()
        if total <= 0:
            raise ValueError("target profile must have positive total share")
        self.reference_text = reference_text
        self.target_profile = profile / total
        self.language = language
        self.level = level
        self.sensitivity = float(sensitivity)
        self.seed = int(seed)
        self._tokens = normalize_text(reference_text, language).tokens
        if not self._tokens:
            raise ValueError("reference text is empty after normalization")

    @staticmethod
    def profile_of(audio: AudioBuffer, level: int = 5) -> np.ndarray:
        return wavedec(audio, level).energy_shares()

    def profile_distance(self, audio: AudioBuffer) -> float:
        shares = self.profile_of(audio, self.level)
        return 0.5 * float(np.sum(np.abs(shares - self.target_profile)))

    def transcribe(self, audio: AudioBuffer, language: str) -> str:
        distance = self.profile_distance(audio)
        fraction = min(1.0, distance / self.sensitivity)
        n = len(self._tokens)
        n_drop = int(round(fraction * n))
        if n_drop == 0:
            return " ".join(self._tokens)
        digest = hashlib.sha256(
            audio.samples.tobytes() + self.seed.to_bytes(8, "little")
        ).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        drop = set(rng.choice(n, size=n_drop, replace=False).tolist())
        return " ".join(t for i, t in enumerate(self._tokens) if i not in drop)


@dataclass
class RequestRecord:
    """One HTTP transcription request as seen by the client."""

    attempts: int
    status: int | None
    no_hypotheses: bool
    elapsed_s: float


class HttpTranscriber(Transcriber):
    """Client for a speech-recognition HTTP endpoint.

    Speaks the plain ``v1 recognize`` contract: a JSON body with a config
    (LINEAR16 encoding, sample rate, language code) and base64 audio
    content, answered by a JSON list of result alternatives. The credential
    comes from the environment only and is sent as a bearer token.
    Transient failures (connection errors, 5xx) are retried with
    exponential backoff.
    """

    def __init__(
        self,
        base_url: str,
        token: str,
        max_retries: int = 3,
        backoff_s: float = 0.5,
        timeout_s: float = 30.0,
        max_in_flight: int = 4,
        max_duration_s: float = 60.0,
    ):
        if not base_url:
            raise TranscriberConfigError("speech endpoint URL is not configured")
        if not token:
            raise TranscriberConfigError("speech credential is not configured")
        self.base_url = base_url.rstrip("/")
        self._token = token
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s
        self.max_duration_s = max_duration_s
        self._gate = threading.BoundedSemaphore(max_in_flight)
        self._log_lock = threading.Lock()
        self.request_log: list[RequestRecord] = []

    @classmethod
    def from_env(cls, env, **kwargs) -> "HttpTranscriber":
        url = env.get("SUBWAVE_ASR_URL", "")
        token = env.get("SUBWAVE_ASR_TOKEN", "")
        if not url:
            raise TranscriberConfigError("SUBWAVE_ASR_URL is not set")
        if not token:
            raise TranscriberConfigError("SUBWAVE_ASR_TOKEN is not set")
        return cls(url, token, **kwargs)

    def transcribe(self, audio: AudioBuffer, language: str) -> str:
        import requests

        if audio.duration_s > self.max_duration_s:
            raise TranscriberRequestError(
                f"audio of {audio.duration_s:.1f} s exceeds the {self.max_duration_s:.0f} s cap"
            )
        pcm = np.rint(np.clip(audio.samples, -1.0, 1.0) * 32767.0).astype("<i2").tobytes()
        body = {
            "config": {
                "encoding": "LINEAR16",
                "sampleRateHertz": audio.sample_rate_hz,
                "languageCode": language,
            },
            "audio": {"content": base64.b64encode(pcm).decode("ascii")},
        }
        url = f"{self.base_url}/v1/speech:recognize"
        headers = {"Authorization": f"Bearer {self._token}"}

        started = time.monotonic()
        status = None
        last_error = None
        response = None
        attempts = 0
        with self._gate:
            for attempt in range(self.max_retries + 1):
                attempts = attempt + 1
                try:
                    response = requests.post(url, json=body, headers=headers, timeout=self.timeout_s)
                    status = response.status_code
                except requests.RequestException as exc:
                    last_error = exc
                    status = None
                else:
                    if status < 500:
                        break
                    last_error = None
                if attempt < self.max_retries:
                    time.sleep(self.backoff_s * 2 ** attempt)

        if status is None:
            self._record(attempts, status, False, started)
            raise TranscriberRequestError(
                f"speech endpoint unreachable after {attempts} attempts: {last_error}"
            )
        if status >= 500:
            self._record(attempts, status, False, started)
            raise TranscriberRequestError(
                f"speech endpoint failed with status {status} after {attempts} attempts"
            )
        if status != 200:
            self._record(attempts, status, False, started)
            raise TranscriberRequestError(f"speech endpoint returned status {status}")

        try:
            payload = response.json()
            results = payload.get("results", [])
            parts = []
            for result in results:
                alternatives = result.get("alternatives", [])
                if alternatives:
                    parts.append(str(alternatives[0]["transcript"]))
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            self._record(attempts, status, False, started)
            raise TranscriberResponseError(f"malformed speech response: {exc}")

        no_hypotheses = not parts
        self._record(attempts, status, no_hypotheses, started)
        return " ".join(parts)

    def _record(self, attempts, status, no_hypotheses, started):
        record = RequestRecord(attempts, status, no_hypotheses, time.monotonic() - started)
        with self._log_lock:
            self.request_log.append(record)
