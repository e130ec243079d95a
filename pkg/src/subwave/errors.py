"""Exception types shared across the package.

The CLI maps these onto exit codes: file/format problems are I/O errors,
transcriber problems are external-service errors, and degenerate numeric
input is its own class.
"""


class SubwaveError(Exception):
    """Base class for all package-specific errors."""


class AudioFormatError(SubwaveError):
    """A WAV file could not be parsed (non-PCM codec, zero frames, truncation)."""


class SampleRateMismatch(SubwaveError):
    """Two buffers that must share a sample rate do not."""


class DegenerateSignalError(SubwaveError):
    """An operation received input it cannot process (all-zero signal, empty buffer, zero gains)."""


class AudiogramError(SubwaveError):
    """An audiogram file is malformed; the message names the offending line."""


class TranscriberError(SubwaveError):
    """Base class for transcription failures."""


class TranscriberConfigError(TranscriberError):
    """A transcriber is missing configuration (endpoint, credential, fixture table)."""


class TranscriberRequestError(TranscriberError):
    """The speech endpoint failed (network error after retries, non-success status)."""


class TranscriberResponseError(TranscriberError):
    """The speech endpoint answered with a payload we cannot interpret."""


class UnknownFixtureError(TranscriberError):
    """The fixture table has no transcript for the requested audio digest."""
