"""Speech-intelligibility enhancement via wavelet sub-band gain reallocation.

Decomposes audio into six sub-bands with an orthogonal 24-tap filter bank,
reshapes the band energies under a constant-energy constraint, and searches
for the gain vector that maximizes a pluggable transcription-accuracy
score. Includes a hearing-loss simulator for impaired-listening studies.
"""

__version__ = "0.1.0"

from .audio import (
    AudioBuffer,
    SignalStats,
    mix_at_nsr,
    normalize_energy,
    normalize_rms,
    read_wav,
    signal_stats,
    write_wav,
)
from .enhance import (
    GainVector,
    LimiterConfig,
    apply_gains,
    compress_peaks,
    enhance_details,
    wavelet_enhance,
)
from .hearing import (
    Audiogram,
    RecruitmentConfig,
    absolute_threshold,
    interpolate_loss,
    simulate_hearing_loss,
)
from .optimize import (
    GainEvaluator,
    OptimizationAborted,
    OptimizationResult,
    Scenario,
    SearchConfig,
    TraceRecord,
    evaluate_gains,
    greedy_optimize,
    point_to_point_optimize,
    write_result,
    write_trace,
)
from .scoring import (
    FixtureTranscriber,
    HttpTranscriber,
    ScoreReport,
    SyntheticTranscriber,
    TokenSequence,
    Transcriber,
    normalize_text,
    token_edit_distance,
    transcription_accuracy,
)
from .wavelet import (
    FilterQuad,
    SubbandSet,
    dwt_step,
    idwt_step,
    sym12_filters,
    wavedec,
    waverec,
)
