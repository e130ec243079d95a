"""Greedy coordinate search over sub-band gains against a transcriber score.

The search sweeps the bands in fixed low-to-high order; for each band it
scores every grid gain with the other bands held fixed and keeps the best,
preferring the incumbent on ties. Sweeps repeat until one passes with no
improvement. Scores are means over a noise-to-signal grid; every scored
(gains, nsr) point is cached, so re-visiting costs no transcriber calls.

Two scenarios: enhance the clean speech and then mix noise in, or mix
first and enhance the noisy result. With a deterministic transcriber the
whole search is reproducible, including its evaluation trace.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .audio import AudioBuffer, mix_at_nsr
from .enhance import BAND_COUNT, GainVector, LimiterConfig, enhance_details
from .errors import TranscriberError
from .scoring import Transcriber, transcription_accuracy

DEFAULT_NSR_GRID = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)


class Scenario(str, Enum):
    ENHANCE_THEN_MIX = "enhance-then-mix"
    MIX_THEN_ENHANCE = "mix-then-enhance"


class OptimizationAborted(TranscriberError):
    """A transcriber failure stopped the search; carries the partial trace."""

    def __init__(self, message: str, trace: tuple = ()):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of the gain search; defaults follow the reference protocol.

    Setting ``coarse_step`` (e.g. 0.5) runs the sweeps on the coarse grid
    first and then refines each band on the fine grid within one coarse
    step of the incumbent, which cuts transcriber calls substantially.
    """

    reference_text: str = ""
    language: str = "en"
    gain_min: float = 0.0
    gain_max: float = 3.0
    gain_step: float = 0.1
    coarse_step: float | None = None
    nsr_grid: tuple = DEFAULT_NSR_GRID
    max_sweeps: int = 10
    level: int = 5
    limiter: LimiterConfig = field(default_factory=LimiterConfig)
    initial_gains: tuple | None = None

    def __post_init__(self):
        if self.gain_step <= 0 or self.gain_max <= self.gain_min:
            raise ValueError("gain grid is empty")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be positive")
        if not any(abs(g - 1.0) < 1e-9 for g in self.gain_grid()):
            raise ValueError("gain grid must contain 1.0 (the identity gain)")
        if self.coarse_step is not None:
            if self.coarse_step <= self.gain_step:
                raise ValueError("coarse_step must be larger than gain_step")
            if not any(abs(g - 1.0) < 1e-9 for g in self.coarse_gain_grid()):
                raise ValueError("coarse gain grid must contain 1.0")
        nsr = tuple(float(v) for v in self.nsr_grid)
        if not nsr or any(v < 0 for v in nsr) or list(nsr) != sorted(nsr):
            raise ValueError("nsr_grid must be non-empty, non-negative, ascending")
        object.__setattr__(self, "nsr_grid", nsr)

    def _grid(self, step: float) -> tuple:
        count = int(round((self.gain_max - self.gain_min) / step)) + 1
        return tuple(round(self.gain_min + i * step, 10) for i in range(count))

    def gain_grid(self) -> tuple:
        return self._grid(self.gain_step)

    def coarse_gain_grid(self) -> tuple:
        return self._grid(self.coarse_step)


@dataclass(frozen=True)
class TraceRecord:
    """One scored (gains, nsr) point; seq orders records deterministically."""

    seq: int
    scenario: str
    gains: tuple
    nsr: float
    accuracy: float


@dataclass(frozen=True)
class OptimizationResult:
    best_gains: GainVector
    effective_gains: GainVector
    mean_accuracy: float
    baseline_mean_accuracy: float
    per_nsr_trace: tuple  # (nsr, baseline accuracy, enhanced accuracy)
    evaluations: int
    sweeps_run: int
    scenario: Scenario
    trace: tuple = ()


class GainEvaluator:
    """Scores gain vectors for one (speech, noise, scenario, config) context.

    Caches every (gains, nsr) score and, for the enhance-then-mix scenario,
    the enhanced speech per gain vector, since all noise levels share it.
    Safe for concurrent use; the evaluation trace is assembled in canonical
    order regardless of completion order.
    """

    def __init__(
        self,
        speech: AudioBuffer,
        noise: AudioBuffer,
        scenario: Scenario,
        config: SearchConfig,
        transcriber: Transcriber,
    ):
        if not config.reference_text:
            raise ValueError("SearchConfig.reference_text must be set")
        self.speech = speech
        self.noise = noise
        self.scenario = Scenario(scenario)
        self.config = config
        self.transcriber = transcriber
        self._scores: dict = {}
        self._enhanced: dict = {}
        self._lock = threading.Lock()
        self._traced: set = set()
        self.trace: list[TraceRecord] = []
        self.evaluations = 0

    def _enhanced_speech(self, gains: tuple) -> AudioBuffer:
        with self._lock:
            cached = self._enhanced.get(gains)
        if cached is not None:
            return cached
        enhanced = enhance_details(
            self.speech, gains, self.config.limiter, self.config.level
        ).audio
        with self._lock:
            self._enhanced.setdefault(gains, enhanced)
        return enhanced

    def point_accuracy(self, gains, nsr: float) -> float:
        """Score one gain vector at one noise level (cached)."""
        gains = _as_tuple(gains)
        key = (gains, float(nsr))
        with self._lock:
            if key in self._scores:
                return self._scores[key]
        if self.scenario is Scenario.ENHANCE_THEN_MIX:
            mix = mix_at_nsr(self._enhanced_speech(gains), self.noise, nsr)
        else:
            noisy = mix_at_nsr(self.speech, self.noise, nsr)
            mix = enhance_details(noisy, gains, self.config.limiter, self.config.level).audio
        try:
            text = self.transcriber.transcribe(mix, self.config.language)
        except TranscriberError as exc:
            raise TranscriberError(f"transcription failed at nsr={nsr:g}: {exc}") from exc
        report = transcription_accuracy(text, self.config.reference_text, self.config.language)
        with self._lock:
            self._scores[key] = report.accuracy_percent
            self.evaluations += 1
        return report.accuracy_percent

    def mean_accuracy(self, gains) -> float:
        """Arithmetic mean accuracy over the configured noise grid."""
        gains = _as_tuple(gains)
        return float(np.mean([self.point_accuracy(gains, nsr) for nsr in self.config.nsr_grid]))

    def flush_trace(self, candidates) -> None:
        """Append trace records for freshly scored points, in canonical order."""
        for gains in candidates:
            gains = _as_tuple(gains)
            for nsr in self.config.nsr_grid:
                key = (gains, float(nsr))
                if key in self._scores and key not in self._traced:
                    self._traced.add(key)
                    self.trace.append(TraceRecord(
                        seq=len(self.trace) + 1,
                        scenario=self.scenario.value,
                        gains=gains,
                        nsr=float(nsr),
                        accuracy=self._scores[key],
                    ))


def _as_tuple(gains) -> tuple:
    if isinstance(gains, GainVector):
        return gains.gains
    return tuple(float(g) for g in gains)


def evaluate_gains(
    speech: AudioBuffer,
    noise: AudioBuffer,
    gains,
    scenario: Scenario,
    config: SearchConfig,
    transcriber: Transcriber,
    evaluator: GainEvaluator | None = None,
) -> float:
    """Mean accuracy of one gain vector over the noise grid.

    Pass the same evaluator across calls to reuse its score cache.
    """
    if evaluator is None:
        evaluator = GainEvaluator(speech, noise, scenario, config, transcriber)
    mean = evaluator.mean_accuracy(gains)
    evaluator.flush_trace([gains])
    return mean


def greedy_optimize(
    speech: AudioBuffer,
    noise: AudioBuffer,
    scenario: Scenario,
    config: SearchConfig,
    transcriber: Transcriber,
    jobs: int = 1,
) -> OptimizationResult:
    """Coordinate-wise gain search maximizing mean transcription accuracy.

    Starts from unit gains (or ``config.initial_gains``), sweeps bands in
    low-to-high order, and stops after a sweep with no improvement or after
    ``config.max_sweeps``. Per-band candidate gains may be evaluated in
    parallel (``jobs``); results do not depend on completion order.
    """
    evaluator = GainEvaluator(speech, noise, scenario, config, transcriber)
    unit = (1.0,) * BAND_COUNT

    try:
        baseline_mean = evaluator.mean_accuracy(unit)
        evaluator.flush_trace([unit])

        current = _as_tuple(config.initial_gains) if config.initial_gains else unit
        if len(current) != BAND_COUNT:
            raise ValueError(f"initial gains must have {BAND_COUNT} entries")
        current_mean = evaluator.mean_accuracy(current)
        evaluator.flush_trace([current])

        fine = config.gain_grid()
        sweeps = 0
        if config.coarse_step is None:
            current, current_mean, sweeps = _sweep_stage(
                evaluator, current, current_mean, lambda band, cur: fine,
                config.max_sweeps, sweeps, jobs,
            )
        else:
            # coarse pass over the whole range (leave at least one sweep for
            # refinement), then fine steps within one coarse step of the
            # incumbent gain per band
            coarse = config.coarse_gain_grid()
            reach = config.coarse_step + 1e-9
            current, current_mean, sweeps = _sweep_stage(
                evaluator, current, current_mean, lambda band, cur: coarse,
                max(config.max_sweeps - 1, 1), sweeps, jobs,
            )
            current, current_mean, sweeps = _sweep_stage(
                evaluator, current, current_mean,
                lambda band, cur: tuple(g for g in fine if abs(g - cur[band]) <= reach),
                config.max_sweeps, sweeps, jobs,
            )
    except TranscriberError as exc:
        raise OptimizationAborted(str(exc), trace=tuple(evaluator.trace)) from exc

    if current_mean < baseline_mean:  # possible only under a warm start gone wrong
        current, current_mean = unit, baseline_mean

    per_nsr = tuple(
        (nsr, evaluator.point_accuracy(unit, nsr), evaluator.point_accuracy(current, nsr))
        for nsr in config.nsr_grid
    )
    effective = _effective_gains(speech, current, config)
    return OptimizationResult(
        best_gains=GainVector(current),
        effective_gains=effective,
        mean_accuracy=current_mean,
        baseline_mean_accuracy=baseline_mean,
        per_nsr_trace=per_nsr,
        evaluations=evaluator.evaluations,
        sweeps_run=sweeps,
        scenario=Scenario(scenario),
        trace=tuple(evaluator.trace),
    )


def _sweep_stage(evaluator, current, current_mean, candidates_for, max_sweeps, sweeps, jobs):
    """Repeat full band sweeps until one brings no improvement.

    ``candidates_for(band, current)`` yields the gain grid for a band given
    the incumbent vector; ties prefer the gain closest to the incumbent,
    then the smaller gain.
    """
    improved = True
    while improved and sweeps < max_sweeps:
        sweeps += 1
        improved = False
        for band in range(BAND_COUNT):
            grid = candidates_for(band, current)
            candidates = [current[:band] + (g,) + current[band + 1:] for g in grid]
            try:
                if jobs > 1:
                    with ThreadPoolExecutor(max_workers=jobs) as pool:
                        means = list(pool.map(evaluator.mean_accuracy, candidates))
                else:
                    means = [evaluator.mean_accuracy(c) for c in candidates]
            finally:
                evaluator.flush_trace(candidates)
            incumbent = current[band]
            best_idx = min(
                range(len(grid)),
                key=lambda i: (-means[i], abs(grid[i] - incumbent), grid[i]),
            )
            if means[best_idx] > current_mean:
                improved = True
            current = candidates[best_idx]
            current_mean = means[best_idx]
    return current, current_mean, sweeps


def point_to_point_optimize(
    speech: AudioBuffer,
    noise: AudioBuffer,
    nsr: float,
    scenario: Scenario,
    config: SearchConfig,
    transcriber: Transcriber,
    jobs: int = 1,
) -> OptimizationResult:
    """Gain search tailored to a single noise level (one-point grid)."""
    single = replace(config, nsr_grid=(float(nsr),))
    return greedy_optimize(speech, noise, scenario, single, transcriber, jobs)


def _effective_gains(speech: AudioBuffer, gains: tuple, config: SearchConfig) -> GainVector:
    # Raw gains scaled by the energy-normalization factor of the final
    # enhancement of the clean speech (the nsr=0 input in both scenarios).
    report = enhance_details(speech, gains, config.limiter, config.level)
    return GainVector(gains).scaled(report.normalization_factor)


def format_trace_line(record: TraceRecord) -> str:
    gains = ",".join(f"{g:.6g}" for g in record.gains)
    return (
        f"seq={record.seq} scenario={record.scenario} gains={gains} "
        f"nsr={record.nsr:.6g} accuracy={record.accuracy:.6g}"
    )


def write_trace(path, records) -> None:
    """Line-delimited evaluation log, one ``key=value`` record per line."""
    with open(path, "w") as out:
        for record in records:
            out.write(format_trace_line(record) + "\n")


def write_result(path, result: OptimizationResult) -> None:
    """Plain-text key-value summary of one optimization run."""
    lines = [
        f"scenario={result.scenario.value}",
        "best_gains=" + ",".join(f"{g:.6g}" for g in result.best_gains),
        "effective_gains=" + ",".join(f"{g:.6g}" for g in result.effective_gains),
        f"mean_accuracy={result.mean_accuracy:.6g}",
        f"baseline_mean_accuracy={result.baseline_mean_accuracy:.6g}",
        f"evaluations={result.evaluations}",
        f"sweeps_run={result.sweeps_run}",
    ]
    for nsr, base, enhanced in result.per_nsr_trace:
        lines.append(f"nsr={nsr:.6g} baseline={base:.6g} enhanced={enhanced:.6g}")
    with open(path, "w") as out:
        out.write("\n".join(lines) + "\n")
