"""Command-line frontend wiring the enhancement pipeline end to end.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 external-service
error, 4 numeric or degenerate input. Every command writes a JSON run
manifest (command, resolved parameters, tool version, input digests)
alongside its outputs, so any result can be reproduced from its manifest.
All numbers print with six significant digits.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audio import AudioBuffer, mix_at_nsr, normalize_energy, normalize_rms, read_wav, signal_stats, write_wav
from .enhance import BAND_COUNT, GainVector, LimiterConfig, enhance_details
from .errors import (
    AudioFormatError,
    AudiogramError,
    DegenerateSignalError,
    SampleRateMismatch,
    SubwaveError,
    TranscriberError,
)
from .hearing import Audiogram, RecruitmentConfig, simulate_hearing_loss
from .optimize import (
    OptimizationAborted,
    Scenario,
    SearchConfig,
    greedy_optimize,
    point_to_point_optimize,
    write_result,
    write_trace,
)
from .scoring import FixtureTranscriber, HttpTranscriber, SyntheticTranscriber, transcription_accuracy
from .spectrogram import FLOOR_DB, magnitude_spectrogram, to_db, write_matrix, write_pgm
from .wavelet import wavedec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_SERVICE = 3
EXIT_NUMERIC = 4

_BAND_FLAGS = ("ca5", "cd5", "cd4", "cd3", "cd2", "cd1")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _nonnegative(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"{text} is negative")
    return value


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(path, command: str, parameters: dict, inputs: dict) -> None:
    manifest = {
        "command": command,
        "input_digests": {name: _file_digest(p) for name, p in inputs.items()},
        "parameters": parameters,
        "tool_version": __version__,
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _parse_gains(args, level: int) -> tuple:
    count = level + 1
    gains = [1.0] * count
    if args.gains is not None:
        parts = args.gains.replace(",", " ").split()
        if len(parts) != count:
            raise ValueError(f"expected {count} gains for level {level}, got {len(parts)}")
        gains = [float(p) for p in parts]
    named = [(flag, getattr(args, flag, None)) for flag in _BAND_FLAGS]
    if any(v is not None for _, v in named):
        if level != 5:
            raise ValueError("named band flags (--ca5 .. --cd1) apply to level 5 only")
        for i, (_, value) in enumerate(named):
            if value is not None:
                gains[i] = value
    return tuple(gains)


def _band_table(label_a: str, before, label_b: str, after) -> str:
    names = before.band_names
    ea, eb = before.energies(), after.energies()
    sa, sb = before.energy_shares(), after.energy_shares()
    header = f"{'band':>6} {label_a + ' energy':>16} {'share':>9} {label_b + ' energy':>16} {'share':>9}"
    lines = [header]
    for i, name in enumerate(names):
        lines.append(
            f"{name:>6} {_fmt(ea[name]):>16} {_fmt(sa[i]):>9} {_fmt(eb[name]):>16} {_fmt(sb[i]):>9}"
        )
    return "\n".join(lines)


def _print_stats(label: str, stats) -> None:
    print(f"{label}: rms={_fmt(stats.rms)} energy={_fmt(stats.energy)} peak={_fmt(stats.peak)}")


def cmd_enhance(args) -> int:
    audio = read_wav(args.input)
    gains = _parse_gains(args, args.level)
    limiter = LimiterConfig(args.peak_threshold, args.knee_start)
    report = enhance_details(audio, gains, limiter, args.level)
    write_wav(args.output, report.audio)
    _print_stats("input", signal_stats(audio))
    _print_stats("output", signal_stats(report.audio))
    if report.limiter_engaged:
        print(f"limiter engaged: energy ratio {_fmt(report.energy_ratio)}")
    print(_band_table("in", wavedec(audio, args.level), "out", wavedec(report.audio, args.level)))
    _write_manifest(
        str(args.output) + ".manifest.json",
        "enhance",
        {
            "gains": list(gains),
            "knee_start": args.knee_start,
            "level": args.level,
            "output": str(args.output),
            "peak_threshold": args.peak_threshold,
        },
        {"input": args.input},
    )
    return EXIT_OK


def cmd_mix(args) -> int:
    speech = read_wav(args.speech)
    noise = read_wav(args.noise)
    matched = normalize_rms(noise, signal_stats(speech).rms)
    mixed = mix_at_nsr(speech, matched, args.nsr)
    write_wav(args.output, mixed)
    _print_stats("mix", signal_stats(mixed))
    _write_manifest(
        str(args.output) + ".manifest.json",
        "mix",
        {"nsr": args.nsr, "output": str(args.output)},
        {"noise": args.noise, "speech": args.speech},
    )
    return EXIT_OK


def _reference_text(args) -> str:
    if getattr(args, "reference_text", None):
        return args.reference_text
    if getattr(args, "reference_file", None):
        return Path(args.reference_file).read_text()
    raise ValueError("a reference text is required (--reference-text or --reference-file)")


def _make_transcriber(args, speech: AudioBuffer | None = None):
    kind = args.transcriber
    if kind == "http":
        return HttpTranscriber.from_env(os.environ)
    if kind == "fixture":
        if not args.fixture_table:
            raise ValueError("--fixture-table is required with the fixture transcriber")
        return FixtureTranscriber.from_json(args.fixture_table)
    if kind == "synthetic":
        reference = _reference_text(args)
        if getattr(args, "synthetic_target_gains", None):
            if speech is None:
                raise ValueError("--synthetic-target-gains needs the speech input")
            gains = tuple(float(p) for p in args.synthetic_target_gains.replace(",", " ").split())
            shaped = enhance_details(speech, gains).audio
            profile = SyntheticTranscriber.profile_of(shaped)
        elif getattr(args, "target_profile", None):
            profile = [float(p) for p in args.target_profile.replace(",", " ").split()]
        else:
            raise ValueError("the synthetic transcriber needs --target-profile or --synthetic-target-gains")
        return SyntheticTranscriber(
            reference,
            profile,
            language=args.language,
            sensitivity=args.synthetic_sensitivity,
            seed=args.seed,
        )
    raise ValueError(f"unknown transcriber {kind!r}")


def cmd_score(args) -> int:
    audio = read_wav(args.input)
    reference = _reference_text(args)
    transcriber = _make_transcriber(args)
    hypothesis = transcriber.transcribe(audio, args.language)
    report = transcription_accuracy(hypothesis, reference, args.language)
    print(f"accuracy_percent={_fmt(report.accuracy_percent)}")
    print(f"edit_distance={report.edit_distance}")
    print(f"reference_tokens={len(report.reference.tokens)}")
    print(f"hypothesis_tokens={len(report.hypothesis.tokens)}")
    _write_manifest(
        args.manifest,
        "score",
        {
            "language": args.language,
            "reference_text": reference,
            "transcriber": args.transcriber,
        },
        {"input": args.input},
    )
    return EXIT_OK


def _write_nsr_table(path_txt, path_csv, result) -> None:
    nsrs = [row[0] for row in result.per_nsr_trace]
    header = ["accuracy (%)"] + [_fmt(v) for v in nsrs] + ["mean"]
    base = [row[1] for row in result.per_nsr_trace]
    enh = [row[2] for row in result.per_nsr_trace]
    rows = [
        ["unenhanced"] + [_fmt(v) for v in base] + [_fmt(float(np.mean(base)))],
        ["enhanced"] + [_fmt(v) for v in enh] + [_fmt(float(np.mean(enh)))],
        ["improvement"] + [_fmt(e - b) for b, e in zip(base, enh)]
        + [_fmt(float(np.mean(enh)) - float(np.mean(base)))],
    ]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    with open(path_txt, "w") as out:
        for row in [header] + rows:
            out.write("  ".join(cell.rjust(w) for cell, w in zip(row, widths)) + "\n")
    with open(path_csv, "w") as out:
        out.write(",".join(header) + "\n")
        for row in rows:
            out.write(",".join(row) + "\n")


def cmd_optimize(args) -> int:
    speech = read_wav(args.speech)
    noise = normalize_rms(read_wav(args.noise), signal_stats(speech).rms)
    transcriber = _make_transcriber(args, speech)
    scenario = Scenario(args.scenario)
    config = SearchConfig(
        reference_text=_reference_text(args),
        language=args.language,
        gain_min=args.gain_min,
        gain_max=args.gain_max,
        gain_step=args.gain_step,
        coarse_step=args.coarse_step,
        nsr_grid=tuple(float(p) for p in args.nsr_grid.replace(",", " ").split()),
        max_sweeps=args.max_sweeps,
        initial_gains=(
            tuple(float(p) for p in args.initial_gains.replace(",", " ").split())
            if args.initial_gains else None
        ),
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if args.point_nsr is not None:
            result = point_to_point_optimize(
                speech, noise, args.point_nsr, scenario, config, transcriber, jobs=args.jobs
            )
        else:
            result = greedy_optimize(speech, noise, scenario, config, transcriber, jobs=args.jobs)
    except OptimizationAborted as exc:
        # keep whatever evaluations completed so the run can be inspected
        write_trace(out_dir / "trace.log", exc.trace)
        raise
    write_result(out_dir / "result.txt", result)
    write_trace(out_dir / "trace.log", result.trace)
    _write_nsr_table(out_dir / "table.txt", out_dir / "table.csv", result)
    _write_manifest(
        out_dir / "manifest.json",
        "optimize",
        {
            "coarse_step": args.coarse_step,
            "gain_max": args.gain_max,
            "gain_min": args.gain_min,
            "gain_step": args.gain_step,
            "initial_gains": args.initial_gains,
            "jobs": args.jobs,
            "language": args.language,
            "max_sweeps": args.max_sweeps,
            "nsr_grid": list(config.nsr_grid),
            "out_dir": str(out_dir),
            "point_nsr": args.point_nsr,
            "reference_text": config.reference_text,
            "scenario": scenario.value,
            "seed": args.seed,
            "synthetic_sensitivity": args.synthetic_sensitivity,
            "synthetic_target_gains": args.synthetic_target_gains,
            "target_profile": args.target_profile,
            "transcriber": args.transcriber,
        },
        {"noise": args.noise, "speech": args.speech},
    )
    print(f"best_gains={','.join(_fmt(g) for g in result.best_gains)}")
    print(f"mean_accuracy={_fmt(result.mean_accuracy)}")
    print(f"baseline_mean_accuracy={_fmt(result.baseline_mean_accuracy)}")
    print(f"evaluations={result.evaluations}")
    return EXIT_OK


def cmd_simulate_hl(args) -> int:
    audio = read_wav(args.input)
    audiogram = Audiogram.from_file(args.audiogram)
    recruitment = RecruitmentConfig(enabled=args.recruitment)
    processed = simulate_hearing_loss(audio, audiogram, recruitment, args.calibration_db)
    energy_in = signal_stats(audio).energy
    renormalized = normalize_energy(processed, energy_in)
    write_wav(args.output, renormalized)
    print(_band_table("pre", wavedec(audio), "post", wavedec(processed)))
    _write_manifest(
        str(args.output) + ".manifest.json",
        "simulate-hl",
        {
            "calibration_db": args.calibration_db,
            "output": str(args.output),
            "recruitment": args.recruitment,
        },
        {"audiogram": args.audiogram, "input": args.input},
    )
    return EXIT_OK


def cmd_spectrogram(args) -> int:
    audio = read_wav(args.input)
    mags = magnitude_spectrogram(audio, args.frame, args.hop)
    db = to_db(mags)
    write_pgm(args.out_image, db)
    write_matrix(args.out_matrix, db)
    print(f"bins={db.shape[0]} frames={db.shape[1]} floor_db={_fmt(FLOOR_DB)}")
    _write_manifest(
        str(args.out_image) + ".manifest.json",
        "spectrogram",
        {
            "frame": args.frame,
            "hop": args.hop,
            "out_image": str(args.out_image),
            "out_matrix": str(args.out_matrix),
        },
        {"input": args.input},
    )
    return EXIT_OK


def _add_transcriber_options(sub) -> None:
    sub.add_argument("--transcriber", choices=("http", "fixture", "synthetic"), default="http")
    sub.add_argument("--fixture-table", help="JSON digest->transcript table (fixture transcriber)")
    sub.add_argument("--reference-text")
    sub.add_argument("--reference-file")
    sub.add_argument("--language", default="en")
    sub.add_argument("--target-profile", help="six band-energy shares (synthetic transcriber)")
    sub.add_argument("--synthetic-target-gains",
                     help="derive the synthetic target profile by enhancing the speech with these gains")
    sub.add_argument("--synthetic-sensitivity", type=float, default=1.0)
    sub.add_argument("--seed", type=int, default=0)


def build_parser() -> _Parser:
    parser = _Parser(prog="subwave", description=__doc__)
    parser.add_argument("--version", action="version", version=f"subwave {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    enhance = commands.add_parser("enhance", help="apply per-band gains at constant energy")
    enhance.add_argument("input")
    enhance.add_argument("output")
    enhance.add_argument("--gains", help=f"{BAND_COUNT} values, low band first (default all 1)")
    for flag in _BAND_FLAGS:
        enhance.add_argument(f"--{flag}", type=float, dest=flag)
    enhance.add_argument("--level", type=int, default=5)
    enhance.add_argument("--peak-threshold", type=float, default=0.99)
    enhance.add_argument("--knee-start", type=float, default=0.80)
    enhance.set_defaults(func=cmd_enhance)

    mix = commands.add_parser("mix", help="superimpose rms-matched noise at a given ratio")
    mix.add_argument("speech")
    mix.add_argument("noise")
    mix.add_argument("nsr", type=_nonnegative)
    mix.add_argument("output")
    mix.set_defaults(func=cmd_mix)

    score = commands.add_parser("score", help="transcribe audio and score against a reference")
    score.add_argument("input")
    _add_transcriber_options(score)
    score.add_argument("--manifest", default="score.manifest.json")
    score.set_defaults(func=cmd_score)

    optimize = commands.add_parser("optimize", help="search sub-band gains for best accuracy")
    optimize.add_argument("speech")
    optimize.add_argument("noise")
    optimize.add_argument("--scenario", choices=[s.value for s in Scenario],
                          default=Scenario.ENHANCE_THEN_MIX.value)
    optimize.add_argument("--out-dir", required=True)
    optimize.add_argument("--nsr-grid", default="0,0.5,1,1.5,2,2.5,3")
    optimize.add_argument("--point-nsr", type=_nonnegative, default=None,
                          help="optimize for this single noise level instead of the grid")
    optimize.add_argument("--gain-min", type=float, default=0.0)
    optimize.add_argument("--gain-max", type=float, default=3.0)
    optimize.add_argument("--gain-step", type=float, default=0.1)
    optimize.add_argument("--max-sweeps", type=int, default=10)
    optimize.add_argument("--initial-gains")
    optimize.add_argument("--jobs", type=int,
                          default=int(os.environ.get("SUBWAVE_JOBS", os.cpu_count() or 1)))
    _add_transcriber_options(optimize)
    optimize.set_defaults(func=cmd_optimize)

    simulate = commands.add_parser("simulate-hl", help="hearing-loss simulation from an audiogram")
    simulate.add_argument("input")
    simulate.add_argument("audiogram")
    simulate.add_argument("output")
    simulate.add_argument("--recruitment", action="store_true")
    simulate.add_argument("--calibration-db", type=float, default=100.0)
    simulate.set_defaults(func=cmd_simulate_hl)

    spectrogram = commands.add_parser("spectrogram", help="export a magnitude spectrogram")
    spectrogram.add_argument("input")
    spectrogram.add_argument("--frame", type=int, default=1024)
    spectrogram.add_argument("--hop", type=int, default=512)
    spectrogram.add_argument("--out-image", required=True)
    spectrogram.add_argument("--out-matrix", required=True)
    spectrogram.set_defaults(func=cmd_spectrogram)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (AudioFormatError, AudiogramError, OSError) as exc:
        print(f"subwave: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TranscriberError as exc:
        print(f"subwave: error: {exc}", file=sys.stderr)
        return EXIT_SERVICE
    except (DegenerateSignalError, SampleRateMismatch, ValueError) as exc:
        print(f"subwave: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SubwaveError as exc:
        print(f"subwave: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
