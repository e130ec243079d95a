import json
import re
import subprocess
import sys

import numpy as np
import pytest

from subwave.audio import AudioBuffer, read_wav, write_wav
from subwave.scoring import FixtureTranscriber, buffer_digest

from signals import make_band_balanced, make_speechlike


def run_cli(*args, env=None):
    import os

    full_env = dict(os.environ)
    full_env.pop("SUBWAVE_ASR_URL", None)
    full_env.pop("SUBWAVE_ASR_TOKEN", None)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "subwave", *map(str, args)],
        capture_output=True, text=True, env=full_env,
    )


@pytest.fixture(scope="module")
def speech_wav(tmp_path_factory):
    path = tmp_path_factory.mktemp("audio") / "speech.wav"
    write_wav(path, make_speechlike(seconds=1.0, fs=8000, seed=7))
    return path


@pytest.fixture(scope="module")
def noise_wav(tmp_path_factory):
    rng = np.random.default_rng(17)
    path = tmp_path_factory.mktemp("audio") / "noise.wav"
    write_wav(path, AudioBuffer(rng.uniform(-0.3, 0.3, 8000), 8000))
    return path


class TestEnhanceCommand:
    def test_unit_gains_identity(self, tmp_path, speech_wav):
        out = tmp_path / "out.wav"
        proc = run_cli("enhance", speech_wav, out, "--gains", "1 1 1 1 1 1")
        assert proc.returncode == 0, proc.stderr
        a = read_wav(speech_wav).samples
        b = read_wav(out).samples
        assert np.max(np.abs(a - b)) <= 2 / 32767
        manifest = json.loads((tmp_path / "out.wav.manifest.json").read_text())
        assert manifest["command"] == "enhance"
        assert manifest["parameters"]["gains"] == [1.0] * 6
        assert len(manifest["input_digests"]["input"]) == 64

    def test_reference_preset_reports_equal_energy(self, tmp_path, speech_wav):
        out = tmp_path / "enh.wav"
        proc = run_cli("enhance", speech_wav, out, "--gains", "1.0,0.5,2.1,3.1,0.3,0.5")
        assert proc.returncode == 0, proc.stderr
        energies = re.findall(r"energy=([0-9.e+-]+)", proc.stdout)
        assert energies[0] == energies[1]  # six significant digits match exactly
        assert "cD3" in proc.stdout and "band" in proc.stdout

    def test_named_band_flag(self, tmp_path, speech_wav):
        out = tmp_path / "n.wav"
        proc = run_cli("enhance", speech_wav, out, "--cd3", "3.1", "--cd2", "0.3")
        assert proc.returncode == 0, proc.stderr
        manifest = json.loads((tmp_path / "n.wav.manifest.json").read_text())
        assert manifest["parameters"]["gains"] == [1.0, 1.0, 1.0, 3.1, 0.3, 1.0]

    def test_missing_input(self, tmp_path):
        proc = run_cli("enhance", tmp_path / "absent.wav", tmp_path / "o.wav")
        assert proc.returncode == 2
        assert "absent.wav" in proc.stderr

    def test_degenerate_gains(self, tmp_path, speech_wav):
        proc = run_cli("enhance", speech_wav, tmp_path / "o.wav", "--gains", "0 0 0 0 0 0")
        assert proc.returncode == 4
        assert "degenerate" in proc.stderr


class TestMixCommand:
    def test_zero_nsr(self, tmp_path, speech_wav, noise_wav):
        out = tmp_path / "mix0.wav"
        proc = run_cli("mix", speech_wav, noise_wav, "0", out)
        assert proc.returncode == 0, proc.stderr
        a = read_wav(speech_wav).samples
        b = read_wav(out).samples
        assert np.max(np.abs(a - b)) <= 2 / 32767

    def test_negative_nsr_usage_error(self, tmp_path, speech_wav, noise_wav):
        proc = run_cli("mix", speech_wav, noise_wav, "-1", tmp_path / "m.wav")
        assert proc.returncode == 1

    def test_rate_mismatch(self, tmp_path, speech_wav):
        other = tmp_path / "other.wav"
        write_wav(other, AudioBuffer(np.zeros(100) + 0.1, 44100))
        proc = run_cli("mix", speech_wav, other, "1", tmp_path / "m.wav")
        assert proc.returncode == 4
        assert "Hz" in proc.stderr

    def test_self_mix_doubles(self, tmp_path, speech_wav):
        out = tmp_path / "double.wav"
        proc = run_cli("mix", speech_wav, speech_wav, "1", out)
        assert proc.returncode == 0
        a = read_wav(speech_wav).samples
        b = read_wav(out).samples
        clipped = np.clip(2 * a, -1, 1)
        assert np.max(np.abs(clipped - b)) <= 3 / 32767


class TestScoreCommand:
    def test_fixture_exact_match(self, tmp_path, speech_wav):
        table = {buffer_digest(read_wav(speech_wav)): "alpha beta gamma"}
        table_path = tmp_path / "table.json"
        table_path.write_text(json.dumps(table))
        proc = run_cli(
            "score", speech_wav, "--transcriber", "fixture", "--fixture-table", table_path,
            "--reference-text", "alpha beta gamma",
            "--manifest", tmp_path / "score.manifest.json",
        )
        assert proc.returncode == 0, proc.stderr
        assert "accuracy_percent=100" in proc.stdout

    def test_fixture_half_tokens(self, tmp_path, speech_wav):
        table = {buffer_digest(read_wav(speech_wav)): "alpha beta"}
        table_path = tmp_path / "table.json"
        table_path.write_text(json.dumps(table))
        proc = run_cli(
            "score", speech_wav, "--transcriber", "fixture", "--fixture-table", table_path,
            "--reference-text", "alpha beta gamma delta",
            "--manifest", tmp_path / "score.manifest.json",
        )
        assert proc.returncode == 0, proc.stderr
        assert "accuracy_percent=50" in proc.stdout
        assert "edit_distance=2" in proc.stdout

    def test_zero_accuracy_still_succeeds(self, tmp_path, speech_wav):
        table = {buffer_digest(read_wav(speech_wav)): ""}
        table_path = tmp_path / "t.json"
        table_path.write_text(json.dumps(table))
        proc = run_cli(
            "score", speech_wav, "--transcriber", "fixture", "--fixture-table", table_path,
            "--reference-text", "one two",
            "--manifest", tmp_path / "m.json",
        )
        assert proc.returncode == 0
        assert "accuracy_percent=0" in proc.stdout

    def test_http_without_credentials(self, tmp_path, speech_wav):
        proc = run_cli(
            "score", speech_wav, "--transcriber", "http",
            "--reference-text", "hello",
            "--manifest", tmp_path / "m.json",
        )
        assert proc.returncode == 3
        assert "SUBWAVE_ASR_URL" in proc.stderr

    def test_unknown_fixture_digest(self, tmp_path, speech_wav):
        table_path = tmp_path / "empty.json"
        table_path.write_text("{}")
        proc = run_cli(
            "score", speech_wav, "--transcriber", "fixture", "--fixture-table", table_path,
            "--reference-text", "hello",
            "--manifest", tmp_path / "m.json",
        )
        assert proc.returncode == 3
        assert "unknown fixture" in proc.stderr


class TestOptimizeCommand:
    def _run(self, out_dir, speech_wav, noise_wav, extra=()):
        return run_cli(
            "optimize", speech_wav, noise_wav,
            "--out-dir", out_dir,
            "--transcriber", "synthetic",
            "--reference-text", " ".join(f"w{i}" for i in range(60)),
            "--synthetic-target-gains", "1,0.6,1.5,1,1,1",
            "--synthetic-sensitivity", "0.6",
            "--nsr-grid", "0,1.5,3",
            "--gain-step", "0.5",
            "--max-sweeps", "1",
            "--jobs", "1",
            *extra,
        )

    def test_end_to_end_files(self, tmp_path, speech_wav, noise_wav):
        out_dir = tmp_path / "run1"
        proc = self._run(out_dir, speech_wav, noise_wav)
        assert proc.returncode == 0, proc.stderr
        for name in ("result.txt", "trace.log", "table.txt", "table.csv", "manifest.json"):
            assert (out_dir / name).exists(), name
        assert "best_gains=" in proc.stdout
        result = (out_dir / "result.txt").read_text()
        assert "mean_accuracy=" in result
        table = (out_dir / "table.txt").read_text()
        assert "unenhanced" in table and "improvement" in table

    def test_rerun_is_byte_identical(self, tmp_path, speech_wav, noise_wav):
        first = tmp_path / "a"
        second = tmp_path / "b"
        assert self._run(first, speech_wav, noise_wav).returncode == 0
        assert self._run(second, speech_wav, noise_wav).returncode == 0
        for name in ("result.txt", "trace.log", "table.txt", "table.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes(), name
        # manifests differ only in the out_dir parameter
        ma = json.loads((first / "manifest.json").read_text())
        mb = json.loads((second / "manifest.json").read_text())
        ma["parameters"].pop("out_dir")
        mb["parameters"].pop("out_dir")
        assert ma == mb

    def test_scenario_recorded_in_trace(self, tmp_path, speech_wav, noise_wav):
        out_dir = tmp_path / "mte"
        proc = self._run(out_dir, speech_wav, noise_wav, extra=["--scenario", "mix-then-enhance"])
        assert proc.returncode == 0, proc.stderr
        trace = (out_dir / "trace.log").read_text()
        assert "scenario=mix-then-enhance" in trace.splitlines()[0]

    def test_point_nsr(self, tmp_path, speech_wav, noise_wav):
        out_dir = tmp_path / "p2p"
        proc = self._run(out_dir, speech_wav, noise_wav, extra=["--point-nsr", "1.5"])
        assert proc.returncode == 0, proc.stderr
        result = (out_dir / "result.txt").read_text()
        assert result.count("nsr=") == 1
        assert "nsr=1.5" in result


class TestSimulateHlCommand:
    def test_zero_loss_identity(self, tmp_path, speech_wav):
        audiogram = tmp_path / "zero.txt"
        audiogram.write_text("\n".join(f"{f} 0" for f in (125, 250, 500, 1000, 2000, 4000, 8000)))
        out = tmp_path / "hl.wav"
        proc = run_cli("simulate-hl", speech_wav, audiogram, out, "--calibration-db", "170")
        assert proc.returncode == 0, proc.stderr
        a = read_wav(speech_wav).samples
        b = read_wav(out).samples
        assert np.max(np.abs(a - b)) < 5e-3
        assert (tmp_path / "hl.wav.manifest.json").exists()

    def test_sloped_loss_table_shows_attenuation(self, tmp_path):
        fs = 44100
        src = tmp_path / "wide.wav"
        rng = np.random.default_rng(2)
        write_wav(src, AudioBuffer(rng.uniform(-0.3, 0.3, fs), fs))
        audiogram = tmp_path / "sloped.txt"
        audiogram.write_text("125 30\n250 30\n500 40\n1000 50\n2000 60\n4000 60\n8000 60\n")
        out = tmp_path / "hl2.wav"
        proc = run_cli("simulate-hl", src, audiogram, out)
        assert proc.returncode == 0, proc.stderr
        # parse the band table: high band (cD1) share must collapse vs input
        shares = {}
        for line in proc.stdout.splitlines():
            m = re.match(r"\s*(c[AD]\d)\s+([\d.e+-]+)\s+([\d.e+-]+)\s+([\d.e+-]+)\s+([\d.e+-]+)", line)
            if m:
                shares[m.group(1)] = (float(m.group(3)), float(m.group(5)))  # in, out share
        assert shares["cD1"][1] < shares["cD1"][0] * 0.01
        assert shares["cA5"][1] > shares["cA5"][0]

    def test_malformed_audiogram_line_number(self, tmp_path, speech_wav):
        audiogram = tmp_path / "bad.txt"
        audiogram.write_text("125 30\n250 oops\n")
        proc = run_cli("simulate-hl", speech_wav, audiogram, tmp_path / "x.wav")
        assert proc.returncode == 2
        assert "bad.txt:2" in proc.stderr

    def test_descending_frequencies_rejected(self, tmp_path, speech_wav):
        audiogram = tmp_path / "desc.txt"
        audiogram.write_text("1000 30\n125 30\n")
        proc = run_cli("simulate-hl", speech_wav, audiogram, tmp_path / "x.wav")
        assert proc.returncode == 2
        assert "desc.txt:2" in proc.stderr


class TestSpectrogramCommand:
    def test_tone_brightest_row(self, tmp_path):
        fs, frame = 44100, 1024
        src = tmp_path / "tone.wav"
        t = np.arange(fs // 2) / fs
        write_wav(src, AudioBuffer(0.5 * np.sin(2 * np.pi * 1000 * t), fs))
        image = tmp_path / "s.pgm"
        matrix = tmp_path / "s.txt"
        proc = run_cli("spectrogram", src, "--frame", frame, "--hop", 512,
                       "--out-image", image, "--out-matrix", matrix)
        assert proc.returncode == 0, proc.stderr
        rows = [[float(v) for v in line.split()] for line in matrix.read_text().splitlines()]
        mat = np.array(rows)
        assert mat.shape[0] == frame // 2 + 1
        assert np.argmax(mat.mean(axis=1)) == round(1000 * frame / fs)
        assert image.read_bytes().startswith(b"P5\n")

    def test_silence_all_floor(self, tmp_path):
        src = tmp_path / "quiet.wav"
        write_wav(src, AudioBuffer(np.zeros(8000), 8000))
        matrix = tmp_path / "q.txt"
        proc = run_cli("spectrogram", src, "--frame", 512, "--hop", 256,
                       "--out-image", tmp_path / "q.pgm", "--out-matrix", matrix)
        assert proc.returncode == 0, proc.stderr
        values = {v for line in matrix.read_text().splitlines() for v in line.split()}
        assert values == {"-80"}

    def test_invalid_frame(self, tmp_path, speech_wav):
        proc = run_cli("spectrogram", speech_wav, "--frame", 1000, "--hop", 500,
                       "--out-image", tmp_path / "x.pgm", "--out-matrix", tmp_path / "x.txt")
        assert proc.returncode == 4


def test_version():
    proc = run_cli("--version")
    assert proc.returncode == 0
    assert "subwave" in proc.stdout


def test_usage_error_exit_code():
    proc = run_cli("enhance")  # missing required arguments
    assert proc.returncode == 1
