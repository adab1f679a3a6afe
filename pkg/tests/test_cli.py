import json
import wave
from pathlib import Path

import pytest
from click.testing import CliRunner

from memore.cli import main

from conftest import FIXTURES, make_sine


@pytest.fixture()
def runner():
    return CliRunner()


def write_config(tmp_path) -> Path:
    cfg = tmp_path / "memore.toml"
    cfg.write_text(f'[storage]\ndir = "{tmp_path / "store"}"\n')
    return cfg


class TestEvalSweep:
    def test_fixture_run(self, runner, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            [
                "eval", "sweep",
                "--manifest", str(FIXTURES / "sweep_manifest.csv"),
                "--scores", str(FIXTURES / "sweep_scores.json"),
                "--lengths", "6,10,15,30,60",
                "--out", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "best_length=10" in result.output
        results = json.loads((out / "results.json").read_text())
        assert results["best_length"] == 10.0
        assert len(results["per_length"]) == 5


class TestEvalClasses:
    def test_fixture_run(self, runner, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            [
                "eval", "classes",
                "--manifest", str(FIXTURES / "classes_manifest.csv"),
                "--scores", str(FIXTURES / "classes_scores.json"),
                "--out", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        results = json.loads((out / "results.json").read_text())
        assert results["overall_total"] == 48
        assert results["per_label"][0]["label"] == "joy"


class TestIngestReport:
    def test_end_to_end(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        wav = tmp_path / "in.wav"
        with wave.open(str(wav), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(16000)
            w.writeframes(make_sine(30.0).tobytes())
        txt = tmp_path / "t.txt"
        txt.write_text("1.0\t9.0\tthis is wonderful\n")
        r1 = runner.invoke(
            main,
            [
                "ingest", "--config", str(cfg), "--session", "s1",
                "--audio", str(wav), "--transcript", str(txt), "--stop",
            ],
        )
        assert r1.exit_code == 0, r1.output
        r2 = runner.invoke(
            main, ["report", "--config", str(cfg), "--session", "s1", "--format", "markdown"]
        )
        assert r2.exit_code == 0, r2.output
        assert r2.output.startswith("# Session report")

    def test_config_env_var_override(self, runner, tmp_path, monkeypatch):
        cfg = write_config(tmp_path)
        monkeypatch.setenv("MEMORE_CONFIG", str(cfg))
        wav = tmp_path / "in.wav"
        with wave.open(str(wav), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(16000)
            w.writeframes(make_sine(10.0).tobytes())
        r = runner.invoke(main, ["ingest", "--session", "s2", "--audio", str(wav)])
        assert r.exit_code == 0, r.output
        assert (tmp_path / "store" / "s2" / "events.jsonl").exists()
