import json
import wave
from pathlib import Path

import numpy as np
import pytest

from memore.core import EmotionDistribution, EmotionLabel, LABEL_ORDER, MediaSegment, Modality
from memore.recognizers import (
    ArousalBucket,
    BUCKET_PRIORS,
    PlaybackRecognizer,
    ReferenceRecognizer,
    RMS_HIGH_MIN,
    RMS_HIGH_WITH_ZCR_MIN,
    RMS_LOW_MAX,
    TooShortError,
    UnsupportedModalityError,
    ZCR_HIGH_MIN,
    arousal_bucket,
    audio_features,
    load_lexicon,
    reference_audio_score,
    reference_text_score,
)

from conftest import dist, make_sine


class TestTextScore:
    def test_two_joy_hits_hand_arithmetic(self):
        # amazing and love are joy entries: joy = (2 + 0.125) / 3, others 0.125 / 3
        d = reference_text_score("This is amazing, I love it")
        assert d.argmax() is EmotionLabel.JOY
        assert abs(d[EmotionLabel.JOY] - 2.125 / 3) < 1e-12
        for l in LABEL_ORDER:
            if l is not EmotionLabel.JOY:
                assert abs(d[l] - 0.125 / 3) < 1e-12

    def test_empty_text_uniform(self):
        d = reference_text_score("")
        assert all(d[l] == 0.125 for l in LABEL_ORDER)

    def test_no_hits_uniform(self):
        d = reference_text_score("the quick brown fox jumps over")
        assert all(abs(d[l] - 0.125) < 1e-12 for l in LABEL_ORDER)

    def test_one_fear_one_anger(self):
        d = reference_text_score("I am scared and furious")
        assert abs(d[EmotionLabel.FEAR] - 1.125 / 3) < 1e-12
        assert abs(d[EmotionLabel.ANGER] - 1.125 / 3) < 1e-12
        assert abs(d[EmotionLabel.JOY] - 0.125 / 3) < 1e-12

    def test_case_insensitive(self):
        assert reference_text_score("AMAZING") == reference_text_score("amazing")

    def test_deterministic(self):
        text = "wonderful but terrified"
        assert reference_text_score(text) == reference_text_score(text)


class TestLexicon:
    def test_bundled_lexicon_shape(self):
        lex = load_lexicon()
        assert len(lex) >= 150
        for token, counts in lex.items():
            assert set(counts) == set(LABEL_ORDER)
            assert all(c >= 0 for c in counts.values())


class TestAudioScore:
    def test_silence_low_bucket(self):
        samples = np.zeros(16000, dtype=np.int16)
        d = reference_audio_score(samples, 16000)
        assert d == EmotionDistribution.from_mapping(BUCKET_PRIORS[ArousalBucket.LOW])

    def test_full_scale_square_wave_high_bucket(self):
        samples = np.tile(np.array([32767, -32768] * 100, dtype=np.int16), 160)
        d = reference_audio_score(samples, 16000)
        assert d == EmotionDistribution.from_mapping(BUCKET_PRIORS[ArousalBucket.HIGH])

    def test_white_noise_minus20dbfs_bucket_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(16000)
        x = x / np.sqrt(np.mean(x * x)) * 0.1  # -20 dBFS RMS
        samples = (x * 32768).clip(-32768, 32767).astype(np.int16)
        # independent recomputation of the features and threshold walk
        xs = samples.astype(np.float64) / 32768.0
        rms = float(np.sqrt(np.mean(xs * xs)))
        crossings = int(np.sum(np.signbit(xs[1:]) != np.signbit(xs[:-1])))
        zcr = crossings / (len(xs) - 1)
        if rms < RMS_LOW_MAX:
            expected = ArousalBucket.LOW
        elif rms >= RMS_HIGH_MIN or (rms >= RMS_HIGH_WITH_ZCR_MIN and zcr >= ZCR_HIGH_MIN):
            expected = ArousalBucket.HIGH
        else:
            expected = ArousalBucket.MID
        got_rms, got_zcr = audio_features(samples)
        assert abs(got_rms - rms) < 1e-12
        assert abs(got_zcr - zcr) < 1e-12
        assert arousal_bucket(got_rms, got_zcr) is expected
        d = reference_audio_score(samples, 16000)
        assert d == EmotionDistribution.from_mapping(BUCKET_PRIORS[expected])

    def test_too_short(self):
        with pytest.raises(TooShortError):
            reference_audio_score(np.zeros(100, dtype=np.int16), 16000)

    def test_bucket_priors_are_valid_distributions(self):
        for prior in BUCKET_PRIORS.values():
            EmotionDistribution.from_mapping(prior)  # raises if invalid


def _segment(tmp_path: Path, session="s1", seg_id=0, text=None, audio=None) -> MediaSegment:
    refs = {}
    mods = set()
    d = tmp_path / session / str(seg_id)
    d.mkdir(parents=True, exist_ok=True)
    if text is not None:
        p = d / "transcript.txt"
        p.write_text(text, encoding="utf-8")
        refs[Modality.TEXT] = str(p)
        mods.add(Modality.TEXT)
    if audio is not None:
        p = d / "audio.wav"
        with wave.open(str(p), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(16000)
            w.writeframes(audio.tobytes())
        refs[Modality.AUDIO] = str(p)
        mods.add(Modality.AUDIO)
    return MediaSegment(seg_id, session, 0.0, 10.0, frozenset(mods), refs)


class TestReferenceRecognizer:
    def test_scores_text_from_clip_store(self, tmp_path):
        seg = _segment(tmp_path, text="this is amazing, I love it")
        rec = ReferenceRecognizer()
        score = rec.score(seg, Modality.TEXT)
        assert score.distribution.argmax() is EmotionLabel.JOY
        assert score.model_id == rec.model_id

    def test_scores_audio_from_clip_store(self, tmp_path):
        seg = _segment(tmp_path, audio=make_sine(2.0))
        rec = ReferenceRecognizer()
        score = rec.score(seg, Modality.AUDIO)
        EmotionDistribution.from_mapping(score.distribution.as_dict())

    def test_repeat_calls_identical(self, tmp_path):
        seg = _segment(tmp_path, text="wonderful", audio=make_sine(2.0))
        rec = ReferenceRecognizer()
        for m in (Modality.TEXT, Modality.AUDIO):
            assert rec.score(seg, m) == rec.score(seg, m)

    def test_missing_modality_rejected(self, tmp_path):
        seg = _segment(tmp_path, text="hi")
        with pytest.raises(UnsupportedModalityError):
            ReferenceRecognizer().score(seg, Modality.AUDIO)

    def test_video_unsupported(self, tmp_path):
        seg = _segment(tmp_path, text="hi")
        object.__setattr__(seg, "modalities_present", frozenset({Modality.VIDEO}))
        object.__setattr__(seg, "payload_refs", {Modality.VIDEO: "x"})
        with pytest.raises(UnsupportedModalityError):
            ReferenceRecognizer().score(seg, Modality.VIDEO)


class TestPlayback:
    def test_exact_lookup(self, tmp_path):
        d = dist(fear=0.7, surprise=0.3)
        rec = PlaybackRecognizer({"s1/0": {"text": d}})
        seg = _segment(tmp_path, text="whatever")
        assert rec.score(seg, Modality.TEXT).distribution == d

    def test_from_file_round_trip(self, tmp_path):
        d = dist(joy=0.9, trust=0.1)
        manifest = {"s1/0": {"audio": d.to_json_obj()}}
        p = tmp_path / "playback.json"
        p.write_text(json.dumps(manifest))
        rec = PlaybackRecognizer.from_file(p)
        seg = _segment(tmp_path, audio=make_sine(1.0))
        got = rec.score(seg, Modality.AUDIO).distribution
        for l in LABEL_ORDER:
            assert abs(got[l] - d[l]) < 1e-9

    def test_invalid_manifest_distribution_rejected(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"k": {"audio": {l.value: 0.2 for l in LABEL_ORDER}}}))
        with pytest.raises(ValueError):
            PlaybackRecognizer.from_file(p)
