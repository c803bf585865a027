import math

import numpy as np
import pytest

import audioad


def tone(freq=440.0, n=16000, rate=16000, amp=0.5):
    t = np.arange(n) / rate
    return amp * np.sin(2 * np.pi * freq * t)


def test_wav_round_trip(tmp_path):
    x = np.linspace(-0.9, 0.9, 1000)
    path = tmp_path / "x.wav"
    audioad.write_wav(x, 16000, str(path))
    y, rate = audioad.read_wav(str(path))
    assert rate == 16000
    assert np.max(np.abs(y - x)) <= 1 / 32767


def test_bad_file_raises(tmp_path):
    path = tmp_path / "bad.wav"
    path.write_bytes(b"RIFX" + b"\0" * 40)
    with pytest.raises(audioad.AudioadError, match="MalformedContainer"):
        audioad.read_wav(str(path))


def test_resample_constant():
    y = audioad.resample_linear(np.full(441, 0.3), 44100, 16000)
    assert np.all(y == 0.3)


def test_spectrogram_shape():
    s = audioad.power_spectrogram(tone(), 16000)
    assert s.shape == (1 + (16000 - 400) // 160, 257)


def test_mfcc_silence_and_shape():
    m = audioad.mfcc(np.zeros(16000))
    assert m.shape[1] == 13
    assert np.allclose(m[:, 0], math.sqrt(26) * math.log(1e-10))
    assert np.all(m[:, 1:] == 0)


def test_features_schema():
    names = audioad.feature_schema()
    assert len(names) == 30
    feats = audioad.extract_features(tone())
    assert list(feats) == names
    assert "MFCC_mean_12" in feats


def test_preprocess_pieces():
    x, silent = audioad.normalize(np.array([0.1, -0.2]), "peak", 0.99)
    assert not silent
    assert x[1] == pytest.approx(-0.99)
    assert audioad.zero_crossing_rate(np.array([1.0, -1.0, 1.0, -1.0])) == 1.0
    cleaned, weights = audioad.nlms_cancel(np.ones(100), np.zeros(100), 0.5, 8)
    assert np.all(cleaned == 1.0) and np.all(weights == 0.0)
    y = audioad.spectral_subtract(np.zeros(8000), 16000)
    assert np.all(y == 0.0)


def test_models_and_metrics():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, size=(200, 4))
    y = [int(v > 0) for v in X[:, 2]]
    forest = audioad.train_forest(X, y, ["neg", "pos"], n_trees=20, seed=1)
    svm = audioad.train_svm(X, y, ["neg", "pos"], seed=1)
    ens = audioad.make_ensemble([(forest, 0.5), (svm, 0.5)])
    pred = ens.predict(X)
    m = audioad.metrics(y, pred, 2)
    assert m["accuracy"] > 0.9
    assert forest.feature_importance()[0][0] == forest.feature_names[2]
    again = audioad.Model.from_json(ens.to_json())
    assert np.array_equal(again.predict_proba(X), ens.predict_proba(X))
    assert audioad.confusion_matrix([0, 0, 1, 1], [0, 1, 1, 1], 2) == [[1, 1], [0, 2]]


def test_synth_and_cli(tmp_path):
    samples, rate, label = audioad.synthesize_clip(150)
    assert rate == 16000 and label == "anomalous"
    assert np.max(np.abs(samples)) <= 0.95
    code, _, err = audioad.run_cli(["synth", "--n", "2", "--out", str(tmp_path)])
    assert code == 0, err
    assert len(list((tmp_path / "clips").glob("*.wav"))) == 4
    code, _, err = audioad.run_cli(["synth", "--n", "0", "--out", str(tmp_path)])
    assert code == 2
