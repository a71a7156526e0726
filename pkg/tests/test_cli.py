import csv
import io
import json

import numpy as np
import pytest
from scipy.io import wavfile

from windpr.cli import main
from windpr.wavio import read_wav


def _table(path):
    text = path.read_text()
    head, body = text.split("\n", 1)
    assert head.startswith("# ")
    json.loads(head[2:])
    rows = list(csv.reader(io.StringIO(body)))
    return rows[0], np.array(rows[1:], dtype=float)


def test_theory_fig1a(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["theory", "--preset", "fig1a", "-o", str(out)]) == 0
    cols, t = _table(out)
    assert cols == ["frequency_hz", "pr_wind", "pr_speech"]
    f, pw, ps = t.T
    assert f[0] == 0 and f[-1] == 8000
    assert np.all(np.diff(pw) >= 0) and pw[-1] == pytest.approx(1.0, abs=1e-3)
    assert np.all(ps[f <= 1000] < 2e-3)


def test_theory_fig1b(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["theory", "--preset", "fig1b", "--f-max", "1000", "--f-step", "1",
                 "-o", str(out)]) == 0
    _, t = _table(out)
    pw = t[:, 1]
    assert pw.max() > 1
    assert np.count_nonzero(np.diff(np.sign(np.diff(pw)))) >= 4


def test_theory_empty_grid(tmp_path):
    assert main(["theory", "--f-min", "100", "--f-max", "50"]) == 2
    assert main(["theory", "--f-step", "0"]) == 2


def test_theory_invalid_params():
    assert main(["theory", "--mic-distance-m", "0"]) == 2
    assert main(["theory", "--wind-speed-ms", "-1"]) == 2


def _synth(tmp_path, name, *extra):
    wav, lab = tmp_path / f"{name}.wav", tmp_path / f"{name}.csv"
    code = main(["synth", "--out", str(wav), "--labels", str(lab), *extra])
    return code, wav, lab


def test_synth_default_sequence(tmp_path):
    code, wav, lab = _synth(tmp_path, "s")
    assert code == 0
    rate, x = read_wav(wav)
    assert rate == 16000 and x.shape == (160000, 2)
    head = lab.read_text().splitlines()[0]
    assert "output_gain=" in head
    labels = np.loadtxt(lab, delimiter=",", skiprows=2, dtype=int)[:, 1]
    assert labels.size == 309
    assert labels[0] == 0 and labels[-1] == 1


def test_synth_byte_identical(tmp_path):
    a = _synth(tmp_path, "a", "--seed", "4")
    b = _synth(tmp_path, "b", "--seed", "4")
    assert a[1].read_bytes() == b[1].read_bytes()
    assert a[2].read_bytes() == b[2].read_bytes()
    c = _synth(tmp_path, "c", "--seed", "5")
    assert c[1].read_bytes() != a[1].read_bytes()


def test_synth_negative_duration(tmp_path):
    out = str(tmp_path / "n.wav")
    assert main(["synth", "--kind", "noise", "--duration", "-1", "--out", out]) == 2
    assert main(["synth", "--segment-s", "-2", "--out", out]) == 2


def test_detect_silence(tmp_path):
    wav, out = tmp_path / "z.wav", tmp_path / "z.csv"
    wavfile.write(wav, 16000, np.zeros((16000, 2), dtype=np.int16))
    assert main(["detect", str(wav), "-o", str(out)]) == 0
    cols, t = _table(out)
    assert cols == ["frame_index", "time_s", "soft_pr", "hard_pr", "soft_msc", "hard_msc"]
    assert not np.any(t[:, 3]) and not np.any(t[:, 5])


def test_detect_pure_wind(tmp_path):
    wav, out = tmp_path / "w.wav", tmp_path / "w.csv"
    assert main(["synth", "--kind", "noise", "--duration", "5", "--out", str(wav)]) == 0
    assert main(["detect", str(wav), "-o", str(out)]) == 0
    _, t = _table(out)
    assert t[:, 3].mean() > 0.5


def test_detect_byte_identical(tmp_path):
    wav = tmp_path / "w.wav"
    main(["synth", "--kind", "noise", "--duration", "2", "--out", str(wav)])
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["detect", str(wav), "-o", str(a)]) == 0
    assert main(["detect", str(wav), "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_detect_error_codes(tmp_path):
    mono = tmp_path / "mono.wav"
    wavfile.write(mono, 16000, np.zeros(4000, dtype=np.int16))
    assert main(["detect", str(mono)]) == 2

    good = tmp_path / "good.wav"
    wavfile.write(good, 16000, np.zeros((4000, 2), dtype=np.int16))
    trunc = tmp_path / "trunc.wav"
    trunc.write_bytes(good.read_bytes()[:20])
    assert main(["detect", str(trunc)]) == 3
    assert main(["detect", str(tmp_path / "missing.wav")]) == 3

    i32 = tmp_path / "i32.wav"
    wavfile.write(i32, 16000, np.zeros((4000, 2), dtype=np.int32))
    assert main(["detect", str(i32)]) == 4


def test_detect_empty_band(tmp_path):
    wav = tmp_path / "w.wav"
    wavfile.write(wav, 16000, np.zeros((4000, 2), dtype=np.int16))
    assert main(["detect", str(wav), "--band-hz", "1:2"]) == 2


def _roc(tmp_path, name, *extra):
    c, j = tmp_path / f"{name}.csv", tmp_path / f"{name}.json"
    code = main(["roc", "--trials", "1", "--segment-s", "1", "--out-csv", str(c),
                 "--out-json", str(j), *extra])
    return code, c, j


def test_roc_single_trial_deterministic(tmp_path):
    a = _roc(tmp_path, "a", "--synthetic-speech")
    b = _roc(tmp_path, "b", "--synthetic-speech")
    assert a[0] == b[0] == 0
    assert a[1].read_bytes() == b[1].read_bytes()
    assert a[2].read_bytes() == b[2].read_bytes()
    cols, t = _table(a[1])
    assert cols == ["theta", "fpr_pr", "tpr_pr", "fpr_msc", "tpr_msc"]
    assert t.shape == (20, 5)
    doc = json.loads(a[2].read_text())
    assert {"auc_pr", "auc_msc", "trial_seeds", "config"} <= set(doc)


def test_roc_speech_dir(tmp_path):
    d = tmp_path / "speech"
    d.mkdir()
    for i in range(2):
        x = np.random.default_rng(i).standard_normal(24000) * 0.1
        wavfile.write(d / f"{i}.wav", 16000, x.astype(np.float32))
    assert _roc(tmp_path, "r", "--speech-dir", str(d))[0] == 0


def test_roc_usage_errors(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert _roc(tmp_path, "e", "--speech-dir", str(empty))[0] == 2
    assert _roc(tmp_path, "b", "--synthetic-speech", "--band-hz", "1:2")[0] == 2
    assert _roc(tmp_path, "t", "--synthetic-speech", "--trials", "0")[0] == 2
