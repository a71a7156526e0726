import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windpr.corcos import CorcosParams, pr_wind
from windpr.spectral import (
    FramePair,
    PsdState,
    StftConfig,
    band_bins,
    mean_psd,
    msc_measured,
    power_ratio_measured,
    stft,
    stft_frames,
    track_psd,
    update_psd,
)
from windpr.synthesis import NoiseSpec, gen_coherent_noise

CFG = StftConfig()


def test_default_config_matches_protocol():
    assert (CFG.sample_rate, CFG.frame_len, CFG.hop, CFG.nfft) == (16000, 2048, 512, 2048)
    assert StftConfig.from_ms(16000, 128, 0.75) == CFG
    assert CFG.bin_hz == 7.8125


def test_nfft_pads_to_power_of_two():
    cfg = StftConfig.from_ms(44100, 128, 0.75)
    assert cfg.frame_len == 5645
    assert cfg.nfft == 8192


@pytest.mark.parametrize("n,expected", [(2047, 0), (2048, 1), (2559, 1), (2560, 2), (16000, 28)])
def test_frame_count(n, expected):
    assert CFG.n_frames(n) == expected
    if expected:
        assert len(stft_frames(np.zeros((2, n)), CFG)) == expected


def test_short_signal_warns():
    with pytest.warns(RuntimeWarning):
        frames = stft_frames(np.zeros((2, 100)), CFG)
    assert frames == []


def test_zero_input_zero_spectra():
    X1, X2 = stft(np.zeros((2, 4096)), CFG)
    assert not np.any(X1) and not np.any(X2)


def test_sinusoid_peak_at_bin():
    k = 37
    t = np.arange(4096) / CFG.sample_rate
    x = np.sin(2 * np.pi * k * CFG.bin_hz * t)
    X1, X2 = stft(np.vstack([x, 0.5 * x]), CFG)
    assert np.all(np.argmax(np.abs(X1), axis=1) == k)
    assert np.all(np.argmax(np.abs(X2), axis=1) == k)


def test_accepts_samples_by_channels():
    x = np.random.default_rng(0).standard_normal((2, 5000))
    a = stft(x, CFG)
    b = stft(x.T, CFG)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


# -- recursive smoothing --------------------------------------------------------

def _rand_frame(rng, n=9):
    return FramePair(rng.standard_normal(n) + 1j * rng.standard_normal(n),
                     rng.standard_normal(n) + 1j * rng.standard_normal(n))


def test_beta_zero_gives_instantaneous_periodogram():
    rng = np.random.default_rng(1)
    st0 = PsdState.from_frame(_rand_frame(rng), beta=0.0)
    f = _rand_frame(rng)
    st1 = update_psd(st0, f)
    assert np.allclose(st1.phi_11, np.abs(f.X1) ** 2, rtol=1e-15)
    assert np.allclose(st1.phi_diff, np.abs(f.X1 - f.X2) ** 2, rtol=1e-15)
    assert np.allclose(st1.phi_12, f.X1 * np.conj(f.X2), rtol=1e-15)


def test_identical_channels_difference_decays():
    rng = np.random.default_rng(2)
    st0 = PsdState.from_frame(_rand_frame(rng), beta=0.5)
    X = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    st1 = update_psd(st0, FramePair(X, X.copy()))
    assert np.array_equal(st1.phi_diff, 0.5 * st0.phi_diff)


def test_smoothing_arithmetic():
    st0 = PsdState(*(np.array([2.0]) for _ in range(4)), np.array([0j]), beta=0.5)
    # |X1 - X2|^2 = 4
    st1 = update_psd(st0, FramePair(np.array([2.0 + 0j]), np.array([0j])))
    assert st1.phi_diff[0] == 3.0


def test_bin_mismatch():
    rng = np.random.default_rng(3)
    st0 = PsdState.from_frame(_rand_frame(rng, 9))
    with pytest.raises(ValueError):
        update_psd(st0, _rand_frame(rng, 10))


def test_beta_range():
    with pytest.raises(ValueError):
        PsdState.from_frame(_rand_frame(np.random.default_rng(0)), beta=1.0)


def test_first_frame_initialises_state():
    x = np.random.default_rng(4).standard_normal((2, 8192))
    X1, X2 = stft(x, CFG)
    first = next(track_psd(zip(X1, X2), 0.5))
    assert np.allclose(first.phi_11, np.abs(X1[0]) ** 2, rtol=1e-12, atol=0)


def test_steady_state_convergence():
    x = gen_coherent_noise(NoiseSpec(CorcosParams(0.004, 0.0, 1.8), 20.0, seed=5), CFG)
    X1, X2 = stft(x, CFG)
    k = band_bins(CFG, 0, 500)
    states = list(track_psd(zip(X1, X2), 0.95))
    # relative step size between successive updates shrinks as the estimate settles
    deltas = np.array([np.mean(np.abs(b.phi_sum[k] - a.phi_sum[k]) / b.phi_sum[k])
                       for a, b in zip(states, states[1:])])
    early, late = deltas[:20].mean(), deltas[-200:].mean()
    assert late < early


# -- measured PR / MSC ----------------------------------------------------------

def test_pr_identical_channels_is_zero():
    x = np.random.default_rng(6).standard_normal(8192)
    st = mean_psd(*stft(np.vstack([x, x]), CFG))
    assert np.all(power_ratio_measured(st, np.arange(1, CFG.n_bins)) == 0.0)


def test_pr_antiphase_is_undefined():
    x = np.random.default_rng(7).standard_normal(8192)
    st = mean_psd(*stft(np.vstack([x, -x]), CFG))
    assert np.all(np.isnan(power_ratio_measured(st)))
    assert math.isnan(power_ratio_measured(st, 10))


def test_msc_identical_and_scaled():
    x = np.random.default_rng(8).standard_normal(8192)
    for c in (1.0, -3.5, 1e-3):
        st = mean_psd(*stft(np.vstack([x, c * x]), CFG))
        m = msc_measured(st, np.arange(1, CFG.n_bins))
        assert np.allclose(m, 1.0, atol=1e-9)


def test_msc_silence_undefined():
    st = mean_psd(*stft(np.zeros((2, 4096)), CFG))
    assert np.all(np.isnan(msc_measured(st)))
    assert np.all(np.isnan(power_ratio_measured(st)))


def test_msc_independent_noise_long_run():
    x = np.random.default_rng(9).standard_normal((2, 10 * 16000))
    st = mean_psd(*stft(x, CFG))
    m = msc_measured(st, np.arange(1, CFG.n_bins))
    assert np.all(m < 0.2)
    assert np.all(m > 0)


def test_band_bins_protocol_band():
    k = band_bins(CFG, 0, 500)
    assert k[0] == 1 and k[-1] == 64 and k.size == 64


def test_band_bins_full_range_and_errors():
    assert np.array_equal(band_bins(CFG, 0, 8000), np.arange(1, CFG.n_bins))
    with pytest.raises(ValueError):
        band_bins(CFG, 100, 100)
    with pytest.raises(ValueError):
        band_bins(CFG, 0, 9000)
    with pytest.raises(ValueError):
        band_bins(CFG, 1.0, 2.0)  # between bin centres


def test_measured_pr_matches_theory_cross_flow():
    # >= 10 s of synthesized cross-flow wind, 0-500 Hz band
    p = CorcosParams(0.004, math.pi / 2, 1.8)
    x = gen_coherent_noise(NoiseSpec(p, 10.0, seed=0), CFG)
    st = mean_psd(*stft(x, CFG))
    k = band_bins(CFG, 0, 500)
    err = np.abs(power_ratio_measured(st, k) - pr_wind(p, CFG.omegas()[k]))
    assert err.mean() <= 0.05


# -- properties -----------------------------------------------------------------

signals = st.integers(0, 2**32 - 1).map(
    lambda s: np.random.default_rng(s).standard_normal((2, 2048 + 512 * 5))
    * np.random.default_rng(s + 1).uniform(1e-3, 1e3, size=(2, 1)))


@given(signals, st.floats(0.0, 0.99))
@settings(max_examples=30, deadline=None)
def test_parallelogram_and_cauchy_schwarz(x, beta):
    X1, X2 = stft(x, CFG)
    for s in track_psd(zip(X1, X2), beta):
        lhs = s.phi_diff + s.phi_sum
        rhs = 2 * (s.phi_11 + s.phi_22)
        assert np.all(np.abs(lhs - rhs) <= 1e-6 * rhs + 1e-300)
        assert np.all(np.abs(s.phi_12) ** 2 <= s.phi_11 * s.phi_22 * (1 + 1e-9))
        for arr in (s.phi_diff, s.phi_sum, s.phi_11, s.phi_22):
            assert np.all(arr >= 0)
        m = msc_measured(s)
        m = m[~np.isnan(m)]
        assert np.all((m >= 0) & (m <= 1 + 1e-9))


@given(signals, st.floats(1e-3, 1e3))
@settings(max_examples=30, deadline=None)
def test_gain_invariance(x, g):
    a = mean_psd(*stft(x, CFG))
    b = mean_psd(*stft(g * x, CFG))
    k = np.arange(1, CFG.n_bins)
    assert np.allclose(power_ratio_measured(a, k), power_ratio_measured(b, k), rtol=1e-12, atol=0)
    assert np.allclose(msc_measured(a, k), msc_measured(b, k), rtol=1e-12, atol=0)
