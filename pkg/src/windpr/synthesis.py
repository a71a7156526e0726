"""
Test-signal synthesis: two-channel noise with Corcos coherence, delayed
speech, iSNR-controlled mixtures and labelled segment sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import signal as sps

from .corcos import CorcosParams, SpeechGeometry, coherence
from .spectral import StftConfig

SEGMENT_KINDS = ("speech", "wind", "mixture")
DEFAULT_PLAN = (
    ("speech", 2.0),
    ("wind", 2.0),
    ("mixture", 2.0),
    ("speech", 2.0),
    ("mixture", 2.0),
)


def default_envelope(freqs: np.ndarray, knee_hz: float = 1000.0,
                     floor_hz: float = 20.0) -> np.ndarray:
    """1/f amplitude gain below ``knee_hz``, flat above, zero at DC.

    Normalised to unit total power over the given bins.
    """
    f = np.asarray(freqs, dtype=float)
    g = knee_hz / np.clip(f, floor_hz, knee_hz)
    g[f <= 0] = 0.0
    return g / np.sqrt(np.sum(g**2))


@dataclass
class NoiseSpec:
    corcos: CorcosParams
    duration: float
    spectral_envelope: np.ndarray | None = None  # per STFT bin; None -> default_envelope
    seed: int | None = 0

    def __post_init__(self):
        if not np.isfinite(self.duration) or self.duration <= 0:
            raise ValueError(f"duration must be positive, got {self.duration!r}")
        if self.spectral_envelope is not None:
            env = np.asarray(self.spectral_envelope, dtype=float)
            if not np.all(np.isfinite(env)) or np.any(env < 0):
                raise ValueError("spectral envelope must be finite and non-negative")


def _envelope_on(freqs, spec: NoiseSpec, stft: StftConfig):
    if spec.spectral_envelope is None:
        return default_envelope(freqs)
    env = np.asarray(spec.spectral_envelope, dtype=float)
    if env.shape != (stft.n_bins,):
        raise ValueError(f"envelope needs {stft.n_bins} bins, got {env.shape}")
    return np.interp(freqs, stft.frequencies(), env)


def gen_coherent_noise(spec: NoiseSpec, stft: StftConfig = StftConfig(), *,
                       target: Callable[[np.ndarray], np.ndarray] | None = None,
                       rng: np.random.Generator | None = None) -> np.ndarray:
    """Two-channel stationary noise whose complex coherence is the Corcos target.

    Synthesis runs on the DFT grid of the whole signal: channel 1 is
    ``N1``, channel 2 is ``conj(g)*N1 + sqrt(1-|g|^2)*N2`` with independent
    complex Gaussian ``N1, N2``, both shaped by the spectral envelope, so the
    cross-spectrum ``E[X1 conj(X2)]`` equals ``g`` times the auto spectrum.

    ``target`` overrides the coherence as a function of angular frequency.

    Returns
    -------
    np.ndarray
        Shape ``(2, n_samples)``.
    """
    n = int(round(spec.duration * stft.sample_rate))
    if n < 2:
        raise ValueError("duration too short for the sample rate")
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    freqs = np.fft.rfftfreq(n, 1.0 / stft.sample_rate)
    omega = 2.0 * np.pi * freqs
    g = np.asarray(target(omega) if target is not None else coherence(spec.corcos, omega),
                   dtype=complex)
    g = np.broadcast_to(g, omega.shape)
    mag2 = np.abs(g) ** 2
    if np.any(mag2 > 1.0 + 1e-12):
        raise AssertionError("target coherence magnitude exceeds one")
    env = _envelope_on(freqs, spec, stft)

    def white():
        return (rng.standard_normal(freqs.size) + 1j * rng.standard_normal(freqs.size)) / np.sqrt(2)

    n1 = white()
    n2 = white()
    X1 = env * n1
    X2 = env * (np.conj(g) * n1 + np.sqrt(np.clip(1.0 - mag2, 0.0, None)) * n2)
    # real-valued DC/Nyquist bins
    X1[0] = X2[0] = 0.0
    if n % 2 == 0:
        X1[-1] = X1[-1].real
        X2[-1] = X2[-1].real
    x = np.vstack([np.fft.irfft(X1, n), np.fft.irfft(X2, n)])
    return x / np.sqrt(np.mean(x[0] ** 2))


def delay_speech(mono, geom: SpeechGeometry, stft: StftConfig = StftConfig()) -> np.ndarray:
    """Two-channel direct-path speech: channel 2 delayed by the TDOA.

    The delay is applied as a per-bin phase ``exp(-j*omega*tau)`` on the
    STFT grid followed by overlap-add resynthesis. A broadside source gives
    two identical channels.
    """
    x = np.asarray(mono, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a mono signal")
    tau = geom.tdoa
    if tau == 0.0 or x.size == 0 or not np.any(x):
        return np.vstack([x, x.copy()])
    nov = stft.frame_len - stft.hop
    win = stft.window_array()
    _, _, Z = sps.stft(x, fs=stft.sample_rate, window=win, nperseg=stft.frame_len,
                       noverlap=nov, nfft=stft.nfft)
    omega = 2.0 * np.pi * np.fft.rfftfreq(stft.nfft, 1.0 / stft.sample_rate)
    Z = Z * np.exp(-1j * omega * tau)[:, None]
    _, y = sps.istft(Z, fs=stft.sample_rate, window=win, nperseg=stft.frame_len,
                     noverlap=nov, nfft=stft.nfft)
    y = y[: x.size]
    if y.size < x.size:
        y = np.pad(y, (0, x.size - y.size))
    return np.vstack([x, y])


def _power(x) -> float:
    return float(np.mean(np.asarray(x, dtype=float) ** 2))


def isnr_gain(speech, noise, isnr_db: float) -> float:
    """Scalar noise gain giving ``10*log10(P_speech/P_noise) = isnr_db`` on channel 1."""
    ps = _power(np.asarray(speech)[0])
    pn = _power(np.asarray(noise)[0])
    if ps <= 0 or pn <= 0:
        raise ValueError("speech and noise must both have non-zero power")
    return float(np.sqrt(ps / (pn * 10.0 ** (isnr_db / 10.0))))


def mix_at_isnr(speech, noise, isnr_db: float) -> np.ndarray:
    """Add ``noise`` to ``speech`` after rescaling it to the requested iSNR.

    Noise longer than the speech is cropped; shorter noise is looped.
    """
    s = np.asarray(speech, dtype=float)
    v = np.asarray(noise, dtype=float)
    if s.shape[0] != 2 or v.shape[0] != 2:
        raise ValueError("expected two-channel (2, N) arrays")
    n = s.shape[1]
    if v.shape[1] < n:
        v = np.tile(v, (1, -(-n // v.shape[1])))
    v = v[:, :n]
    return s + isnr_gain(s, v, isnr_db) * v


# ---------------------------------------------------------------------------
# pseudo-speech source

_VOWELS = (  # F1, F2, F3 [Hz]
    (730, 1090, 2440),
    (270, 2290, 3010),
    (530, 1840, 2480),
    (570, 840, 2410),
    (440, 1020, 2240),
    (660, 1720, 2410),
)


def pseudo_speech(duration: float, sample_rate: int = 16000,
                  rng: np.random.Generator | int | None = 0) -> np.ndarray:
    """Voiced speech-like mono signal: syllables of formant-shaped harmonics
    separated by short pauses. Normalised to 0.1 RMS.
    """
    rng = np.random.default_rng(rng)
    n = int(round(duration * sample_rate))
    out = np.zeros(n)
    t0 = 0
    while t0 < n:
        syl = int(rng.uniform(0.15, 0.3) * sample_rate)
        gap = int(rng.uniform(0.03, 0.08) * sample_rate)
        m = min(syl, n - t0)
        t = np.arange(m) / sample_rate
        f0 = rng.uniform(95, 220) * (1 + 0.05 * np.sin(2 * np.pi * rng.uniform(3, 6) * t))
        phase = 2 * np.pi * np.cumsum(f0) / sample_rate
        formants = np.array(_VOWELS[rng.integers(len(_VOWELS))], dtype=float)
        seg = np.zeros(m)
        for h in range(1, int(sample_rate / 2 / f0.max())):
            fh = h * f0.mean()
            amp = np.sum(1.0 / (1.0 + ((fh - formants) / (0.12 * formants)) ** 2)) / h**0.5
            seg += amp * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
        seg *= np.hanning(m) if m > 2 else 1.0
        out[t0:t0 + m] = seg
        t0 += syl + gap
    rms = np.sqrt(np.mean(out**2))
    return out * (0.1 / rms) if rms > 0 else out


# ---------------------------------------------------------------------------
# labelled sequences


@dataclass
class SequenceSpec:
    """Segment plan of an evaluation signal.

    ``plan`` lists ``(kind, seconds)`` with kind in speech/wind/mixture.
    Wind and mixture segments are labelled 1, speech segments 0.
    """

    plan: Sequence[tuple[str, float]] = DEFAULT_PLAN
    isnr_db: float = -5.0
    speech_geometry: SpeechGeometry = field(
        default_factory=lambda: SpeechGeometry(d=0.004, theta_s=np.pi / 2))
    corcos: CorcosParams = field(
        default_factory=lambda: CorcosParams(d=0.004, theta_w=0.0, U=1.8))
    spectral_envelope: np.ndarray | None = None
    seed: int | None = 0

    def __post_init__(self):
        if not self.plan:
            raise ValueError("empty segment plan")
        for kind, dur in self.plan:
            if kind not in SEGMENT_KINDS:
                raise ValueError(f"unknown segment kind {kind!r}")
            if not np.isfinite(dur) or dur <= 0:
                raise ValueError(f"segment duration must be positive, got {dur!r}")
        if not np.isclose(self.speech_geometry.d, self.corcos.d):
            raise ValueError("speech and wind geometry use different mic spacings")

    @property
    def duration(self) -> float:
        return float(sum(d for _, d in self.plan))

    def speech_seconds(self) -> float:
        return float(sum(d for k, d in self.plan if k != "wind"))


def frame_labels(sample_labels, stft: StftConfig = StftConfig()) -> np.ndarray:
    """Per-frame labels by majority of samples; ties go to 1 (wind present)."""
    lab = np.asarray(sample_labels, dtype=float)
    n = stft.n_frames(lab.size)
    if n == 0:
        return np.zeros(0, dtype=int)
    c = np.concatenate([[0.0], np.cumsum(lab)])
    starts = np.arange(n) * stft.hop
    frac = (c[starts + stft.frame_len] - c[starts]) / stft.frame_len
    return (frac >= 0.5).astype(int)


def build_sequence(spec: SequenceSpec, speech_source,
                   stft: StftConfig = StftConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate the segment plan into one two-channel signal.

    Speech segments consume consecutive material from ``speech_source``.
    The wind is one continuous realisation whose gain is set once, from the
    iSNR over all mixture segments, and reused for the pure-wind segments.

    Returns
    -------
    signal : np.ndarray
        Shape ``(2, n_samples)``.
    labels : np.ndarray
        Per-frame 0/1 labels aligned with :func:`windpr.spectral.stft`.
    """
    fs = stft.sample_rate
    lengths = [int(round(d * fs)) for _, d in spec.plan]
    kinds = [k for k, _ in spec.plan]
    total = sum(lengths)
    need = sum(n for k, n in zip(kinds, lengths) if k != "wind")

    mono = np.asarray(speech_source, dtype=float)
    if mono.ndim != 1:
        raise ValueError("speech source must be mono")
    if mono.size < need:
        raise ValueError(
            f"speech source has {mono.size} samples, plan needs {need}")
    speech = delay_speech(mono[:need], spec.speech_geometry, stft)

    has_wind = any(k != "speech" for k in kinds)
    if has_wind:
        noise = gen_coherent_noise(
            NoiseSpec(spec.corcos, total / fs, spec.spectral_envelope, spec.seed), stft)
    out = np.zeros((2, total))
    sample_labels = np.zeros(total, dtype=int)

    mix_s, mix_v = [], []
    pos = sp = 0
    for kind, n in zip(kinds, lengths):
        if kind != "wind":
            out[:, pos:pos + n] = speech[:, sp:sp + n]
            if kind == "mixture":
                mix_s.append(speech[:, sp:sp + n])
                mix_v.append(noise[:, pos:pos + n])
            sp += n
        if kind != "speech":
            sample_labels[pos:pos + n] = 1
        pos += n

    if has_wind:
        if mix_s:
            gain = isnr_gain(np.hstack(mix_s), np.hstack(mix_v), spec.isnr_db)
        else:
            # no mixture to calibrate against: wind at the speech RMS
            gain = np.sqrt(_power(speech[0])) if need else 0.1
        wind_mask = sample_labels.astype(bool)
        out[:, wind_mask] += gain * noise[:, wind_mask]

    return out, frame_labels(sample_labels, stft)
