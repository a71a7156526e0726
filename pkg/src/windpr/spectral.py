"""
STFT front-end and recursively smoothed periodogram estimates for a
two-microphone signal pair.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np
from scipy.signal import get_window

# relative to the frame's total auto power
PSD_FLOOR = 1e-12


@dataclass(frozen=True)
class StftConfig:
    """Framing parameters. Defaults are 128 ms Hann frames with 75 % overlap at 16 kHz."""

    sample_rate: int = 16000
    frame_len: int = 2048
    hop: int = 512
    window: str = "hann"

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.frame_len <= 0 or not 0 < self.hop <= self.frame_len:
            raise ValueError("need 0 < hop <= frame_len")

    @classmethod
    def from_ms(cls, sample_rate: int = 16000, frame_ms: float = 128.0,
                overlap: float = 0.75, window: str = "hann") -> "StftConfig":
        if not 0 <= overlap < 1:
            raise ValueError("overlap must be in [0, 1)")
        frame_len = int(round(frame_ms * sample_rate / 1000.0))
        hop = max(1, int(round(frame_len * (1.0 - overlap))))
        return cls(sample_rate, frame_len, hop, window)

    @property
    def nfft(self) -> int:
        """DFT size: frame length zero-padded to the next power of two."""
        return 1 << (self.frame_len - 1).bit_length()

    @property
    def n_bins(self) -> int:
        return self.nfft // 2 + 1

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.nfft

    def frequencies(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_hz

    def omegas(self) -> np.ndarray:
        return 2.0 * np.pi * self.frequencies()

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.frame_len:
            return 0
        return (n_samples - self.frame_len) // self.hop + 1

    def window_array(self) -> np.ndarray:
        return get_window(self.window, self.frame_len, fftbins=True)


class FramePair(NamedTuple):
    X1: np.ndarray
    X2: np.ndarray


def _as_pair(signal) -> np.ndarray:
    x = np.asarray(signal, dtype=float)
    if x.ndim != 2 or 2 not in x.shape:
        raise ValueError(f"expected a two-channel signal, got shape {x.shape}")
    # accept (2, N) or (N, 2)
    if x.shape[0] != 2:
        x = x.T
    return x


def stft(signal, config: StftConfig = StftConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Windowed one-sided spectra of both channels, shape ``(n_frames, n_bins)``.

    A signal shorter than one frame yields empty arrays and a warning.
    """
    x = _as_pair(signal)
    n = config.n_frames(x.shape[1])
    if n == 0:
        warnings.warn(
            f"signal of {x.shape[1]} samples is shorter than one frame "
            f"({config.frame_len}); no frames produced", RuntimeWarning, stacklevel=2)
        empty = np.zeros((0, config.n_bins), dtype=complex)
        return empty, empty.copy()
    idx = np.arange(config.frame_len)[None, :] + config.hop * np.arange(n)[:, None]
    w = config.window_array()
    X1 = np.fft.rfft(x[0][idx] * w, n=config.nfft, axis=-1)
    X2 = np.fft.rfft(x[1][idx] * w, n=config.nfft, axis=-1)
    return X1, X2


def stft_frames(signal, config: StftConfig = StftConfig()) -> list[FramePair]:
    X1, X2 = stft(signal, config)
    return [FramePair(a, b) for a, b in zip(X1, X2)]


@dataclass(frozen=True)
class PsdState:
    """Per-bin smoothed PSD estimates of a microphone pair.

    ``phi_diff``/``phi_sum`` are the PSDs of ``X1 - X2`` and ``X1 + X2``,
    ``phi_11``/``phi_22`` the auto PSDs and ``phi_12 = E[X1 conj(X2)]``.
    """

    phi_diff: np.ndarray
    phi_sum: np.ndarray
    phi_11: np.ndarray
    phi_22: np.ndarray
    phi_12: np.ndarray
    beta: float = 0.5

    @classmethod
    def from_frame(cls, frame: FramePair, beta: float = 0.5) -> "PsdState":
        """State initialised with the frame's instantaneous periodograms."""
        _check_beta(beta)
        X1, X2 = np.asarray(frame[0]), np.asarray(frame[1])
        if X1.shape != X2.shape:
            raise ValueError("channel spectra differ in length")
        return cls(*_periodograms(X1, X2), beta=beta)

    @property
    def n_bins(self) -> int:
        return self.phi_sum.shape[-1]

    def floor(self) -> float:
        total = float(np.sum(self.phi_11) + np.sum(self.phi_22))
        return PSD_FLOOR * total


def _check_beta(beta):
    if not 0 <= beta < 1:
        raise ValueError(f"smoothing constant must be in [0, 1), got {beta!r}")


def _periodograms(X1, X2):
    d = X1 - X2
    s = X1 + X2
    return (
        (d * d.conj()).real,
        (s * s.conj()).real,
        (X1 * X1.conj()).real,
        (X2 * X2.conj()).real,
        X1 * X2.conj(),
    )


def update_psd(state: PsdState, frame: FramePair) -> PsdState:
    """One recursive smoothing step ``p <- beta*p + (1-beta)*periodogram``."""
    X1, X2 = np.asarray(frame[0]), np.asarray(frame[1])
    if X1.shape != X2.shape or X1.shape[-1] != state.n_bins:
        raise ValueError(
            f"bin count mismatch: state has {state.n_bins}, frame has "
            f"{X1.shape[-1]}/{X2.shape[-1]}")
    b = state.beta
    inst = _periodograms(X1, X2)
    prev = (state.phi_diff, state.phi_sum, state.phi_11, state.phi_22, state.phi_12)
    return PsdState(*(b * p + (1.0 - b) * q for p, q in zip(prev, inst)), beta=b)


def track_psd(frames: Iterable[FramePair], beta: float = 0.5) -> Iterator[PsdState]:
    """Yield the smoothed state after each frame; the first frame initialises it."""
    _check_beta(beta)
    state = None
    for frame in frames:
        state = PsdState.from_frame(frame, beta) if state is None else update_psd(state, frame)
        yield state


def mean_psd(X1: np.ndarray, X2: np.ndarray) -> PsdState:
    """Long-run PSD estimate: periodograms averaged with equal weight over all frames."""
    if len(X1) == 0:
        raise ValueError("no frames to average")
    p = _periodograms(np.asarray(X1), np.asarray(X2))
    return PsdState(*(q.mean(axis=0) for q in p), beta=0.0)


def _select(arr, k):
    return arr if k is None else arr[k]


def power_ratio_measured(state: PsdState, k=None):
    """Measured difference-to-sum power ratio at bin(s) ``k`` (all bins if None).

    Bins whose sum PSD does not exceed the floor are undefined and returned
    as NaN.
    """
    num = _select(state.phi_diff, k)
    den = _select(state.phi_sum, k)
    ok = den > max(state.floor(), np.finfo(float).tiny)
    with np.errstate(divide="ignore", invalid="ignore"):
        pr = np.where(ok, num / np.where(ok, den, 1.0), np.nan)
    return float(pr) if np.ndim(pr) == 0 else pr


def msc_measured(state: PsdState, k=None):
    """Magnitude squared coherence ``|phi_12|^2 / (phi_11*phi_22)``; NaN below floor."""
    p11 = _select(state.phi_11, k)
    p22 = _select(state.phi_22, k)
    p12 = _select(state.phi_12, k)
    floor = max(state.floor(), np.finfo(float).tiny)
    ok = (p11 > floor) & (p22 > floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        msc = np.where(ok, np.abs(p12) ** 2 / np.where(ok, p11 * p22, 1.0), np.nan)
    return float(msc) if np.ndim(msc) == 0 else msc


def coherence_measured(state: PsdState, k=None):
    """Complex coherence ``phi_12 / sqrt(phi_11*phi_22)``; NaN below floor."""
    p11 = _select(state.phi_11, k)
    p22 = _select(state.phi_22, k)
    p12 = _select(state.phi_12, k)
    floor = max(state.floor(), np.finfo(float).tiny)
    ok = (p11 > floor) & (p22 > floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(ok, p12 / np.sqrt(np.where(ok, p11 * p22, 1.0)), np.nan)
    return g


def band_bins(config: StftConfig, f_lo: float, f_hi: float) -> np.ndarray:
    """Indices of the non-DC bins whose centre frequency lies in ``[f_lo, f_hi]``."""
    nyq = config.sample_rate / 2.0
    if not (0 <= f_lo < f_hi <= nyq):
        raise ValueError(f"invalid band [{f_lo}, {f_hi}] Hz for Nyquist {nyq} Hz")
    f = config.frequencies()
    tol = 1e-9 * config.bin_hz
    k = np.flatnonzero((f >= f_lo - tol) & (f <= f_hi + tol))
    k = k[k > 0]
    if k.size == 0:
        raise ValueError(f"band [{f_lo}, {f_hi}] Hz contains no frequency bins")
    return k

