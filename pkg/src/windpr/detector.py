"""
Frame-wise wind-noise activity detectors.

The power-ratio detector averages the measured difference-to-sum power
ratio over a frequency band; the MSC detector averages one minus the
magnitude squared coherence over the same band.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .spectral import (
    PsdState,
    StftConfig,
    band_bins,
    msc_measured,
    power_ratio_measured,
    stft,
    track_psd,
)


@dataclass(frozen=True)
class DetectorConfig:
    band: tuple[float, float] = (0.0, 500.0)
    threshold: float = 0.5
    clamp_soft: bool = True

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold!r}")
        lo, hi = self.band
        if not 0 <= lo < hi:
            raise ValueError(f"invalid band {self.band!r}")

    def bins(self, stft_config: StftConfig) -> np.ndarray:
        return band_bins(stft_config, *self.band)


@dataclass(frozen=True)
class FrameScore:
    frame_index: int
    soft_pr: float
    soft_msc: float
    hard_pr: int
    hard_msc: int


def _band_mean(values: np.ndarray) -> float:
    defined = values[~np.isnan(values)]
    if defined.size == 0:
        return float("nan")
    return float(np.mean(defined))


def soft_pr(state: PsdState, config: DetectorConfig = DetectorConfig(),
            stft_config: StftConfig = StftConfig(), *, bins=None) -> float:
    """Band-averaged measured power ratio of one frame.

    With ``config.clamp_soft`` each bin is clipped to [0, 1] before
    averaging. Undefined bins are skipped; NaN if none is defined.
    """
    k = config.bins(stft_config) if bins is None else bins
    pr = np.asarray(power_ratio_measured(state, k))
    if config.clamp_soft:
        pr = np.clip(pr, 0.0, 1.0)  # NaN passes through
    return _band_mean(pr)


def soft_msc(state: PsdState, config: DetectorConfig = DetectorConfig(),
             stft_config: StftConfig = StftConfig(), *, bins=None) -> float:
    """One minus the band-averaged magnitude squared coherence."""
    k = config.bins(stft_config) if bins is None else bins
    m = _band_mean(np.asarray(msc_measured(state, k)))
    return 1.0 - m


def hard(soft, theta: float):
    """Threshold a soft score: 1 iff ``soft > theta``. NaN scores give 0."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {theta!r}")
    out = np.asarray(np.asarray(soft, dtype=float) > theta, dtype=int)
    return int(out) if out.ndim == 0 else out


def score_states(states: Iterable[PsdState], config: DetectorConfig = DetectorConfig(),
                 stft_config: StftConfig = StftConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Soft PR and soft MSC scores for a stream of PSD states."""
    k = config.bins(stft_config)
    pr, msc = [], []
    for st in states:
        pr.append(soft_pr(st, config, bins=k))
        msc.append(soft_msc(st, config, bins=k))
    return np.asarray(pr, dtype=float), np.asarray(msc, dtype=float)


def soft_scores(signal, config: DetectorConfig = DetectorConfig(),
                stft_config: StftConfig = StftConfig(),
                beta: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame soft PR and MSC scores of a two-channel signal.

    Both detectors read the same PSD state sequence.
    """
    config.bins(stft_config)  # fail early on an empty band
    X1, X2 = stft(signal, stft_config)
    states = track_psd(zip(X1, X2), beta)
    return score_states(states, config, stft_config)


def detect(signal, config: DetectorConfig = DetectorConfig(),
           stft_config: StftConfig = StftConfig(), beta: float = 0.5) -> list[FrameScore]:
    pr, msc = soft_scores(signal, config, stft_config, beta)
    hp = hard(pr, config.threshold)
    hm = hard(msc, config.threshold)
    return [FrameScore(i, float(pr[i]), float(msc[i]), int(hp[i]), int(hm[i]))
            for i in range(len(pr))]


CSV_FIELDS = ("frame_index", "time_s", "soft_pr", "hard_pr", "soft_msc", "hard_msc")


def scores_to_csv(scores: list[FrameScore], stft_config: StftConfig = StftConfig(),
                  header: str | None = None) -> str:
    """Render frame scores as CSV; ``time_s`` is the frame centre.

    ``header`` is written first as a ``#`` comment line.
    """
    buf = io.StringIO()
    if header is not None:
        buf.write(f"# {header}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for s in scores:
        t = (s.frame_index * stft_config.hop + stft_config.frame_len / 2) / stft_config.sample_rate
        w.writerow([s.frame_index, f"{t:.6f}", _fmt(s.soft_pr), s.hard_pr,
                    _fmt(s.soft_msc), s.hard_msc])
    return buf.getvalue()


def _fmt(x: float) -> str:
    return "nan" if np.isnan(x) else repr(float(x))


__all__ = [
    "DetectorConfig",
    "FrameScore",
    "soft_pr",
    "soft_msc",
    "hard",
    "score_states",
    "soft_scores",
    "detect",
    "scores_to_csv",
]
