"""
ROC evaluation of the frame-wise wind detectors.

Labels are 1 for frames with wind (pure or mixed with speech) and 0 for
clean speech. The wind detection rate is the true positive rate, the
speech misdetection rate the false positive rate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corcos import CorcosParams, SpeechGeometry
from .detector import DetectorConfig, hard, soft_scores
from .spectral import StftConfig
from .synthesis import SequenceSpec, build_sequence, pseudo_speech

DEFAULT_THRESHOLDS = tuple(np.round(np.arange(20) * 0.05, 2))


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class RocPoint:
    theta: float
    false_positive_rate: float
    true_positive_rate: float


@dataclass
class TrialResult:
    thresholds: np.ndarray
    p_w: np.ndarray
    p_s: np.ndarray
    m_w: int
    m_s: int
    seed: int | None = None


def rates(labels, decisions) -> tuple[float, float]:
    """Wind detection rate ``P_w`` and speech misdetection rate ``P_s``."""
    L = np.asarray(labels).astype(int)
    J = np.asarray(decisions).astype(int)
    if L.shape != J.shape:
        raise EvaluationError(f"label/decision length mismatch {L.shape} vs {J.shape}")
    m_w = int(np.sum(L == 1))
    m_s = int(np.sum(L == 0))
    if m_w == 0 or m_s == 0:
        raise EvaluationError("need at least one wind frame and one speech frame")
    q_w = int(np.sum((J == 1) & (L == 1)))
    q_s = int(np.sum((J == 1) & (L == 0)))
    return q_w / m_w, q_s / m_s


def evaluate(soft_scores_, labels, thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
             seed=None) -> TrialResult:
    th = np.asarray(thresholds, dtype=float)
    if th.size == 0:
        raise EvaluationError("empty threshold grid")
    if np.any(np.diff(th) < 0):
        raise EvaluationError("thresholds must be sorted ascending")
    L = np.asarray(labels).astype(int)
    pw, ps = zip(*(rates(L, hard(soft_scores_, t)) for t in th))
    return TrialResult(th, np.array(pw), np.array(ps),
                       int(np.sum(L == 1)), int(np.sum(L == 0)), seed)


def roc_sweep(soft_scores_, labels,
              thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> list[RocPoint]:
    """One ROC point per threshold, thresholding with strict ``>``."""
    return to_points(evaluate(soft_scores_, labels, thresholds))


def to_points(res: TrialResult) -> list[RocPoint]:
    return [RocPoint(float(t), float(s), float(w))
            for t, s, w in zip(res.thresholds, res.p_s, res.p_w)]


def _curve(points: Sequence[RocPoint]) -> tuple[np.ndarray, np.ndarray]:
    pts = {(p.false_positive_rate, p.true_positive_rate) for p in points}
    pts |= {(0.0, 0.0), (1.0, 1.0)}
    arr = np.array(sorted(pts))
    return arr[:, 0], arr[:, 1]


def auc(points: Sequence[RocPoint]) -> float:
    """Trapezoidal area under the ROC, with (0,0) and (1,1) endpoints added."""
    if len(points) < 2:
        raise EvaluationError("need at least two ROC points")
    x, y = _curve(points)
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))


def interpolated_tpr(points: Sequence[RocPoint], fpr) -> np.ndarray:
    """True positive rate of the ROC curve at the given false positive rates.

    Where several points share a false positive rate, the best one is kept.
    """
    x, y = _curve(points)
    ux = np.unique(x)
    uy = np.array([y[x == v].max() for v in ux])
    return np.interp(fpr, ux, uy)


# ---------------------------------------------------------------------------
# multi-trial protocol


@dataclass
class Protocol:
    """Settings of the multi-trial ROC comparison."""

    n_trials: int = 10
    isnr_db: float = -5.0
    mic_distance: float = 0.004
    speech_doa: float = np.pi / 2
    wind_doa_range: tuple[float, float] = (0.0, np.pi)
    wind_speed_range: tuple[float, float] = (1.0, 3.0)
    plan: Sequence[tuple[str, float]] = SequenceSpec().plan
    beta: float = 0.5
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    stft: StftConfig = field(default_factory=StftConfig)
    seed: int = 0

    def __post_init__(self):
        if self.n_trials < 1:
            raise EvaluationError("n_trials must be >= 1")

    def echo(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "isnr_db": self.isnr_db,
            "mic_distance_m": self.mic_distance,
            "speech_doa_rad": self.speech_doa,
            "wind_doa_range_rad": list(self.wind_doa_range),
            "wind_speed_range_ms": list(self.wind_speed_range),
            "plan": [list(p) for p in self.plan],
            "smoothing": self.beta,
            "thresholds": [float(t) for t in self.thresholds],
            "band_hz": list(self.detector.band),
            "clamp_soft": self.detector.clamp_soft,
            "sample_rate": self.stft.sample_rate,
            "frame_len": self.stft.frame_len,
            "hop": self.stft.hop,
            "seed": self.seed,
        }


@dataclass
class RocComparison:
    pr: list[TrialResult]
    msc: list[TrialResult]
    trial_seeds: list[int]
    trial_params: list[dict]

    @staticmethod
    def _mean(results: list[TrialResult]) -> TrialResult:
        return TrialResult(
            results[0].thresholds,
            np.mean([r.p_w for r in results], axis=0),
            np.mean([r.p_s for r in results], axis=0),
            int(sum(r.m_w for r in results)),
            int(sum(r.m_s for r in results)),
        )

    @property
    def pr_mean(self) -> TrialResult:
        return self._mean(self.pr)

    @property
    def msc_mean(self) -> TrialResult:
        return self._mean(self.msc)

    def auc(self) -> dict:
        return {"pr": auc(to_points(self.pr_mean)), "msc": auc(to_points(self.msc_mean))}


SpeechSource = Callable[[np.random.Generator, int], np.ndarray]


def synthetic_speech_source(sample_rate: int = 16000) -> SpeechSource:
    def draw(rng, n):
        return pseudo_speech(n / sample_rate, sample_rate, rng)
    return draw


def pool_speech_source(pool: Sequence[np.ndarray]) -> SpeechSource:
    """Draw speech from a pool of mono recordings.

    Recordings are taken in random order, each from a random offset, and
    concatenated until enough samples are collected.
    """
    pool = [np.asarray(p, dtype=float) for p in pool if len(p) > 0]
    if not pool:
        raise EvaluationError("speech pool is empty")

    def draw(rng, n):
        parts, have = [], 0
        while have < n:
            for i in rng.permutation(len(pool)):
                x = pool[i]
                start = int(rng.integers(0, max(1, x.size // 2)))
                seg = x[start:start + n - have]
                parts.append(seg)
                have += seg.size
                if have >= n:
                    break
        return np.concatenate(parts)[:n]
    return draw


def run_trial(protocol: Protocol, speech_source: SpeechSource, seed: int):
    """One randomly mixed trial; returns (pr result, msc result, wind params)."""
    rng = np.random.default_rng(seed)
    theta_w = float(rng.uniform(*protocol.wind_doa_range))
    U = float(rng.uniform(*protocol.wind_speed_range))
    spec = SequenceSpec(
        plan=protocol.plan,
        isnr_db=protocol.isnr_db,
        speech_geometry=_geometry(protocol),
        corcos=CorcosParams(protocol.mic_distance, theta_w, U),
        seed=int(rng.integers(2**31)),
    )
    n_speech = int(round(spec.speech_seconds() * protocol.stft.sample_rate)) + 1
    speech = speech_source(rng, n_speech)
    x, labels = build_sequence(spec, speech, protocol.stft)
    pr, msc = soft_scores(x, protocol.detector, protocol.stft, protocol.beta)
    res_pr = evaluate(pr, labels, protocol.thresholds, seed)
    res_msc = evaluate(msc, labels, protocol.thresholds, seed)
    return res_pr, res_msc, {"theta_w_rad": theta_w, "U_ms": U}


def _geometry(protocol):
    return SpeechGeometry(protocol.mic_distance, protocol.speech_doa)


def trial_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def run_trials(protocol: Protocol = Protocol(),
               speech_source: SpeechSource | None = None,
               seeds: Sequence[int] | None = None) -> RocComparison:
    """Run the protocol and keep per-trial results for both detectors.

    Both detectors score the same PSD state stream of each trial. Trials
    are independent; results are ordered by trial index.
    """
    if speech_source is None:
        speech_source = synthetic_speech_source(protocol.stft.sample_rate)
    if seeds is None:
        seeds = trial_seeds(protocol.seed, protocol.n_trials)
    if len(seeds) != protocol.n_trials:
        raise EvaluationError("need one seed per trial")
    pr, msc, params = [], [], []
    for i, s in enumerate(seeds):
        try:
            a, b, p = run_trial(protocol, speech_source, s)
        except Exception as exc:
            raise EvaluationError(f"trial {i} (seed {s}) failed: {exc}") from exc
        pr.append(a)
        msc.append(b)
        params.append(p)
    return RocComparison(pr, msc, list(seeds), params)


def roc_table(cmp: RocComparison) -> list[list[float]]:
    p, m = cmp.pr_mean, cmp.msc_mean
    return [[float(t), float(p.p_s[i]), float(p.p_w[i]), float(m.p_s[i]), float(m.p_w[i])]
            for i, t in enumerate(p.thresholds)]


def summary_json(cmp: RocComparison, echo: dict) -> str:
    a = cmp.auc()
    doc = {
        "auc_pr": a["pr"],
        "auc_msc": a["msc"],
        "trial_seeds": cmp.trial_seeds,
        "trial_wind": cmp.trial_params,
        "config": echo,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
