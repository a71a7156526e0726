"""Dual-microphone wind noise detection from the difference-to-sum power ratio."""

from .corcos import (
    CorcosParams,
    SpeechGeometry,
    coherence,
    decay_rate,
    pr_mixture,
    pr_speech,
    pr_wind,
)
from .detector import DetectorConfig, FrameScore, detect, hard, soft_msc, soft_pr
from .evaluation import Protocol, RocPoint, auc, rates, roc_sweep, run_trials
from .spectral import (
    FramePair,
    PsdState,
    StftConfig,
    band_bins,
    msc_measured,
    power_ratio_measured,
    stft_frames,
    update_psd,
)
from .synthesis import (
    NoiseSpec,
    SequenceSpec,
    build_sequence,
    delay_speech,
    gen_coherent_noise,
    mix_at_isnr,
)

__version__ = "0.1.0"
