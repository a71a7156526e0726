"""WAV reading/writing restricted to 16-bit PCM and 32-bit float."""

from __future__ import annotations

import struct

import numpy as np
from scipy.io import wavfile


class UnsupportedEncoding(ValueError):
    pass


def read_wav(path) -> tuple[int, np.ndarray]:
    """Return ``(rate, samples)`` with samples as float64, shape ``(n,)`` or ``(n, ch)``.

    Raises OSError for unreadable/corrupt files and UnsupportedEncoding for
    bit depths other than 16-bit PCM and 32-bit float.
    """
    try:
        rate, data = wavfile.read(path)
    except (OSError, EOFError, struct.error) as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        msg = str(exc)
        if "Unknown wave file format" in msg or "Unsupported bit depth" in msg:
            raise UnsupportedEncoding(f"{path}: {msg}") from exc
        raise OSError(f"cannot read {path}: {msg}") from exc
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        x = data.astype(np.float64)
    else:
        raise UnsupportedEncoding(f"{path}: unsupported sample type {data.dtype}")
    return int(rate), x


def write_wav(path, rate: int, samples, fmt: str = "pcm16") -> float:
    """Write ``samples`` (``(ch, n)`` or ``(n,)``) and return the gain applied.

    Signals peaking above 0.99 are scaled down by one common gain so the
    inter-channel ratios are preserved.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 2 and x.shape[0] < x.shape[1]:
        x = x.T
    peak = float(np.max(np.abs(x))) if x.size else 0.0
    gain = 0.99 / peak if peak > 0.99 else 1.0
    x = x * gain
    if fmt == "pcm16":
        data = np.round(x * 32767.0).astype(np.int16)
    elif fmt == "float32":
        data = x.astype(np.float32)
    else:
        raise ValueError(f"unknown WAV format {fmt!r}")
    wavfile.write(path, int(rate), data)
    return gain
