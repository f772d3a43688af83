"""Single-channel acoustic features: log-mel, MFCC with deltas, and TF masking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import N_FFT, SpectrogramTensor
from .features import FeatureSequence

LOG_FLOOR = 1e-10
N_MELS_LOGMEL = 80
N_MELS_MFCC = 40
N_CEPS = 20
DELTA_WIDTH = 2


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int = N_FFT, sample_rate: int = 16000) -> np.ndarray:
    """Triangular mel filters of unit peak height, shape (n_mels, n_fft//2 + 1).

    Band edges are equally spaced on the mel scale between 0 Hz and the
    Nyquist frequency.
    """
    n_bins = n_fft // 2 + 1
    if n_mels < 1 or n_mels > n_bins:
        raise ValueError(f"n_mels must be in [1, {n_bins}], got {n_mels}")
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    freqs = np.arange(n_bins) * sample_rate / n_fft
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    return np.maximum(0.0, np.minimum(rising, falling))


def filter_centers(n_mels: int, sample_rate: int = 16000) -> np.ndarray:
    return mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))[1:-1]


def dct_matrix(n_out: int, n_in: int) -> np.ndarray:
    """Orthonormal DCT-II basis, rows are coefficients c0..c{n_out-1}."""
    k = np.arange(n_out)[:, None]
    n = np.arange(n_in)[None, :]
    d = np.cos(np.pi * k * (2 * n + 1) / (2 * n_in)) * np.sqrt(2.0 / n_in)
    d[0] /= np.sqrt(2.0)
    return d


def _power(spectra: SpectrogramTensor, channel: int) -> np.ndarray:
    return np.abs(spectra.values[channel]) ** 2


def _log_mel(spectra: SpectrogramTensor, n_mels: int, channel: int) -> np.ndarray:
    fb = mel_filterbank(n_mels, spectra.n_fft, spectra.sample_rate)
    return np.log(fb @ _power(spectra, channel) + LOG_FLOOR)


def log_mel(spectra: SpectrogramTensor, channel: int = 0) -> FeatureSequence:
    """80-band log-mel power spectrogram of one channel."""
    return FeatureSequence(_log_mel(spectra, N_MELS_LOGMEL, channel), "log_mel")


def deltas(x: np.ndarray, width: int = DELTA_WIDTH) -> np.ndarray:
    """Regression deltas along time (last axis) with replicated edge frames."""
    t = x.shape[-1]
    padded = np.concatenate([np.repeat(x[..., :1], width, axis=-1), x,
                             np.repeat(x[..., -1:], width, axis=-1)], axis=-1)
    num = np.zeros_like(x, dtype=np.float64)
    for n in range(1, width + 1):
        num += n * (padded[..., width + n:width + n + t] - padded[..., width - n:width - n + t])
    return num / (2.0 * sum(n * n for n in range(1, width + 1)))


def mfcc(spectra: SpectrogramTensor, channel: int = 0) -> FeatureSequence:
    """59-dim MFCC vector: c1..c19 plus deltas and double deltas of c0..c19."""
    if spectra.n_frames < 2 * DELTA_WIDTH + 1:
        raise ValueError(f"MFCC deltas need at least {2 * DELTA_WIDTH + 1} frames, got {spectra.n_frames}")
    ceps = dct_matrix(N_CEPS, N_MELS_MFCC) @ _log_mel(spectra, N_MELS_MFCC, channel)
    d1 = deltas(ceps)
    d2 = deltas(d1)
    return FeatureSequence(np.concatenate([ceps[1:], d1, d2], axis=0), "mfcc")


@dataclass(frozen=True)
class MaskParams:
    n_time_masks: int = 2
    max_time_width: int = 20
    n_freq_masks: int = 2
    max_freq_width: int = 10


def time_freq_mask(features, rng: np.random.Generator, params: MaskParams = MaskParams()) -> FeatureSequence:
    """Masked copy of an acoustic :class:`FeatureSequence` (training only)."""
    if features.kind not in ("log_mel", "mfcc"):
        raise ValueError(f"masking applies to acoustic features only, got {features.kind!r}")
    return FeatureSequence(mask_rows(features.values, rng, params), features.kind)


def mask_rows(values: np.ndarray, rng: np.random.Generator, params: MaskParams = MaskParams(),
              rows: slice | None = None) -> np.ndarray:
    """Zero up to ``n_time_masks`` frame spans and ``n_freq_masks`` row spans.

    Widths are drawn uniformly in [0, max_width]. Only ``rows`` (default all)
    are eligible, so spatial rows of a concatenated matrix stay untouched.
    Returns a masked copy.
    """
    out = np.array(values, copy=True)
    block = out[rows] if rows is not None else out
    n_rows, n_frames = block.shape
    for _ in range(params.n_time_masks):
        w = int(rng.integers(0, params.max_time_width + 1))
        w = min(w, n_frames)
        t0 = int(rng.integers(0, n_frames - w + 1))
        block[:, t0:t0 + w] = 0.0
    for _ in range(params.n_freq_masks):
        w = int(rng.integers(0, params.max_freq_width + 1))
        w = min(w, n_rows)
        f0 = int(rng.integers(0, n_rows - w + 1))
        block[f0:f0 + w, :] = 0.0
    return out
