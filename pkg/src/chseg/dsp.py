"""Multichannel short-time Fourier analysis shared by every feature extractor.

Analysis only: 25 ms Hann frames with a 10 ms hop, zero-padded to a 512-point
FFT (257 one-sided bins), no centring or edge padding. There is no inverse
transform in this toolkit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .array_sim import ArrayGeometry, MultichannelWaveform

WIN_LENGTH = 400
HOP_LENGTH = 160
N_FFT = 512
N_BINS = N_FFT // 2 + 1


@dataclass
class SpectrogramTensor:
    """Complex STFT values, shape (channels, bins, frames)."""

    values: np.ndarray
    sample_rate: int
    geometry: ArrayGeometry
    n_fft: int = N_FFT
    hop_length: int = HOP_LENGTH
    win_length: int = WIN_LENGTH

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]

    @property
    def n_frames(self) -> int:
        return self.values.shape[2]

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.n_fft

    @property
    def frame_hop(self) -> float:
        return self.hop_length / self.sample_rate

    @property
    def window_len(self) -> float:
        return self.win_length / self.sample_rate

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_hz


def n_frames_for(n_samples: int) -> int:
    if n_samples < WIN_LENGTH:
        return 0
    return 1 + (n_samples - WIN_LENGTH) // HOP_LENGTH


def analysis_window() -> np.ndarray:
    # periodic Hann
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(WIN_LENGTH) / WIN_LENGTH)


def frames(samples: np.ndarray) -> np.ndarray:
    """Windowed frames, shape (..., frames, WIN_LENGTH)."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[-1] < WIN_LENGTH:
        raise ValueError(f"need at least {WIN_LENGTH} samples, got {samples.shape[-1]}")
    view = sliding_window_view(samples, WIN_LENGTH, axis=-1)[..., ::HOP_LENGTH, :]
    return view * analysis_window()


def stft(waveform: MultichannelWaveform) -> SpectrogramTensor:
    spec = np.fft.rfft(frames(waveform.samples), n=N_FFT, axis=-1)
    return SpectrogramTensor(np.swapaxes(spec, -1, -2), waveform.sample_rate, waveform.geometry)
