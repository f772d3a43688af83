import numpy as np
import pytest

from chseg.array_sim import ArrayGeometry, MultichannelWaveform
from chseg.dsp import N_BINS, analysis_window, frames, n_frames_for, stft


def wave(samples, mics=None):
    samples = np.atleast_2d(samples)
    return MultichannelWaveform(samples, 16000, ArrayGeometry.uca(mics or samples.shape[0]))


def test_shape_and_frame_count():
    x = np.random.default_rng(0).standard_normal((8, 32000))
    s = stft(wave(x))
    assert s.values.shape == (8, 257, 198)
    assert n_frames_for(32000) == 198
    assert s.bin_hz == 31.25
    assert s.frame_hop == pytest.approx(0.010)
    assert s.window_len == pytest.approx(0.025)
    assert N_BINS == 257


def test_zeros_give_zeros():
    assert not stft(wave(np.zeros((3, 1000)))).values.any()


def test_tone_peak_bin():
    t = np.arange(16000) / 16000
    s = stft(wave(np.sin(2 * np.pi * 1000 * t)[None], mics=1))
    energy = np.abs(s.values[0]) ** 2
    assert np.argmax(energy.sum(axis=1)) == 32


def test_too_short_rejected():
    with pytest.raises(ValueError):
        stft(wave(np.zeros((1, 399)), mics=1))


def test_parseval_per_frame():
    x = np.random.default_rng(1).standard_normal((2, 4000))
    s = stft(wave(x))
    fr = frames(x)
    time_energy = np.sum(fr ** 2, axis=-1)
    spec = np.abs(s.values) ** 2
    # one-sided spectrum: double every bin except DC and Nyquist
    weights = np.full(257, 2.0)
    weights[[0, -1]] = 1.0
    freq_energy = np.einsum("f,cft->ct", weights, spec) / 512
    np.testing.assert_allclose(freq_energy, time_energy, rtol=1e-3)


def test_linearity():
    rng = np.random.default_rng(2)
    x, y = rng.standard_normal((2, 3, 2000))
    a, b = 0.7, -2.5
    lhs = stft(wave(a * x + b * y)).values
    rhs = a * stft(wave(x)).values + b * stft(wave(y)).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_channels_share_framing():
    x = np.random.default_rng(3).standard_normal(3000)
    s = stft(wave(np.stack([x, x, x])))
    assert np.array_equal(s.values[0], s.values[2])


def test_window_is_hann():
    w = analysis_window()
    assert w.size == 400
    assert w[0] == 0.0 and w[200] == pytest.approx(1.0)
