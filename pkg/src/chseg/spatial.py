"""Spatial features: circular-harmonics DOA (CH-DOA) and inter-microphone phase differences.

CH-DOA pipeline per time-frequency bin:

1. circular-harmonic coefficients of orders -1, 0, +1 from the array snapshot,
2. modal beams: an omni beam B0 and two dipoles B1x, B1y steered to 0 and pi/2,
3. pseudo-intensity vector I = 1/2 Re{conj(B0) * (B1x, B1y)},
4. DOA = atan2(I_y, I_x).

The dipoles use orders +/-1 only; including order 0 would bias the angle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j
from .dsp import SpectrogramTensor
from .features import FeatureSequence

ORDERS = (-1, 0, 1)
BESSEL_FLOOR = 1e-4
DEGENERATE_KR = 0.05
MIN_CH_MICS = 3
DEFAULT_PAIRS = ((0, 4), (1, 5), (2, 6), (3, 7))
THETA_X = 0.0
THETA_Y = np.pi / 2


@dataclass
class ChCoefficients:
    """Estimated coefficients for orders -1, 0, +1; ``coeffs`` has shape (3, bins, frames)."""

    coeffs: np.ndarray

    def order(self, n: int) -> np.ndarray:
        return self.coeffs[n + 1]


@dataclass
class ModalBeams:
    b0: np.ndarray
    b1x: np.ndarray
    b1y: np.ndarray
    degenerate: np.ndarray  # per-bin flag, kr below DEGENERATE_KR


@dataclass
class PivField:
    ix: np.ndarray
    iy: np.ndarray


def ch_coefficients(spectra: SpectrogramTensor) -> ChCoefficients:
    """Average each active mic's STFT weighted by exp(-j*n*psi_m) over the active mics."""
    geom = spectra.geometry
    if geom.n_active < MIN_CH_MICS:
        raise ValueError(f"circular harmonics need >= {MIN_CH_MICS} active microphones, "
                         f"got {geom.n_active}")
    if spectra.n_channels != geom.n_active:
        raise ValueError("spectra channel count does not match the active microphones")
    psi = geom.active_angles
    weights = np.exp(-1j * np.outer(ORDERS, psi)) / geom.n_active  # (3, M')
    coeffs = np.einsum("nm,mft->nft", weights, spectra.values)
    return ChCoefficients(coeffs)


def _clamped(j: np.ndarray, floor: float) -> np.ndarray:
    sign = np.where(j < 0, -1.0, 1.0)
    return np.where(np.abs(j) < floor, sign * floor, j)


def modal_beams(ch: ChCoefficients, geometry, frequencies, bessel_floor: float = BESSEL_FLOOR,
                degenerate_kr: float = DEGENERATE_KR) -> ModalBeams:
    """Zero-order beam and the two first-order dipole beams.

    Bessel divisors smaller than ``bessel_floor`` in magnitude are clamped to
    +/-``bessel_floor``.
    """
    kr = 2.0 * np.pi * np.asarray(frequencies, dtype=np.float64) * geometry.radius / geometry.speed_of_sound
    j0 = _clamped(bessel_j(0, kr), bessel_floor)[:, None]
    j1 = _clamped(bessel_j(1, kr), bessel_floor)[:, None]
    # mode strength j^n J_n(kr) is j*J_1 for both n = +1 and n = -1
    plus = ch.order(1) / (1j * j1)
    minus = ch.order(-1) / (1j * j1)
    b1x = plus * np.exp(1j * THETA_X) + minus * np.exp(-1j * THETA_X)
    b1y = plus * np.exp(1j * THETA_Y) + minus * np.exp(-1j * THETA_Y)
    return ModalBeams(ch.order(0) / j0, b1x, b1y, kr < degenerate_kr)


def piv(beams: ModalBeams) -> PivField:
    b0c = np.conj(beams.b0)
    return PivField(0.5 * np.real(b0c * beams.b1x), 0.5 * np.real(b0c * beams.b1y))


def doa_map(spectra: SpectrogramTensor, bessel_floor: float = BESSEL_FLOOR,
            degenerate_kr: float = DEGENERATE_KR) -> np.ndarray:
    """Per-bin DOA in (-pi, pi], shape (bins, frames), float64."""
    beams = modal_beams(ch_coefficients(spectra), spectra.geometry, spectra.frequencies,
                        bessel_floor, degenerate_kr)
    field = piv(beams)
    phi = np.arctan2(field.iy, field.ix)
    phi[(field.ix == 0) & (field.iy == 0)] = 0.0
    phi[beams.degenerate] = 0.0
    return phi


def ch_doa(spectra: SpectrogramTensor, bessel_floor: float = BESSEL_FLOOR,
           degenerate_kr: float = DEGENERATE_KR) -> FeatureSequence:
    """CH-DOA feature, one angle per STFT bin (257 x T)."""
    return FeatureSequence(doa_map(spectra, bessel_floor, degenerate_kr), "ch_doa")


def _channel_of(geometry, mic: int) -> int:
    if not 0 <= mic < geometry.mic_count:
        raise ValueError(f"microphone {mic} does not exist")
    if not geometry.active_mask[mic]:
        raise ValueError(f"microphone {mic} is deactivated; IPD pair undefined")
    return int(np.searchsorted(geometry.active_indices, mic))


def ipd(spectra: SpectrogramTensor, pairs=None) -> FeatureSequence:
    """Phase of X_i * conj(X_j) for each pair, stacked pair-major (4 x 257 rows).

    Pairs are 0-based physical microphone indices; the default takes the four
    diametrically opposed pairs of an 8-mic UCA.
    """
    pairs = DEFAULT_PAIRS if pairs is None else tuple(tuple(p) for p in pairs)
    geom = spectra.geometry
    rows = []
    for i, j in pairs:
        ci, cj = _channel_of(geom, i), _channel_of(geom, j)
        rows.append(np.angle(spectra.values[ci] * np.conj(spectra.values[cj])))
    values = np.concatenate(rows, axis=0)
    kind = "ipd" if values.shape[0] == 1028 else "concat"
    return FeatureSequence(values, kind)


def csipd(ipd_features: FeatureSequence) -> FeatureSequence:
    values = ipd_features.values.astype(np.float64)
    out = np.concatenate([np.cos(values), np.sin(values)], axis=0)
    kind = "csipd" if out.shape[0] == 2056 else "concat"
    return FeatureSequence(out, kind)
