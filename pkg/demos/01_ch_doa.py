"""
Direction of arrival from circular harmonics
=============================================

A plane wave hits an 8-microphone circular array. We estimate its direction
in every time-frequency bin, then repeat the experiment with half of the
microphones switched off.

Run with ``python demos/01_ch_doa.py``.
"""

import numpy as np

from chseg import ArrayGeometry, deactivate_channels, stft, synth_plane_wave
from chseg.spatial import doa_map, ipd

FS = 16000
geom = ArrayGeometry.uca(8, 0.1)
noise = np.random.default_rng(0).standard_normal(FS)

###############################################################################
# One source at 60 degrees. ``doa_map`` returns one angle per bin and frame.

wave = synth_plane_wave(geom, np.deg2rad(60), noise, FS)
spec = stft(wave)
phi = np.degrees(doa_map(spec))
print("bins x frames:", phi.shape)

for hz in (250, 500, 1000, 1500, 2000, 3000):
    k = round(hz / spec.bin_hz)
    print(f"{hz:5d} Hz  median estimate {np.median(phi[k]):6.1f} deg")

###############################################################################
# Keep every other microphone. The remaining four still form a regular
# circle, so the circular harmonics are defined, but spatial aliasing sets in
# at a much lower frequency.

half = deactivate_channels(wave, [0, 2, 4, 6])
phi4 = np.degrees(doa_map(stft(half)))
for hz in (250, 500, 1000, 1500):
    k = round(hz / spec.bin_hz)
    print(f"{hz:5d} Hz  4 mics: {np.median(phi4[k]):6.1f} deg")

###############################################################################
# Phase differences of opposite microphone pairs need both members of each
# pair, so they are not defined any more.

try:
    ipd(stft(half))
except ValueError as err:
    print("IPD:", err)
