"""Free-field uniform circular array simulator.

Renders far-field plane waves onto a circular microphone array and builds
multi-speaker scenes with their reference annotations. The simulated scenes
are the ground truth used to check the spatial features.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .labeling import AnnotationSet, Segment

SAMPLE_RATE = 16000
SPEED_OF_SOUND = 343.0
DEFAULT_RADIUS = 0.1

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ArrayGeometry:
    """Circular microphone array.

    ``mic_angles`` holds the angle of every physical microphone, including
    deactivated ones; ``active_mask`` marks which of them deliver a signal.
    """

    radius: float
    mic_angles: np.ndarray
    speed_of_sound: float = SPEED_OF_SOUND
    active_mask: np.ndarray | None = None

    def __post_init__(self):
        angles = np.asarray(self.mic_angles, dtype=np.float64).ravel()
        object.__setattr__(self, "mic_angles", angles)
        if self.active_mask is None:
            mask = np.ones(angles.size, dtype=bool)
        else:
            mask = np.asarray(self.active_mask, dtype=bool).ravel()
        object.__setattr__(self, "active_mask", mask)

        if angles.size == 0:
            raise ValueError("geometry needs at least one microphone")
        if mask.size != angles.size:
            raise ValueError("active_mask length must equal the number of microphones")
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not self.speed_of_sound > 0:
            raise ValueError("speed_of_sound must be positive")
        if np.any(angles < 0) or np.any(angles >= TWO_PI) or np.any(np.diff(angles) <= 0):
            raise ValueError("mic_angles must be strictly increasing in [0, 2*pi)")
        if not mask.any():
            raise ValueError("at least one microphone must be active")

    @classmethod
    def uca(cls, mic_count: int = 8, radius: float = DEFAULT_RADIUS,
            speed_of_sound: float = SPEED_OF_SOUND) -> "ArrayGeometry":
        """Pristine UCA with microphone m at angle m * 2*pi/M (0-based m)."""
        if mic_count < 1:
            raise ValueError("mic_count must be positive")
        angles = np.arange(mic_count) * TWO_PI / mic_count
        return cls(radius=radius, mic_angles=angles, speed_of_sound=speed_of_sound)

    @property
    def mic_count(self) -> int:
        return int(self.mic_angles.size)

    @property
    def active_indices(self) -> np.ndarray:
        return np.flatnonzero(self.active_mask)

    @property
    def active_angles(self) -> np.ndarray:
        return self.mic_angles[self.active_mask]

    @property
    def n_active(self) -> int:
        return int(self.active_mask.sum())

    def with_mask(self, mask) -> "ArrayGeometry":
        return replace(self, active_mask=np.asarray(mask, dtype=bool))

    def to_dict(self) -> dict:
        return {
            "radius": float(self.radius),
            "mic_angles": [float(a) for a in self.mic_angles],
            "speed_of_sound": float(self.speed_of_sound),
            "active_mask": [bool(a) for a in self.active_mask],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArrayGeometry":
        if "mic_angles" not in d:
            geom = cls.uca(int(d.get("mic_count", 8)), float(d.get("radius", DEFAULT_RADIUS)),
                           float(d.get("speed_of_sound", SPEED_OF_SOUND)))
        else:
            geom = cls(radius=float(d.get("radius", DEFAULT_RADIUS)),
                       mic_angles=np.asarray(d["mic_angles"], dtype=np.float64),
                       speed_of_sound=float(d.get("speed_of_sound", SPEED_OF_SOUND)))
        if "active_mask" in d:
            geom = geom.with_mask(d["active_mask"])
        return geom


@dataclass
class MultichannelWaveform:
    """Synchronised samples of the active microphones, shape (channels, samples)."""

    samples: np.ndarray
    sample_rate: int
    geometry: ArrayGeometry

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        if self.samples.shape[0] != self.geometry.n_active:
            raise ValueError(
                f"{self.samples.shape[0]} channels given but geometry has "
                f"{self.geometry.n_active} active microphones")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    def crop(self, start: int, stop: int) -> "MultichannelWaveform":
        return MultichannelWaveform(self.samples[:, start:stop], self.sample_rate, self.geometry)


def synth_plane_wave(geometry: ArrayGeometry, azimuth: float, mono_signal,
                     sample_rate: int = SAMPLE_RATE) -> MultichannelWaveform:
    """Render a far-field plane wave arriving from ``azimuth`` on the active mics.

    Microphone m receives the source advanced by r*cos(azimuth - psi_m)/c
    seconds with respect to the array centre, applied as a phase factor
    exp(+j*2*pi*f*tau_m) on every FFT bin.
    """
    mono = np.asarray(mono_signal, dtype=np.float64).ravel()
    if mono.size == 0:
        raise ValueError("mono_signal is empty")
    if not np.all(np.isfinite(mono)):
        raise ValueError("mono_signal contains non-finite values")
    azimuth = float(azimuth) % TWO_PI

    tau = geometry.radius * np.cos(azimuth - geometry.active_angles) / geometry.speed_of_sound
    # zero guard at the end keeps the circular FFT shift from wrapping samples around
    guard = int(math.ceil(np.max(np.abs(tau), initial=0.0) * sample_rate)) + 16
    n_fft = mono.size + guard
    spectrum = np.fft.rfft(mono, n=n_fft)
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    shifted = spectrum[None, :] * np.exp(1j * TWO_PI * freqs[None, :] * tau[:, None])
    samples = np.fft.irfft(shifted, n=n_fft, axis=1)[:, :mono.size]
    return MultichannelWaveform(samples, sample_rate, geometry)


@dataclass
class SourceSpec:
    source_id: str
    azimuth: float
    signal_kind: str = "white_noise"
    active_intervals: list = field(default_factory=list)
    level_db: float = 0.0
    tone_hz: float = 1000.0

    def __post_init__(self):
        if self.signal_kind not in ("white_noise", "tone", "speech_like"):
            raise ValueError(f"unknown signal_kind {self.signal_kind!r}")
        self.active_intervals = [(float(a), float(b)) for a, b in self.active_intervals]


@dataclass
class ScenarioSpec:
    sources: list
    duration: float
    noise_snr: float | None = None
    seed: int = 0
    sample_rate: int = SAMPLE_RATE
    recording_id: str = "scene"

    def validate(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        for src in self.sources:
            if not 0.0 <= src.azimuth < TWO_PI:
                raise ValueError(f"azimuth of {src.source_id} outside [0, 2*pi)")
            ivs = sorted(src.active_intervals)
            for a, b in ivs:
                if not (0.0 <= a < b <= self.duration):
                    raise ValueError(f"interval [{a}, {b}) of {src.source_id} outside [0, duration)")
            for (a0, b0), (a1, b1) in zip(ivs, ivs[1:]):
                if a1 < b0:
                    raise ValueError(f"overlapping intervals for source {src.source_id}")

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        sources = []
        for s in d.get("sources", []):
            az = s["azimuth_deg"] * np.pi / 180 if "azimuth_deg" in s else s["azimuth"]
            sources.append(SourceSpec(
                source_id=str(s["source_id"]), azimuth=float(az) % TWO_PI,
                signal_kind=s.get("signal_kind", "white_noise"),
                active_intervals=s.get("active_intervals", []),
                level_db=float(s.get("level_db", 0.0)),
                tone_hz=float(s.get("tone_hz", 1000.0))))
        return cls(sources=sources, duration=float(d["duration"]),
                   noise_snr=d.get("noise_snr"), seed=int(d.get("seed", 0)),
                   sample_rate=int(d.get("sample_rate", SAMPLE_RATE)),
                   recording_id=str(d.get("recording_id", "scene")))

    def to_dict(self) -> dict:
        return {
            "recording_id": self.recording_id,
            "duration": self.duration,
            "noise_snr": self.noise_snr,
            "seed": self.seed,
            "sample_rate": self.sample_rate,
            "sources": [
                {"source_id": s.source_id, "azimuth": s.azimuth, "signal_kind": s.signal_kind,
                 "active_intervals": [list(iv) for iv in s.active_intervals],
                 "level_db": s.level_db, "tone_hz": s.tone_hz}
                for s in self.sources
            ],
        }


def _source_signal(src: SourceSpec, n: int, sample_rate: int, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(n) / sample_rate
    if src.signal_kind == "white_noise":
        sig = rng.standard_normal(n)
    elif src.signal_kind == "tone":
        sig = np.sqrt(2.0) * np.cos(TWO_PI * src.tone_hz * t + rng.uniform(0, TWO_PI))
    else:
        # noise under a random syllable-rate (2-6 Hz) envelope, normalised to unit power
        rate = rng.uniform(2.0, 6.0)
        env = 0.55 + 0.45 * np.sin(TWO_PI * rate * t + rng.uniform(0, TWO_PI))
        sig = rng.standard_normal(n) * env
        sig /= np.sqrt(np.mean(env ** 2))
    return sig * 10.0 ** (src.level_db / 20.0)


def gen_scenario(spec: ScenarioSpec, geometry: ArrayGeometry | None = None):
    """Render ``spec`` on ``geometry`` and return ``(waveform, annotations)``."""
    spec.validate()
    geometry = geometry or ArrayGeometry.uca()
    fs = spec.sample_rate
    n = int(round(spec.duration * fs))
    ss = np.random.SeedSequence(spec.seed)
    src_seeds = ss.spawn(len(spec.sources) + 1)

    mix = np.zeros((geometry.n_active, n))
    entries = []
    for src, seed in zip(spec.sources, src_seeds):
        if not src.active_intervals:
            continue
        rng = np.random.default_rng(seed)
        sig = _source_signal(src, n, fs, rng)
        gate = np.zeros(n)
        for a, b in src.active_intervals:
            gate[int(round(a * fs)):int(round(b * fs))] = 1.0
            entries.append(Segment(src.source_id, a, b))
        mix += synth_plane_wave(geometry, src.azimuth, sig * gate, fs).samples

    if spec.noise_snr is not None:
        power = np.mean(mix ** 2)
        if power > 0:
            noise_rng = np.random.default_rng(src_seeds[-1])
            sigma = np.sqrt(power / 10.0 ** (spec.noise_snr / 10.0))
            mix = mix + sigma * noise_rng.standard_normal(mix.shape)

    annotations = AnnotationSet(entries, recording_id=spec.recording_id, duration=spec.duration)
    return MultichannelWaveform(mix, fs, geometry), annotations


def deactivate_channels(waveform: MultichannelWaveform, keep_indices: Sequence[int]) -> MultichannelWaveform:
    """Keep only the channels at ``keep_indices`` (0-based, into the current channels).

    The surviving microphones retain their original angles; the geometry's
    active mask is updated so spatial estimators average over survivors only.
    """
    keep = sorted(set(int(i) for i in keep_indices))
    if not keep:
        raise ValueError("keep_indices must not be empty")
    if keep[0] < 0 or keep[-1] >= waveform.n_channels:
        raise ValueError(f"keep_indices out of range for {waveform.n_channels} channels")
    if len(keep) < 3:
        warnings.warn("fewer than 3 microphones survive; CH-DOA features will be unavailable",
                      stacklevel=2)
    mic_ids = waveform.geometry.active_indices[keep]
    mask = np.zeros(waveform.geometry.mic_count, dtype=bool)
    mask[mic_ids] = True
    return MultichannelWaveform(waveform.samples[keep], waveform.sample_rate,
                                waveform.geometry.with_mask(mask))
