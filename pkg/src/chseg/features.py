"""Frame-synchronous feature matrices and feature recipes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FEATURE_DIMS = {
    "log_mel": 80,
    "mfcc": 59,
    "ipd": 1028,
    "csipd": 2056,
    "ch_doa": 257,
}
ACOUSTIC_KINDS = ("log_mel", "mfcc")
SPATIAL_KINDS = ("ipd", "csipd", "ch_doa")


@dataclass
class FeatureSequence:
    """Real feature matrix of shape (F, T) at 100 frames per second."""

    values: np.ndarray
    kind: str
    frame_rate: int = 100

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ValueError("feature values must be a 2-d (F, T) array")
        expected = FEATURE_DIMS.get(self.kind)
        if expected is not None and self.values.shape[0] != expected:
            raise ValueError(f"{self.kind} features must have {expected} rows, got {self.values.shape[0]}")
        if self.kind not in FEATURE_DIMS and self.kind != "concat":
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"non-finite values in {self.kind} features")

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


def concat(*parts: FeatureSequence) -> FeatureSequence:
    """Stack feature sequences along the feature axis."""
    if not parts:
        raise ValueError("nothing to concatenate")
    lengths = {p.n_frames for p in parts}
    if len(lengths) != 1:
        raise ValueError(f"frame counts differ: {sorted(lengths)}")
    return FeatureSequence(np.concatenate([p.values for p in parts], axis=0), "concat")


@dataclass(frozen=True)
class FeatureRecipe:
    """Which acoustic and spatial features to extract and concatenate.

    Acoustic features come first, then spatial ones in the given order.
    """

    acoustic: str | None = "mfcc"
    spatial: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.acoustic is not None and self.acoustic not in ACOUSTIC_KINDS:
            raise ValueError(f"unknown acoustic feature {self.acoustic!r}")
        object.__setattr__(self, "spatial", tuple(self.spatial))
        for kind in self.spatial:
            if kind not in SPATIAL_KINDS:
                raise ValueError(f"unknown spatial feature {kind!r}")
        if self.acoustic is None and not self.spatial:
            raise ValueError("empty feature recipe")

    @classmethod
    def parse(cls, text: str) -> "FeatureRecipe":
        """Parse ``"mfcc+ch_doa"``-style recipe strings."""
        kinds = [k.strip() for k in text.replace(",", "+").split("+") if k.strip()]
        acoustic = [k for k in kinds if k in ACOUSTIC_KINDS]
        if len(acoustic) > 1:
            raise ValueError("at most one acoustic feature per recipe")
        return cls(acoustic[0] if acoustic else None, tuple(k for k in kinds if k not in ACOUSTIC_KINDS))

    def __str__(self):
        return "+".join(([self.acoustic] if self.acoustic else []) + list(self.spatial))

    @property
    def dim(self) -> int:
        return sum(FEATURE_DIMS[k] for k in self.kinds)

    @property
    def kinds(self) -> list:
        return ([self.acoustic] if self.acoustic else []) + list(self.spatial)

    @property
    def acoustic_rows(self) -> slice:
        """Rows of the concatenated matrix holding acoustic features."""
        return slice(0, FEATURE_DIMS[self.acoustic] if self.acoustic else 0)

    def extract(self, waveform, ipd_pairs=None) -> FeatureSequence:
        from . import acoustic, spatial
        from .dsp import stft

        if not self.spatial:
            # acoustic features only read the first channel
            geom = waveform.geometry
            mask = np.zeros(geom.mic_count, dtype=bool)
            mask[geom.active_indices[0]] = True
            waveform = type(waveform)(waveform.samples[:1], waveform.sample_rate, geom.with_mask(mask))
        spectra = stft(waveform)
        parts = []
        if self.acoustic == "mfcc":
            parts.append(acoustic.mfcc(spectra))
        elif self.acoustic == "log_mel":
            parts.append(acoustic.log_mel(spectra))
        ipd = None
        for kind in self.spatial:
            if kind == "ch_doa":
                parts.append(spatial.ch_doa(spectra))
            else:
                if ipd is None:
                    ipd = spatial.ipd(spectra, ipd_pairs)
                parts.append(ipd if kind == "ipd" else spatial.csipd(ipd))
        return parts[0] if len(parts) == 1 else concat(*parts)


class FeatureNormalizer:
    """Per-feature mean/variance normalisation fitted on training data."""

    def __init__(self, mean=None, std=None):
        self.mean = None if mean is None else np.asarray(mean, dtype=np.float32)
        self.std = None if std is None else np.asarray(std, dtype=np.float32)

    @classmethod
    def fit(cls, matrices, min_std: float = 1e-5) -> "FeatureNormalizer":
        n = 0
        s = s2 = None
        for m in matrices:
            m = np.asarray(m, dtype=np.float64)
            s = m.sum(axis=1) if s is None else s + m.sum(axis=1)
            s2 = (m * m).sum(axis=1) if s2 is None else s2 + (m * m).sum(axis=1)
            n += m.shape[1]
        if n == 0:
            raise ValueError("cannot fit normaliser on empty data")
        mean = s / n
        std = np.sqrt(np.maximum(s2 / n - mean * mean, 0.0))
        return cls(mean, np.maximum(std, min_std))

    def __call__(self, values: np.ndarray) -> np.ndarray:
        return ((values - self.mean[:, None]) / self.std[:, None]).astype(np.float32)
