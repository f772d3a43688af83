"""Reference annotations and frame-level targets for VAD, OSD and SCD."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

FRAME_RATE = 100  # frames per second (10 ms hop)
SIGMA2_RANGE = (2.0, 7.0)


class Segment(NamedTuple):
    speaker: str
    start: float
    end: float


@dataclass
class AnnotationSet:
    """Speaker-attributed segments of one recording (times in seconds)."""

    entries: list = field(default_factory=list)
    recording_id: str = "rec"
    duration: float | None = None

    def __post_init__(self):
        self.entries = sorted(Segment(str(s), float(a), float(b)) for s, a, b in self.entries)
        if self.duration is None:
            self.duration = max((e.end for e in self.entries), default=0.0)
        for e in self.entries:
            if not (0.0 <= e.start < e.end <= self.duration + 1e-9):
                raise ValueError(f"segment {e} outside [0, {self.duration}]")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def speakers(self) -> list:
        return sorted({e.speaker for e in self.entries})

    def n_frames(self) -> int:
        return int(round(self.duration * FRAME_RATE))

    def crop(self, start: float, end: float) -> "AnnotationSet":
        """Segments intersecting [start, end), shifted so that ``start`` becomes 0."""
        out = []
        for e in self.entries:
            a, b = max(e.start, start), min(e.end, end)
            if b > a:
                out.append(Segment(e.speaker, a - start, b - start))
        return AnnotationSet(out, self.recording_id, end - start)

    def activity(self, n_frames: int) -> tuple[list, np.ndarray]:
        """Boolean (speakers, frames) matrix sampled at the frame centres."""
        speakers = self.speakers
        act = np.zeros((len(speakers), n_frames), dtype=bool)
        centers = (np.arange(n_frames) + 0.5) / FRAME_RATE
        index = {s: i for i, s in enumerate(speakers)}
        for e in self.entries:
            act[index[e.speaker]] |= (centers >= e.start) & (centers < e.end)
        return speakers, act


@dataclass
class FrameTargets:
    task: str
    values: np.ndarray
    sigma2: float | None = None

    @property
    def n_frames(self) -> int:
        return self.values.shape[-1]


def speaker_count(annotations: AnnotationSet, n_frames: int) -> np.ndarray:
    """Number of distinct active speakers at each frame centre (t + 0.5) / 100 s."""
    _, act = annotations.activity(n_frames)
    return act.sum(axis=0).astype(np.int64)


def vad_targets(annotations: AnnotationSet, n_frames: int) -> FrameTargets:
    return FrameTargets("vad", (speaker_count(annotations, n_frames) >= 1).astype(np.float64))


def osd_targets(annotations: AnnotationSet, n_frames: int) -> FrameTargets:
    return FrameTargets("osd", (speaker_count(annotations, n_frames) >= 2).astype(np.float64))


def frame_labels(annotations: AnnotationSet, n_frames: int) -> np.ndarray:
    """Integer label per frame identifying its set of active speakers.

    Frames sharing a label have exactly the same active speakers; silence is
    a label of its own.
    """
    _, act = annotations.activity(n_frames)
    if act.shape[0] == 0:
        return np.zeros(n_frames, dtype=np.int64)
    _, labels = np.unique(act.T, axis=0, return_inverse=True)
    return labels.ravel().astype(np.int64)


def change_points(annotations: AnnotationSet, n_frames: int | None = None) -> np.ndarray:
    """Frames where the set of active speakers differs from the previous frame.

    Turns, speech onsets/offsets and overlap onsets/offsets all count. The
    recording start and end are not change points.
    """
    if n_frames is None:
        n_frames = annotations.n_frames()
    _, act = annotations.activity(n_frames)
    if act.shape[0] == 0 or n_frames < 2:
        return np.zeros(0, dtype=np.int64)
    diff = np.any(act[:, 1:] != act[:, :-1], axis=0)
    return np.flatnonzero(diff) + 1


def gaussian_curve(points, n_frames: int, sigma2: float, offset: int = 0) -> np.ndarray:
    """Max-combination of unit Gaussians centred on ``points - offset``.

    Each bump is truncated to zero beyond 4 sigma.
    """
    t = np.arange(n_frames, dtype=np.float64)
    y = np.zeros(n_frames)
    sigma = np.sqrt(sigma2)
    for c in np.asarray(points, dtype=np.float64) - offset:
        d = t - c
        g = np.exp(-d * d / (2.0 * sigma2))
        g[np.abs(d) > 4.0 * sigma] = 0.0
        np.maximum(y, g, out=y)
    return y


def scd_targets(annotations: AnnotationSet, n_frames: int, rng: np.random.Generator | None = None,
                sigma2: float | None = None) -> FrameTargets:
    """Regression targets for speaker change detection.

    ``sigma2`` is drawn from U[2, 7] when not given (once per call, i.e. per
    training example).
    """
    if sigma2 is None:
        rng = rng if rng is not None else np.random.default_rng()
        sigma2 = float(rng.uniform(*SIGMA2_RANGE))
    cps = change_points(annotations, n_frames)
    return FrameTargets("scd", gaussian_curve(cps, n_frames, sigma2), sigma2=sigma2)


def make_targets(task: str, annotations: AnnotationSet, n_frames: int,
                 rng: np.random.Generator | None = None) -> FrameTargets:
    if task == "vad":
        return vad_targets(annotations, n_frames)
    if task == "osd":
        return osd_targets(annotations, n_frames)
    if task == "scd":
        return scd_targets(annotations, n_frames, rng)
    raise ValueError(f"unknown task {task!r}")


def overlap_augment(wave_a, ann_a: AnnotationSet, wave_b, ann_b: AnnotationSet,
                    rng: np.random.Generator, snr_range=(0.0, 10.0)):
    """Mix segment B into segment A at a random A-to-B SNR drawn from ``snr_range`` dB.

    ``wave_a``/``wave_b`` are (channels, samples) arrays or waveform objects
    with a ``samples`` attribute. Speakers of B are renamed so that they always
    count as distinct from A's speakers. Returns ``(mixed_samples, annotations,
    snr_db)``.
    """
    a = np.asarray(getattr(wave_a, "samples", wave_a), dtype=np.float64)
    b = np.asarray(getattr(wave_b, "samples", wave_b), dtype=np.float64)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"channel count mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape != b.shape:
        raise ValueError(f"segment length mismatch: {a.shape} vs {b.shape}")
    snr_db = float(rng.uniform(*snr_range))
    pa, pb = np.mean(a * a), np.mean(b * b)
    gain = np.sqrt(pa / (pb * 10.0 ** (snr_db / 10.0))) if pa > 0 and pb > 0 else 1.0
    mixed = a + gain * b
    entries = list(ann_a.entries) + [Segment("aug+" + e.speaker, e.start, e.end) for e in ann_b.entries]
    merged = AnnotationSet(entries, ann_a.recording_id, max(ann_a.duration, ann_b.duration))
    return mixed, merged, snr_db
