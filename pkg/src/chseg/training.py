"""Training on random 2 s crops with overlap augmentation and TF masking."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .acoustic import MaskParams, mask_rows
from .array_sim import MultichannelWaveform
from .dsp import HOP_LENGTH, WIN_LENGTH
from .features import FeatureNormalizer, FeatureRecipe
from .labeling import AnnotationSet, change_points, gaussian_curve, speaker_count, SIGMA2_RANGE
from .tcn import TCN, Adam, TCNConfig

log = logging.getLogger(__name__)

CROP_FRAMES = 200
TARGET_MARGIN = 40  # frames of context used to place Gaussian tails of nearby change points


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 64
    lr: float = 1e-3
    crop_frames: int = CROP_FRAMES
    overlap_prob: float = 0.5
    snr_range: tuple = (0.0, 10.0)
    mask_prob: float = 0.5
    mask: MaskParams = field(default_factory=MaskParams)
    patience: int = 10
    steps_per_epoch: int | None = None
    bottleneck_dim: int = 64
    hidden_dim: int = 80


@dataclass
class Recording:
    waveform: MultichannelWaveform
    annotations: AnnotationSet
    features: np.ndarray | None = None  # raw (F, T) features, not normalised

    @property
    def n_frames(self) -> int:
        return self.features.shape[1]


def crop_samples(frames: int) -> int:
    """Samples needed to produce exactly ``frames`` STFT frames."""
    return WIN_LENGTH + HOP_LENGTH * (frames - 1)


class SegmentDataset:
    """Recordings plus the feature recipe used to turn crops into model inputs."""

    def __init__(self, recordings, recipe: FeatureRecipe, normalizer: FeatureNormalizer | None = None):
        self.recipe = recipe
        self.recordings = []
        for rec in recordings:
            if not isinstance(rec, Recording):
                rec = Recording(*rec)
            if rec.features is None:
                rec.features = recipe.extract(rec.waveform).values
            self.recordings.append(rec)
        if not self.recordings:
            raise ValueError("dataset is empty")
        self.normalizer = normalizer or FeatureNormalizer.fit(r.features for r in self.recordings)

    def __len__(self):
        return len(self.recordings)

    @property
    def dim(self) -> int:
        return self.recipe.dim

    @property
    def total_frames(self) -> int:
        return sum(r.n_frames for r in self.recordings)

    def _window(self, ann: AnnotationSet, start: int, frames: int, prefix: str = ""):
        """Annotations of [start - margin, start + frames + margin) in window frames.

        Also returns the first window frame that lies inside the recording, so
        that a speaker active at time 0 does not produce a spurious onset.
        """
        m = TARGET_MARGIN
        win = ann.crop((start - m) / 100, (start + frames + m) / 100)
        if prefix:
            win = AnnotationSet([(prefix + s, a, b) for s, a, b in win.entries], duration=win.duration)
        return win, max(0, m - start)

    def _targets(self, task: str, windows, frames: int, sigma2: float) -> np.ndarray:
        m = TARGET_MARGIN
        merged = AnnotationSet([e for w, _ in windows for e in w.entries], duration=(frames + 2 * m) / 100)
        if task in ("vad", "osd"):
            count = speaker_count(merged, frames + 2 * m)[m:m + frames]
            return (count >= (1 if task == "vad" else 2)).astype(np.float32)
        cps = change_points(merged, frames + 2 * m)
        first = max(f for _, f in windows)
        cps = cps[cps > first]
        return gaussian_curve(cps, frames, sigma2, offset=m).astype(np.float32)

    def _pick(self, rng, frames: int):
        lengths = np.array([max(r.n_frames - frames + 1, 0) for r in self.recordings], dtype=np.float64)
        if lengths.sum() == 0:
            raise ValueError(f"no recording is at least {frames} frames long")
        i = int(rng.choice(len(self.recordings), p=lengths / lengths.sum()))
        return self.recordings[i], int(rng.integers(0, lengths[i]))

    def example(self, rng: np.random.Generator, task: str, cfg: TrainConfig):
        """One normalised (F, frames) training crop and its targets."""
        frames = cfg.crop_frames
        rec, start = self._pick(rng, frames)
        sigma2 = float(rng.uniform(*SIGMA2_RANGE))
        if rng.random() < cfg.overlap_prob:
            other, ostart = self._pick(rng, frames)
            n = crop_samples(frames)
            a = rec.waveform.samples[:, start * HOP_LENGTH:start * HOP_LENGTH + n]
            b = other.waveform.samples[:, ostart * HOP_LENGTH:ostart * HOP_LENGTH + n]
            snr = rng.uniform(*cfg.snr_range)
            pa, pb = np.mean(a * a), np.mean(b * b)
            gain = np.sqrt(pa / (pb * 10.0 ** (snr / 10.0))) if pa > 0 and pb > 0 else 1.0
            mixed = MultichannelWaveform(a + gain * b, rec.waveform.sample_rate, rec.waveform.geometry)
            feats = self.recipe.extract(mixed).values
            windows = [self._window(rec.annotations, start, frames),
                       self._window(other.annotations, ostart, frames, prefix="aug+")]
        else:
            feats = rec.features[:, start:start + frames]
            windows = [self._window(rec.annotations, start, frames)]
        y = self._targets(task, windows, frames, sigma2)
        x = self.normalizer(feats)
        if self.recipe.acoustic and cfg.mask_prob > 0 and rng.random() < cfg.mask_prob:
            x = mask_rows(x, rng, cfg.mask, rows=self.recipe.acoustic_rows)
        return x, y

    def batch(self, rng: np.random.Generator, task: str, cfg: TrainConfig):
        """Inputs of shape (batch, F, frames) and targets of shape (batch, frames)."""
        xs, ys = zip(*(self.example(rng, task, cfg) for _ in range(cfg.batch_size)))
        return np.stack(xs), np.stack(ys)

    def eval_crops(self, task: str, frames: int = CROP_FRAMES, sigma2: float = 4.5):
        """Deterministic non-overlapping crops used for the dev loss."""
        xs, ys = [], []
        for rec in self.recordings:
            for start in range(0, rec.n_frames - frames + 1, frames):
                xs.append(self.normalizer(rec.features[:, start:start + frames]))
                ys.append(self._targets(task, [self._window(rec.annotations, start, frames)], frames, sigma2))
        return np.stack(xs), np.stack(ys)


@dataclass
class TrainingLog:
    epochs: list = field(default_factory=list)
    best_epoch: int | None = None

    def add(self, **row):
        self.epochs.append(row)
        log.info("epoch %(epoch)d train %(train_loss).4f dev %(dev_loss)s", row)

    @property
    def train_losses(self) -> list:
        return [r["train_loss"] for r in self.epochs]


def _batched_loss(net: TCN, x: np.ndarray, y: np.ndarray, task: str, chunk: int = 64) -> float:
    from .tcn import loss_from_logits

    total, n = 0.0, 0
    for i in range(0, len(x), chunk):
        xb = np.transpose(x[i:i + chunk], (0, 2, 1))
        value, _ = loss_from_logits(net.logits(xb), y[i:i + chunk], task, net.config.head)
        total += value * len(xb)
        n += len(xb)
    return total / n


def train(dataset: SegmentDataset, task: str, cfg: TrainConfig | None = None, seed: int = 0,
          dev: SegmentDataset | None = None, model_config: TCNConfig | None = None):
    """Train a network for ``task``; returns ``(net, log)``.

    With a dev set the returned weights are those of the epoch with the lowest
    dev loss, and training stops after ``patience`` epochs without improvement.
    """
    cfg = cfg or TrainConfig()
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    rng = np.random.default_rng(seed)
    model_config = model_config or TCNConfig.for_task(
        task, dataset.dim, bottleneck_dim=cfg.bottleneck_dim, hidden_dim=cfg.hidden_dim)
    if model_config.input_dim != dataset.dim:
        raise ValueError(f"model expects {model_config.input_dim} features, dataset has {dataset.dim}")
    net = TCN(model_config, seed=int(rng.integers(2 ** 31)))
    opt = Adam(lr=cfg.lr)
    steps = cfg.steps_per_epoch or max(1, dataset.total_frames // (cfg.crop_frames * cfg.batch_size))
    dev_data = dev.eval_crops(task, cfg.crop_frames) if dev is not None else None

    history = TrainingLog()
    best, best_loss, stale = None, np.inf, 0
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.time()
        losses = []
        for _ in range(steps):
            xb, yb = dataset.batch(rng, task, cfg)
            value, grads = net.loss_and_grads(np.transpose(xb, (0, 2, 1)), yb, task)
            opt.step(net.weights, grads)
            losses.append(value)
        dev_loss = _batched_loss(net, *dev_data, task) if dev_data is not None else None
        history.add(epoch=epoch, train_loss=float(np.mean(losses)), dev_loss=dev_loss,
                    seconds=time.time() - t0)
        if dev_loss is not None:
            if dev_loss < best_loss:
                best_loss, stale = dev_loss, 0
                best = {k: v.copy() for k, v in net.weights.items()}
                history.best_epoch = epoch
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    if best is not None:
        net.weights = best
    return net, history
