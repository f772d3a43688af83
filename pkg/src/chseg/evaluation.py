"""Sliding-window inference, threshold tuning and segmentation metrics."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .labeling import AnnotationSet, frame_labels, vad_targets, osd_targets

WINDOW_FRAMES = 200
HOP_FRAMES = 50
THRESHOLD_GRID = np.arange(1, 100) / 100.0
PEAK_MIN_DISTANCE = 20

METRICS = {
    "vad": ("FA", "Miss"),
    "osd": ("F1", "AP"),
    "scd": ("P", "C", "SER"),
}


def window_starts(n_frames: int, window: int = WINDOW_FRAMES, hop: int = HOP_FRAMES) -> list:
    if n_frames <= window:
        return [0]
    starts = list(range(0, n_frames - window + 1, hop))
    if starts[-1] + window < n_frames:
        starts.append(n_frames - window)
    return starts


def sliding_inference(model, features: np.ndarray, window: int = WINDOW_FRAMES, hop: int = HOP_FRAMES,
                      aggregate: str = "mean", batch_size: int = 64) -> np.ndarray:
    """Predictions for a whole recording from overlapping fixed-length windows.

    ``model`` is a :class:`~chseg.tcn.TCN`; ``features`` is a normalised
    (F, T) matrix. Each frame receives the mean (or median / max) of the
    predictions of all windows covering it. Returns a (C, T) array.
    """
    if aggregate not in ("mean", "median", "max"):
        raise ValueError(f"unknown aggregate {aggregate!r}")
    features = np.asarray(features, dtype=np.float32)
    f, t = features.shape
    if t < window:
        padded = np.zeros((f, window), dtype=np.float32)
        padded[:, :t] = features
        return model.forward(padded.T[None])[0].T[:, :t]

    starts = window_starts(t, window, hop)
    outs = []
    for i in range(0, len(starts), batch_size):
        chunk = np.stack([features[:, s:s + window].T for s in starts[i:i + batch_size]])
        outs.append(model.forward(chunk))
    outs = np.concatenate(outs)  # (windows, window, C)
    c = outs.shape[2]

    if aggregate == "mean":
        total = np.zeros((t, c))
        count = np.zeros((t, 1))
        for s, o in zip(starts, outs):
            total[s:s + window] += o
            count[s:s + window] += 1
        return (total / count).T

    stacked = np.full((len(starts), t, c), np.nan)
    for k, (s, o) in enumerate(zip(starts, outs)):
        stacked[k, s:s + window] = o
    reduce = np.nanmedian if aggregate == "median" else np.nanmax
    return reduce(stacked, axis=0).T


@dataclass
class DetectionMetrics:
    fa: float
    miss: float
    precision: float
    recall: float
    f1: float
    no_reference_positives: bool = False


def detection_metrics(pred, ref) -> DetectionMetrics:
    """Frame-level detection errors, all in percent.

    FA and Miss are normalised by the number of reference-positive frames.
    Without any reference positive FA falls back to the total frame count.
    """
    pred = np.asarray(pred).astype(bool)
    ref = np.asarray(ref).astype(bool)
    if pred.shape != ref.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {ref.shape}")
    tp = int(np.sum(pred & ref))
    fp = int(np.sum(pred & ~ref))
    fn = int(np.sum(~pred & ref))
    pos = tp + fn
    if pos == 0:
        fa = 100.0 * fp / max(pred.size, 1)
        miss = 0.0
    else:
        fa = 100.0 * fp / pos
        miss = 100.0 * fn / pos
    precision = 100.0 * tp / (tp + fp) if tp + fp else (100.0 if fn == 0 else 0.0)
    recall = 100.0 * tp / pos if pos else (100.0 if fp == 0 else 0.0)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return DetectionMetrics(fa, miss, precision, recall, f1, pos == 0)


def average_precision(scores, labels) -> float:
    """Area under the precision-recall staircase (fraction in [0, 1]).

    Ranking is by descending score; ties keep the original order.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).astype(bool).ravel()
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive label")
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    tp = np.cumsum(hits)
    precision = tp / np.arange(1, hits.size + 1)
    return float(np.sum(precision[hits]) / n_pos)


def peak_pick(curve, threshold: float, min_distance: int = PEAK_MIN_DISTANCE) -> np.ndarray:
    """Local maxima of ``curve`` at or above ``threshold``, greedily thinned.

    Candidates are accepted in descending value order; any candidate closer
    than ``min_distance`` frames to an accepted peak is dropped.
    """
    y = np.asarray(curve, dtype=np.float64).ravel()
    if y.size == 0:
        return np.zeros(0, dtype=np.int64)
    left = np.concatenate([[-np.inf], y[:-1]])
    right = np.concatenate([y[1:], [-np.inf]])
    cand = np.flatnonzero((y >= left) & (y >= right) & (y >= threshold))
    order = cand[np.argsort(-y[cand], kind="stable")]
    taken = np.zeros(y.size, dtype=bool)
    accepted = []
    for t in order:
        lo, hi = max(0, t - min_distance + 1), min(y.size, t + min_distance)
        if not taken[lo:hi].any():
            accepted.append(t)
            taken[t] = True
    return np.sort(np.asarray(accepted, dtype=np.int64))


def _max_overlap_sum(a: np.ndarray, b: np.ndarray) -> int:
    """Sum over segments of ``a`` of their largest overlap with one segment of ``b``."""
    pairs, counts = np.unique(np.stack([a, b]), axis=1, return_counts=True)
    best = {}
    for seg, c in zip(pairs[0], counts):
        if c > best.get(seg, 0):
            best[seg] = c
    return int(sum(best.values()))


def reference_regions(annotations: AnnotationSet, n_frames: int) -> np.ndarray:
    """Region index per frame: maximal runs of a constant active-speaker set."""
    labels = frame_labels(annotations, n_frames)
    return np.concatenate([[0], np.cumsum(labels[1:] != labels[:-1])]).astype(np.int64)


def hypothesis_segments(change_points, n_frames: int) -> np.ndarray:
    cps = np.unique(np.asarray(change_points, dtype=np.int64))
    cps = cps[(cps > 0) & (cps < n_frames)]
    return np.searchsorted(cps, np.arange(n_frames), side="right").astype(np.int64)


def purity_coverage(hyp_change_points, ref_annotations: AnnotationSet, n_frames: int | None = None):
    """Segmentation purity, coverage and their harmonic mean (SER), in percent.

    Works at frame resolution. The reference segmentation splits the
    recording wherever the set of active speakers changes, so silence and
    overlap regions are segments too.
    """
    if n_frames is None:
        n_frames = ref_annotations.n_frames()
    if n_frames <= 0:
        raise ValueError("empty recording")
    hyp = hypothesis_segments(hyp_change_points, n_frames)
    ref = reference_regions(ref_annotations, n_frames)
    purity = 100.0 * _max_overlap_sum(hyp, ref) / n_frames
    coverage = 100.0 * _max_overlap_sum(ref, hyp) / n_frames
    ser = 2 * purity * coverage / (purity + coverage) if purity + coverage else 0.0
    return purity, coverage, ser


def confidence_interval(values) -> float:
    """Half-width of the normal-approximation 95% interval of the mean."""
    v = np.asarray([x for x in values if np.isfinite(x)], dtype=np.float64)
    if v.size < 2:
        warnings.warn("confidence interval needs at least 2 files; returning 0", stacklevel=2)
        return 0.0
    return float(1.96 * v.std(ddof=1) / np.sqrt(v.size))


def _binary_refs(task: str, references, lengths):
    out = []
    for ref, n in zip(references, lengths):
        if isinstance(ref, AnnotationSet):
            ref = (vad_targets if task == "vad" else osd_targets)(ref, n).values
        out.append(np.asarray(ref).astype(bool))
    return out


def tune_threshold(dev_predictions, dev_targets, task: str, min_distance: int = PEAK_MIN_DISTANCE,
                   grid=THRESHOLD_GRID) -> float:
    """Pick the detection threshold on development data.

    ``dev_predictions`` are per-file score arrays (positive-class posterior for
    vad/osd, change curve for scd). ``dev_targets`` are binary frame arrays or
    annotations (vad/osd) and annotations (scd). Criteria: vad minimises
    FA + Miss, osd maximises F1, scd maximises SER after peak picking. Ties go
    to the lowest threshold.
    """
    preds = [np.asarray(p, dtype=np.float64).ravel() for p in dev_predictions]
    if task == "scd":
        best_t, best = 0.5, -np.inf
        for th in grid:
            sers = [purity_coverage(peak_pick(p, th, min_distance), ref, p.size)[2]
                    for p, ref in zip(preds, dev_targets)]
            score = float(np.mean(sers))
            if score > best:
                best_t, best = float(th), score
        return best_t

    refs = _binary_refs(task, dev_targets, [p.size for p in preds])
    scores = np.concatenate(preds)
    ref = np.concatenate(refs)
    if ref.all() or not ref.any():
        warnings.warn("development references contain a single class; using threshold 0.5", stacklevel=2)
        return 0.5
    best_t, best = 0.5, -np.inf
    for th in grid:
        m = detection_metrics(scores >= th, ref)
        score = -(m.fa + m.miss) if task == "vad" else m.f1
        if score > best:
            best_t, best = float(th), score
    return best_t


@dataclass
class MetricsReport:
    task: str
    threshold: float
    per_file: dict = field(default_factory=dict)
    aggregate: dict = field(default_factory=dict)
    ci95: dict = field(default_factory=dict)

    @classmethod
    def from_per_file(cls, task: str, threshold: float, per_file: dict) -> "MetricsReport":
        report = cls(task, float(threshold), per_file)
        for name in METRICS[task]:
            vals = [m[name] for m in per_file.values() if np.isfinite(m[name])]
            report.aggregate[name] = float(np.mean(vals)) if vals else float("nan")
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                report.ci95[name] = confidence_interval(vals)
        return report

    def to_json(self) -> str:
        return json.dumps({"task": self.task, "threshold": self.threshold, "per_file": self.per_file,
                           "aggregate": self.aggregate, "ci95": self.ci95}, indent=2)

    def to_tsv(self) -> str:
        names = METRICS[self.task]
        lines = ["file\t" + "\t".join(names)]
        for key, m in self.per_file.items():
            lines.append(key + "\t" + "\t".join(f"{m[n]:.2f}" for n in names))
        lines.append("MEAN\t" + "\t".join(f"{self.aggregate[n]:.2f}" for n in names))
        lines.append("CI95\t" + "\t".join(f"{self.ci95[n]:.2f}" for n in names))
        return "\n".join(lines) + "\n"


def score_files(task: str, predictions: dict, references: dict, threshold: float,
                min_distance: int = PEAK_MIN_DISTANCE) -> MetricsReport:
    """Per-file metrics for ``task``.

    ``predictions`` maps file id to a score array (positive-class posterior or
    change curve); ``references`` maps file id to its annotations.
    """
    per_file = {}
    for key, scores in predictions.items():
        scores = np.asarray(scores, dtype=np.float64).ravel()
        ann = references[key]
        n = scores.size
        if task == "scd":
            p, c, ser = purity_coverage(peak_pick(scores, threshold, min_distance), ann, n)
            per_file[key] = {"P": p, "C": c, "SER": ser}
            continue
        ref = _binary_refs(task, [ann], [n])[0]
        m = detection_metrics(scores >= threshold, ref)
        if task == "vad":
            per_file[key] = {"FA": m.fa, "Miss": m.miss}
        else:
            ap = 100.0 * average_precision(scores, ref) if ref.any() else float("nan")
            per_file[key] = {"F1": m.f1, "AP": ap}
    return MetricsReport.from_per_file(task, threshold, per_file)
