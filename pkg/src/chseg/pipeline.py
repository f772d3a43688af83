"""A trained segmenter bundled with its feature recipe, normaliser and threshold."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import io
from .evaluation import PEAK_MIN_DISTANCE, score_files, sliding_inference, tune_threshold
from .features import FeatureNormalizer, FeatureRecipe
from .tcn import TCN, TCNConfig


@dataclass
class SegmentationModel:
    net: TCN
    recipe: FeatureRecipe
    normalizer: FeatureNormalizer
    task: str
    threshold: float = 0.5
    min_distance: int = PEAK_MIN_DISTANCE

    def scores_from_features(self, raw_features: np.ndarray) -> np.ndarray:
        """Per-frame score: positive-class posterior (vad/osd) or change curve (scd)."""
        out = sliding_inference(self.net, self.normalizer(raw_features))
        return out[1] if self.task in ("vad", "osd") else out[0]

    def scores(self, waveform) -> np.ndarray:
        return self.scores_from_features(self.recipe.extract(waveform).values)

    def tune(self, raw_features: list, references: list) -> float:
        preds = [self.scores_from_features(f) for f in raw_features]
        self.threshold = tune_threshold(preds, references, self.task, self.min_distance)
        return self.threshold

    def evaluate(self, raw_features: dict, references: dict):
        preds = {k: self.scores_from_features(f) for k, f in raw_features.items()}
        return score_files(self.task, preds, references, self.threshold, self.min_distance)

    def save(self, path) -> None:
        meta = {
            "config": self.net.config.to_dict(),
            "task": self.task,
            "recipe": str(self.recipe),
            "threshold": self.threshold,
            "min_distance": self.min_distance,
        }
        tensors = dict(self.net.weights)
        tensors["norm.mean"] = self.normalizer.mean
        tensors["norm.std"] = self.normalizer.std
        io.write_checkpoint(path, meta, tensors)

    @classmethod
    def load(cls, path) -> "SegmentationModel":
        meta, tensors = io.read_checkpoint(path)
        config = TCNConfig(**meta["config"])
        normalizer = FeatureNormalizer(tensors.pop("norm.mean"), tensors.pop("norm.std"))
        return cls(TCN(config, tensors), FeatureRecipe.parse(meta["recipe"]), normalizer,
                   meta["task"], float(meta["threshold"]), int(meta["min_distance"]))
