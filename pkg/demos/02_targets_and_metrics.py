"""
Targets, peak picking and segmentation scores
==============================================

Everything the segmenter is trained on and scored with, on a toy
three-turn conversation.
"""

import numpy as np

from chseg.evaluation import average_precision, detection_metrics, peak_pick, purity_coverage
from chseg.labeling import AnnotationSet, change_points, osd_targets, scd_targets, vad_targets

ann = AnnotationSet([("alice", 0.5, 3.0), ("bob", 2.5, 5.0), ("alice", 5.0, 6.0)], duration=7.0)
n = ann.n_frames()

###############################################################################
# Frame targets at 100 frames per second.

vad = vad_targets(ann, n).values
osd = osd_targets(ann, n).values
print("speech frames", int(vad.sum()), "overlap frames", int(osd.sum()))
print("change points", change_points(ann))

###############################################################################
# The change-detection target is a bump of unit height on every change.

curve = scd_targets(ann, n, sigma2=4.0).values
print("target around frame 300:", np.round(curve[296:305], 3))

###############################################################################
# A noisy "prediction" of that curve, turned back into change points.

rng = np.random.default_rng(1)
noisy = curve + 0.1 * rng.standard_normal(n)
found = peak_pick(noisy, threshold=0.5)
print("picked", found)
p, c, ser = purity_coverage(found, ann)
print(f"purity {p:.1f}%  coverage {c:.1f}%  SER {ser:.1f}%")
p, c, ser = purity_coverage([], ann)
print(f"no change points: purity {p:.1f}%  coverage {c:.1f}%")

###############################################################################
# Detection scores for a fake overlap posterior.

score = np.clip(osd * 0.7 + 0.2 * rng.random(n), 0, 1)
m = detection_metrics(score >= 0.5, osd)
print(f"F1 {m.f1:.1f}%  AP {100 * average_precision(score, osd):.1f}%")
