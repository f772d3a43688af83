"""
Turn detection from direction alone
===================================

Two talkers with identical white-noise voices take turns from directions
60 degrees apart. Spectral features cannot tell them apart; the CH-DOA
feature can. This is a reduced version of the benchmark in the test suite
(fewer scenes). Training sits on a plateau for the first ~200 updates, where
it only learns the prior, so both models get the full 400 updates. Expect
about 20 minutes on one core.
"""

import logging

from chseg.features import FeatureRecipe
from chseg.pipeline import SegmentationModel
from chseg.scenes import alternating_turns
from chseg.training import SegmentDataset, TrainConfig, train

logging.basicConfig(level=logging.INFO, format="%(message)s")

train_scenes = [alternating_turns(s)[:2] for s in range(12)]
dev_scenes = [alternating_turns(1000 + s)[:2] for s in range(4)]
test_scenes = [alternating_turns(2000 + s)[:2] for s in range(6)]

for recipe_text in ("mfcc", "mfcc+ch_doa"):
    recipe = FeatureRecipe.parse(recipe_text)
    ds = SegmentDataset(train_scenes, recipe)
    dev = SegmentDataset(dev_scenes, recipe, ds.normalizer)
    test = SegmentDataset(test_scenes, recipe, ds.normalizer)
    net, _ = train(ds, "scd", TrainConfig(epochs=20, steps_per_epoch=20), seed=0, dev=dev)

    model = SegmentationModel(net, recipe, ds.normalizer, "scd")
    model.tune([r.features for r in dev.recordings], [r.annotations for r in dev.recordings])
    report = model.evaluate({str(i): r.features for i, r in enumerate(test.recordings)},
                            {str(i): r.annotations for i, r in enumerate(test.recordings)})
    agg = report.aggregate
    print(f"{recipe_text:12s} threshold {model.threshold:.2f}  "
          f"P {agg['P']:.1f}  C {agg['C']:.1f}  SER {agg['SER']:.1f} +/- {report.ci95['SER']:.1f}")
