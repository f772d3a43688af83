import numpy as np
import pytest

from chseg.features import FeatureRecipe
from chseg.labeling import AnnotationSet, change_points
from chseg.scenes import alternating_turns
from chseg.training import Recording, SegmentDataset, TrainConfig, crop_samples, train


@pytest.fixture(scope="module")
def scenes():
    return [alternating_turns(s, duration=6.0)[:2] for s in range(4)]


def test_crop_samples():
    assert crop_samples(200) == 400 + 160 * 199


def test_batch_shape(scenes):
    ds = SegmentDataset(scenes, FeatureRecipe.parse("mfcc+ch_doa"))
    x, y = ds.batch(np.random.default_rng(0), "scd", TrainConfig())
    assert x.shape == (64, 316, 200) and y.shape == (64, 200)
    assert x.dtype == np.float32


def test_batch_deterministic(scenes):
    ds = SegmentDataset(scenes, FeatureRecipe.parse("mfcc"))
    a = ds.batch(np.random.default_rng(7), "osd", TrainConfig(batch_size=8))
    b = ds.batch(np.random.default_rng(7), "osd", TrainConfig(batch_size=8))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_crop_targets_follow_annotations(scenes):
    ds = SegmentDataset(scenes[:1], FeatureRecipe.parse("mfcc"))
    rec = ds.recordings[0]
    start = 150
    win = [ds._window(rec.annotations, start, 200)]
    vad = ds._targets("vad", win, 200, 4.0)
    assert vad.all()  # alternating turns leave no silence
    y = ds._targets("scd", win, 200, 4.0)
    cps = change_points(rec.annotations, rec.n_frames)
    inside = cps[(cps >= start) & (cps < start + 200)] - start
    assert np.all(y[inside] == 1.0)


def test_no_spurious_change_at_recording_start():
    ann = AnnotationSet([("A", 0.0, 3.0)])
    rec = alternating_turns(0, duration=3.0)[0]
    ds = SegmentDataset([(rec, ann)], FeatureRecipe.parse("mfcc"))
    y = ds._targets("scd", [ds._window(ann, 0, 200)], 200, 4.0)
    assert not y.any()


def test_overlap_augmentation_produces_overlap(scenes):
    ds = SegmentDataset(scenes, FeatureRecipe.parse("mfcc"))
    _, y = ds.batch(np.random.default_rng(1), "osd", TrainConfig(batch_size=16, overlap_prob=1.0))
    assert y.mean() > 0.9
    _, y = ds.batch(np.random.default_rng(1), "osd", TrainConfig(batch_size=16, overlap_prob=0.0))
    assert not y.any()


def test_training_loss_decreases_and_is_reproducible():
    data = [alternating_turns(s, duration=10.0)[:2] for s in range(10)]
    ds = SegmentDataset(data, FeatureRecipe.parse("mfcc+ch_doa"))
    cfg = TrainConfig(epochs=20, batch_size=16, steps_per_epoch=3)
    net, log = train(ds, "vad", cfg, seed=0)
    losses = log.train_losses
    assert len(losses) == 20
    assert losses[-1] <= 0.5 * losses[0]
    _, log2 = train(ds, "vad", TrainConfig(epochs=1, batch_size=16, steps_per_epoch=3), seed=0)
    assert log2.train_losses[0] == losses[0]


def test_dev_selection_keeps_best_epoch(scenes):
    ds = SegmentDataset(scenes[:2], FeatureRecipe.parse("mfcc"))
    dev = SegmentDataset(scenes[2:], FeatureRecipe.parse("mfcc"), ds.normalizer)
    _, log = train(ds, "scd", TrainConfig(epochs=3, batch_size=4, steps_per_epoch=1, patience=1), dev=dev)
    devs = [r["dev_loss"] for r in log.epochs]
    assert log.best_epoch == int(np.argmin(devs)) + 1


def test_empty_dataset():
    with pytest.raises(ValueError):
        SegmentDataset([], FeatureRecipe.parse("mfcc"))


def test_recordings_can_be_prebuilt(scenes):
    rec = Recording(*scenes[0])
    ds = SegmentDataset([rec], FeatureRecipe.parse("mfcc"))
    assert ds.recordings[0] is rec and rec.features.shape[0] == 59
