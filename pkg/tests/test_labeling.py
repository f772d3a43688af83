import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chseg.labeling import (AnnotationSet, change_points, gaussian_curve, make_targets, osd_targets,
                            overlap_augment, scd_targets, speaker_count, vad_targets)


def test_empty_annotations():
    ann = AnnotationSet([], duration=1.0)
    assert not speaker_count(ann, 100).any()
    assert change_points(ann).size == 0
    assert not scd_targets(ann, 100, sigma2=4.0).values.any()


def test_single_speaker_first_second():
    ann = AnnotationSet([("A", 0.0, 1.0)], duration=2.0)
    count = speaker_count(ann, 200)
    assert np.array_equal(count, np.r_[np.ones(100), np.zeros(100)])
    assert np.array_equal(vad_targets(ann, 200).values, count)
    assert not osd_targets(ann, 200).values.any()


def test_overlapping_pair_counts():
    ann = AnnotationSet([("A", 0.0, 2.0), ("B", 1.0, 3.0)])
    count = speaker_count(ann, 300)
    assert np.array_equal(count, np.repeat([1, 2, 1], 100))
    assert np.array_equal(osd_targets(ann, 300).values, np.repeat([0, 1, 0], 100))
    assert vad_targets(ann, 300).values.all()


def test_same_speaker_counted_once():
    ann = AnnotationSet([("A", 0.0, 2.0), ("A", 1.0, 3.0)])
    assert speaker_count(ann, 300).max() == 1


def test_invalid_segment():
    with pytest.raises(ValueError):
        AnnotationSet([("A", 2.0, 1.0)])
    with pytest.raises(ValueError):
        AnnotationSet([("A", 0.0, 5.0)], duration=4.0)


def test_change_points_examples():
    assert list(change_points(AnnotationSet([("A", 1.0, 2.0)], duration=3.0))) == [100, 200]
    turns = AnnotationSet([("A", 0.0, 1.5), ("B", 1.5, 3.0)])
    assert list(change_points(turns)) == [150]
    assert change_points(AnnotationSet([], duration=5.0)).size == 0


def test_change_points_include_overlap_boundaries():
    ann = AnnotationSet([("A", 0.0, 2.0), ("B", 1.0, 3.0)])
    assert list(change_points(ann)) == [100, 200]


def test_scd_gaussian_values():
    ann = AnnotationSet([("A", 0.0, 1.0), ("B", 1.0, 2.0)])
    y = scd_targets(ann, 200, sigma2=4.0).values
    assert y[100] == 1.0
    assert y[98] == pytest.approx(np.exp(-0.5))
    assert y[102] == pytest.approx(np.exp(-0.5))


def test_scd_max_combination():
    y = gaussian_curve([50, 53], 100, sigma2=4.0)
    single = gaussian_curve([50], 100, sigma2=4.0)
    assert y[51] == pytest.approx(max(single[51], single[52]))
    assert y.max() == 1.0


def test_gaussian_truncated():
    y = gaussian_curve([50], 100, sigma2=4.0)
    assert y[41] == 0.0 and y[42] > 0.0


def test_scd_sigma_drawn_in_range():
    ann = AnnotationSet([("A", 0.0, 1.0)], duration=2.0)
    rng = np.random.default_rng(0)
    sig = [scd_targets(ann, 200, rng).sigma2 for _ in range(200)]
    assert 2.0 <= min(sig) and max(sig) <= 7.0


def test_make_targets_dispatch():
    ann = AnnotationSet([("A", 0.0, 1.0)], duration=2.0)
    assert make_targets("vad", ann, 200).task == "vad"
    with pytest.raises(ValueError):
        make_targets("asr", ann, 200)


def test_crop_shifts_and_clips():
    ann = AnnotationSet([("A", 0.0, 2.0), ("B", 3.0, 5.0)], duration=6.0)
    c = ann.crop(1.5, 3.5)
    assert [(e.speaker, e.start, e.end) for e in c] == [("A", 0.0, 0.5), ("B", 1.5, 2.0)]
    assert c.duration == 2.0


segments = st.lists(st.tuples(st.sampled_from("ABC"), st.integers(0, 90), st.integers(1, 30)),
                    max_size=6)


@settings(max_examples=100, deadline=None)
@given(segments)
def test_osd_implies_vad(raw):
    ann = AnnotationSet([(s, a / 10, (a + d) / 10) for s, a, d in raw], duration=12.0)
    assert np.all(osd_targets(ann, 1200).values <= vad_targets(ann, 1200).values)


def test_overlap_augment_silent_b_keeps_a_targets():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((8, 32000))
    ann_a = AnnotationSet([("A", 0.2, 1.5)], duration=2.0)
    mixed, merged, _ = overlap_augment(a, ann_a, np.zeros_like(a), AnnotationSet([], duration=2.0), rng)
    assert np.array_equal(mixed, a)
    assert np.array_equal(osd_targets(merged, 200).values, osd_targets(ann_a, 200).values)


def test_overlap_augment_fully_voiced_gives_all_overlap():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, 8, 32000))
    full_a = AnnotationSet([("spk", 0.0, 2.0)])
    full_b = AnnotationSet([("spk", 0.0, 2.0)])
    _, merged, snr = overlap_augment(a, full_a, b, full_b, rng)
    assert osd_targets(merged, 200).values.all()
    assert 0.0 <= snr <= 10.0


def test_overlap_augment_snr_and_determinism():
    a, b = np.random.default_rng(2).standard_normal((2, 4, 16000))
    ann = AnnotationSet([("x", 0.0, 1.0)])
    m1, _, snr1 = overlap_augment(a, ann, b, ann, np.random.default_rng(5))
    m2, _, snr2 = overlap_augment(a, ann, b, ann, np.random.default_rng(5))
    assert snr1 == snr2 and np.array_equal(m1, m2)
    added = m1 - a
    measured = 10 * np.log10(np.mean(a ** 2) / np.mean(added ** 2))
    assert measured == pytest.approx(snr1, abs=1e-9)


def test_overlap_augment_shape_mismatch():
    with pytest.raises(ValueError):
        overlap_augment(np.zeros((8, 100)), AnnotationSet([]), np.zeros((4, 100)), AnnotationSet([]),
                        np.random.default_rng(0))
