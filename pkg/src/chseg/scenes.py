"""Synthetic scene families used by the end-to-end benchmarks and demos."""

from __future__ import annotations

import numpy as np

from .array_sim import ArrayGeometry, ScenarioSpec, SourceSpec, gen_scenario

TWO_PI = 2.0 * np.pi


def alternating_turns(seed: int, duration: float = 20.0, separation_deg: float = 60.0,
                      turn_range=(1.5, 4.0), noise_snr: float | None = 20.0,
                      geometry: ArrayGeometry | None = None):
    """Two equal-level white-noise talkers taking back-to-back turns.

    The talkers are spectrally identical, so only their direction tells the
    turns apart. Returns ``(waveform, annotations, spec)``.
    """
    rng = np.random.default_rng(seed)
    az_a = rng.uniform(0, TWO_PI)
    az_b = (az_a + np.deg2rad(separation_deg) * rng.choice([-1, 1])) % TWO_PI
    intervals = {"A": [], "B": []}
    t, who = 0.0, rng.choice(["A", "B"])
    while t < duration:
        end = min(duration, t + rng.uniform(*turn_range))
        if duration - end < turn_range[0]:
            end = duration
        intervals[who].append((round(t, 2), round(end, 2)))
        t, who = end, ("B" if who == "A" else "A")
    spec = ScenarioSpec(
        sources=[SourceSpec("A", az_a, "white_noise", intervals["A"]),
                 SourceSpec("B", az_b, "white_noise", intervals["B"])],
        duration=duration, noise_snr=noise_snr, seed=seed, recording_id=f"turns{seed:04d}")
    wave, ann = gen_scenario(spec, geometry)
    return wave, ann, spec


def overlapping_talkers(seed: int, duration: float = 20.0, n_speakers: int = 3,
                        noise_snr: float | None = 10.0, overlap_prob: float = 0.5,
                        geometry: ArrayGeometry | None = None):
    """Speech-like talkers with pauses and controlled overlap regions.

    Consecutive turns either leave a short pause or overlap by 0.5-1.5 s.
    Talkers sit at well-separated random azimuths.
    """
    rng = np.random.default_rng(seed)
    base = rng.uniform(0, TWO_PI)
    azimuths = [(base + k * TWO_PI / n_speakers + rng.uniform(-0.2, 0.2)) % TWO_PI
                for k in range(n_speakers)]
    names = [chr(ord("A") + k) for k in range(n_speakers)]
    intervals = {n: [] for n in names}
    last_end = {n: 0.0 for n in names}
    t = rng.uniform(0.0, 1.0)
    prev = None
    while t < duration - 1.0:
        choices = [n for n in names if n != prev and last_end[n] <= t]
        if not choices:
            t = min(last_end.values())
            continue
        who = choices[int(rng.integers(len(choices)))]
        end = min(duration, t + rng.uniform(1.5, 3.5))
        intervals[who].append((round(t, 2), round(end, 2)))
        last_end[who] = round(end, 2)
        prev = who
        if rng.random() < overlap_prob:
            t = end - rng.uniform(0.5, 1.2)
        else:
            t = end + rng.uniform(0.1, 0.8)
        t = round(t, 2)
    sources = [SourceSpec(n, az, "speech_like", intervals[n], level_db=float(rng.uniform(-3, 3)))
               for n, az in zip(names, azimuths)]
    spec = ScenarioSpec(sources=sources, duration=duration, noise_snr=noise_snr, seed=seed,
                        recording_id=f"overlap{seed:04d}")
    wave, ann = gen_scenario(spec, geometry)
    return wave, ann, spec
