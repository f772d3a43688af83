"""
The command-line workflow
=========================

Simulate a few scenes, extract features, train a tiny VAD model and score
it, all through ``chseg.cli.main`` (the same entry point as the ``chseg``
command). Files go to a temporary directory.
"""

import json
import tempfile
from pathlib import Path

from chseg import io
from chseg.cli import main

work = Path(tempfile.mkdtemp(prefix="chseg-demo-"))

scenes = {"scenarios": [
    {"recording_id": f"rec{k}", "duration": 6.0, "noise_snr": 15, "seed": k,
     "sources": [{"source_id": "A", "azimuth_deg": 20 + 40 * k, "signal_kind": "speech_like",
                  "active_intervals": [[0.5, 2.5]]},
                 {"source_id": "B", "azimuth_deg": 200, "signal_kind": "speech_like",
                  "active_intervals": [[3.0, 5.5]]}]}
    for k in range(4)]}
(work / "scenes.json").write_text(json.dumps(scenes))
main(["simulate", "--spec", str(work / "scenes.json"), "--out", str(work / "data")])
print(sorted(p.name for p in (work / "data").iterdir()))

###############################################################################
# Features for one file, with and without four microphones.

main(["extract", "--wav", str(work / "data/rec0.wav"), "--features", "mfcc+ch_doa",
      "--out", str(work / "rec0.segf")])
main(["extract", "--wav", str(work / "data/rec0.wav"), "--features", "mfcc+ch_doa",
      "--out", str(work / "rec0_4mic.segf"), "--drop-channels", "1,3,5,7"])
print("features", io.read_features(work / "rec0.segf").shape,
      io.read_features(work / "rec0_4mic.segf").shape)

###############################################################################
# Train and evaluate. Data are reused as dev and test set to keep it short.

(work / "vad.toml").write_text("""
recipe = "mfcc+ch_doa"
train = "data"
dev = "data"
checkpoint = "vad.segm"

[training]
epochs = 3
batch_size = 16
steps_per_epoch = 4
""")
main(["train", "--task", "vad", "--config", str(work / "vad.toml")])
main(["evaluate", "--task", "vad", "--model", str(work / "vad.segm"), "--data", str(work / "data")])
