"""Command-line entry point: simulate, extract, train, evaluate.

Exit codes: 0 success, 1 usage error, 2 data error.

Training config (TOML)::

    seed = 0
    recipe = "mfcc+ch_doa"
    train = "data/train"        # directory of <rec>.wav + RTTM files
    dev = "data/dev"            # optional; enables early stopping and threshold tuning
    checkpoint = "scd.segm"
    log = "scd_log.json"        # optional

    [array]                     # geometry of the recordings, physical mic order
    mic_count = 8
    radius = 0.1
    speed_of_sound = 343.0

    [model]
    bottleneck_dim = 64
    hidden_dim = 80

    [training]
    epochs = 20
    batch_size = 64
    lr = 0.001
    crop_frames = 200
    overlap_prob = 0.5
    mask_prob = 0.5
    patience = 10
    steps_per_epoch = 0         # 0 means one pass over the training frames

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io
from .array_sim import ArrayGeometry, MultichannelWaveform, ScenarioSpec, deactivate_channels, gen_scenario
from .features import FeatureRecipe

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("chseg")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# helpers -----------------------------------------------------------------

def _geometry(d: dict | None, n_channels: int) -> ArrayGeometry:
    d = dict(d or {})
    d.setdefault("mic_count", n_channels)
    try:
        geom = ArrayGeometry.from_dict(d)
    except ValueError as exc:
        raise io.DataError(f"bad array geometry: {exc}") from None
    if geom.n_active != n_channels:
        raise io.DataError(f"recording has {n_channels} channels but the array has {geom.n_active} active mics")
    return geom


def load_waveform(path, geometry: dict | None = None) -> MultichannelWaveform:
    samples = io.read_wav(path)
    return MultichannelWaveform(samples, 16000, _geometry(geometry, samples.shape[0]))


def load_corpus(directory, geometry: dict | None = None):
    """``[(rec_id, waveform, annotations)]`` for every WAV in ``directory``.

    Annotations come from all RTTM files of the directory; a WAV without any
    RTTM line is treated as containing no speech.
    """
    from .labeling import AnnotationSet

    directory = Path(directory)
    if not directory.is_dir():
        raise io.DataError(f"{directory}: not a directory")
    annotations = {}
    for rttm in sorted(directory.glob("*.rttm")):
        annotations.update(io.read_rttm(rttm))
    out = []
    for wav in sorted(directory.glob("*.wav")):
        wave = load_waveform(wav, geometry)
        ann = annotations.get(wav.stem, AnnotationSet([], wav.stem))
        if ann.duration > wave.duration + 0.01:
            raise io.DataError(f"{wav.stem}: annotations end at {ann.duration:.2f}s, audio is {wave.duration:.2f}s")
        out.append((wav.stem, wave, AnnotationSet(ann.entries, wav.stem, wave.duration)))
    if not out:
        raise io.DataError(f"{directory}: no .wav files")
    return out


def _parse_indices(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad channel list {text!r}") from None


def _recipe(text: str) -> FeatureRecipe:
    try:
        return FeatureRecipe.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _read_structured(path: Path) -> dict:
    text = path.read_text()
    try:
        return json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise io.DataError(f"{path}: {exc}") from None


# commands ----------------------------------------------------------------

def cmd_simulate(args) -> int:
    """Render every scenario of a JSON/TOML spec file to WAV + RTTM."""
    cfg = _read_structured(Path(args.spec))
    scenes = cfg.get("scenarios", [cfg])
    geometry = ArrayGeometry.from_dict(cfg.get("array", {}))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for k, scene in enumerate(scenes):
        try:
            spec = ScenarioSpec.from_dict({"recording_id": f"scene{k:03d}", **scene})
            wave, ann = gen_scenario(spec, geometry)
        except (KeyError, TypeError, ValueError) as exc:
            raise io.DataError(f"{args.spec}: scenario {k}: {exc}") from None
        io.write_wav(out / f"{spec.recording_id}.wav", wave.samples, spec.sample_rate, pcm16=args.pcm16)
        io.write_rttm(out / f"{spec.recording_id}.rttm", ann)
        manifest.append(spec.to_dict())
        log.info("wrote %s (%.1f s, %d segments)", spec.recording_id, spec.duration, len(ann))
    (out / "manifest.json").write_text(json.dumps({"array": geometry.to_dict(), "scenarios": manifest}, indent=2))
    return EXIT_OK


def cmd_extract(args) -> int:
    recipe = _recipe(args.features)
    wave = load_waveform(args.wav, {"radius": args.radius})
    if args.drop_channels:
        drop = set(_parse_indices(args.drop_channels))
        bad = [i for i in drop if not 0 <= i < wave.geometry.mic_count]
        if bad:
            raise UsageError(f"--drop-channels: no such microphone {bad[0]}")
        keep = [i for i in range(wave.geometry.mic_count) if i not in drop]
        if not keep:
            raise UsageError("--drop-channels removes every microphone")
        # acoustic features then read the lowest-index surviving microphone
        wave = deactivate_channels(wave, keep)
    try:
        feats = recipe.extract(wave)
    except ValueError as exc:
        raise io.DataError(str(exc)) from None
    io.write_features(args.out, feats.values)
    log.info("wrote %s: %d x %d", args.out, *feats.values.shape)
    return EXIT_OK


def _train_config(section: dict):
    from .training import TrainConfig

    known = set(TrainConfig.__dataclass_fields__) - {"mask", "snr_range"}
    unknown = set(section) - known
    if unknown:
        raise UsageError(f"unknown [training] keys: {', '.join(sorted(unknown))}")
    cfg = TrainConfig(**section)
    if not cfg.steps_per_epoch:
        cfg.steps_per_epoch = None
    return cfg


def cmd_train(args) -> int:
    from .pipeline import SegmentationModel
    from .training import Recording, SegmentDataset, train

    config_path = Path(args.config)
    cfg = _read_structured(config_path)
    base = config_path.parent

    def path(key, required=True):
        if key not in cfg:
            if required:
                raise UsageError(f"{config_path}: missing key {key!r}")
            return None
        return base / cfg[key]

    recipe = _recipe(cfg.get("recipe", "mfcc"))
    train_cfg = _train_config(dict(cfg.get("training", {})))
    for key, value in cfg.get("model", {}).items():
        if key not in ("bottleneck_dim", "hidden_dim"):
            raise UsageError(f"unknown [model] key {key!r}")
        setattr(train_cfg, key, int(value))
    geometry = cfg.get("array")
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))

    train_set = SegmentDataset([Recording(w, a) for _, w, a in load_corpus(path("train"), geometry)], recipe)
    dev_dir = path("dev", required=False)
    dev_set = None
    if dev_dir is not None:
        dev_set = SegmentDataset([Recording(w, a) for _, w, a in load_corpus(dev_dir, geometry)], recipe,
                                 train_set.normalizer)
    net, history = train(train_set, args.task, train_cfg, seed=seed, dev=dev_set)
    model = SegmentationModel(net, recipe, train_set.normalizer, args.task)
    if dev_set is not None:
        model.tune([r.features for r in dev_set.recordings], [r.annotations for r in dev_set.recordings])
    model.save(path("checkpoint"))
    log_path = path("log", required=False)
    if log_path is not None:
        log_path.write_text(json.dumps({"task": args.task, "recipe": str(recipe), "seed": seed,
                                        "threshold": model.threshold, "best_epoch": history.best_epoch,
                                        "epochs": history.epochs}, indent=2))
    print(f"saved {path('checkpoint')} (threshold {model.threshold:.2f})")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .pipeline import SegmentationModel

    try:
        model = SegmentationModel.load(args.model)
    except (OSError, KeyError, ValueError) as exc:
        raise io.DataError(f"{args.model}: cannot load checkpoint ({exc})") from None
    if model.task != args.task:
        raise io.DataError(f"{args.model} was trained for {model.task}, not {args.task}")
    geometry = {"radius": args.radius}

    def features_of(corpus):
        out = {}
        for rec, wave, _ in corpus:
            feats = model.recipe.extract(wave).values
            if feats.shape[0] != model.net.config.input_dim:
                raise io.DataError(f"{rec}: {feats.shape[0]} features, checkpoint expects "
                                   f"{model.net.config.input_dim}")
            out[rec] = feats
        return out

    if args.dev:
        dev = load_corpus(args.dev, geometry)
        feats = features_of(dev)
        model.tune(list(feats.values()), [a for _, _, a in dev])
    test = load_corpus(args.data, geometry)
    report = model.evaluate(features_of(test), {rec: a for rec, _, a in test})
    sys.stdout.write(report.to_json() + "\n" if args.format == "json" else report.to_tsv())
    if args.report:
        Path(args.report).write_text(report.to_json())
    return EXIT_OK


# entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chseg", description="Multichannel VAD / OSD / SCD toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="render synthetic scenes to WAV + RTTM")
    s.add_argument("--spec", required=True, help="JSON or TOML scenario file")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--pcm16", action="store_true", help="write 16-bit PCM instead of 32-bit float")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("extract", help="compute a feature file from a multichannel WAV")
    e.add_argument("--wav", required=True)
    e.add_argument("--features", required=True, help="recipe such as mfcc+ch_doa")
    e.add_argument("--out", required=True)
    e.add_argument("--drop-channels", help="comma-separated 0-based microphones to deactivate")
    e.add_argument("--radius", type=float, default=0.1, help="array radius in metres")
    e.set_defaults(func=cmd_extract)

    t = sub.add_parser("train", help="train a model from a TOML config")
    t.add_argument("--task", required=True, choices=["vad", "osd", "scd"])
    t.add_argument("--config", required=True)
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_train)

    v = sub.add_parser("evaluate", help="score a checkpoint on a WAV + RTTM directory")
    v.add_argument("--task", required=True, choices=["vad", "osd", "scd"])
    v.add_argument("--model", required=True)
    v.add_argument("--data", required=True)
    v.add_argument("--dev", help="retune the threshold on this directory first")
    v.add_argument("--format", choices=["tsv", "json"], default="tsv")
    v.add_argument("--report", help="also write the JSON report here")
    v.add_argument("--radius", type=float, default=0.1)
    v.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"chseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (io.DataError, OSError, ValueError) as exc:
        print(f"chseg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
