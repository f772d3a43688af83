"""File formats: multichannel WAV, RTTM, SEGF feature files and SEGM1 checkpoints.

SEGF layout (little-endian)::

    b"SEGF" | u32 version=1 | u32 F | u64 T | T*F float32, one row per frame

SEGM1 layout (little-endian)::

    b"SEGM1" | u32 n | n bytes of UTF-8 JSON (network config + metadata)
    | u32 tensor count | per tensor: u32 name length, name, u32 rank,
      rank * u64 dims, float32 values in C order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .labeling import AnnotationSet, Segment

SEGF_MAGIC = b"SEGF"
SEGF_VERSION = 1
SEGM_MAGIC = b"SEGM1"


class DataError(Exception):
    """Malformed or inconsistent input data."""


# WAV --------------------------------------------------------------------

def read_wav(path, expected_rate: int = 16000) -> np.ndarray:
    """Samples as float64 (channels, samples); PCM16 is scaled to [-1, 1)."""
    rate, data = wavfile.read(str(path))
    if rate != expected_rate:
        raise DataError(f"{path}: sample rate {rate} Hz, expected {expected_rate} Hz (no resampling)")
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    elif data.dtype.kind == "f":
        data = data.astype(np.float64)
    else:
        raise DataError(f"{path}: unsupported sample format {data.dtype}")
    return np.atleast_2d(data.T) if data.ndim == 2 else data[None, :]


def write_wav(path, samples: np.ndarray, sample_rate: int = 16000, pcm16: bool = False) -> None:
    samples = np.atleast_2d(np.asarray(samples))
    if pcm16:
        data = np.clip(np.round(samples * 32768.0), -32768, 32767).astype(np.int16)
    else:
        data = samples.astype(np.float32)
    wavfile.write(str(path), sample_rate, data.T)


# RTTM -------------------------------------------------------------------

def parse_rttm(text: str, source: str = "<rttm>") -> dict:
    """Map recording id -> AnnotationSet from RTTM ``SPEAKER`` lines."""
    entries: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        fields = line.split()
        if not fields or fields[0].startswith("#"):
            continue
        if fields[0] != "SPEAKER":
            continue
        if len(fields) < 8:
            raise DataError(f"{source}:{lineno}: expected at least 8 fields, got {len(fields)}")
        try:
            start, dur = float(fields[3]), float(fields[4])
        except ValueError:
            raise DataError(f"{source}:{lineno}: bad onset/duration {fields[3]!r} {fields[4]!r}") from None
        if start < 0 or dur <= 0:
            raise DataError(f"{source}:{lineno}: negative onset or non-positive duration")
        entries.setdefault(fields[1], []).append(Segment(fields[7], start, start + dur))
    return {rec: AnnotationSet(segs, rec) for rec, segs in entries.items()}


def read_rttm(path) -> dict:
    return parse_rttm(Path(path).read_text(), str(path))


def format_rttm(annotations: AnnotationSet) -> str:
    lines = [
        f"SPEAKER {annotations.recording_id} 1 {e.start:.3f} {e.end - e.start:.3f} <NA> <NA> {e.speaker} <NA> <NA>"
        for e in annotations
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def write_rttm(path, annotations: AnnotationSet) -> None:
    Path(path).write_text(format_rttm(annotations))


# SEGF feature files -----------------------------------------------------

def write_features(path, values: np.ndarray) -> None:
    """Write an (F, T) feature matrix."""
    values = np.asarray(values, dtype=np.float32)
    f, t = values.shape
    with open(path, "wb") as fh:
        fh.write(SEGF_MAGIC + struct.pack("<IIQ", SEGF_VERSION, f, t))
        fh.write(np.ascontiguousarray(values.T).astype("<f4").tobytes())


def read_features(path) -> np.ndarray:
    """Read a feature file back as an (F, T) float32 matrix."""
    raw = Path(path).read_bytes()
    if raw[:4] != SEGF_MAGIC:
        raise DataError(f"{path}: not a SEGF feature file")
    version, f, t = struct.unpack_from("<IIQ", raw, 4)
    if version != SEGF_VERSION:
        raise DataError(f"{path}: unsupported SEGF version {version}")
    payload = raw[20:]
    if len(payload) != 4 * f * t:
        raise DataError(f"{path}: header says {f}x{t} values but payload has {len(payload) // 4}")
    return np.frombuffer(payload, dtype="<f4").reshape(t, f).T.astype(np.float32)


# SEGM1 checkpoints ------------------------------------------------------

def write_checkpoint(path, meta: dict, tensors: dict) -> None:
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(SEGM_MAGIC + struct.pack("<I", len(blob)) + blob)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            arr = np.asarray(arr, dtype="<f4")
            key = name.encode("utf-8")
            fh.write(struct.pack("<I", len(key)) + key + struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(np.ascontiguousarray(arr).tobytes())


def read_checkpoint(path):
    """Return ``(meta, tensors)``."""
    raw = Path(path).read_bytes()
    if raw[:5] != SEGM_MAGIC:
        raise DataError(f"{path}: not a SEGM1 checkpoint")
    pos = 5
    (n,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    meta = json.loads(raw[pos:pos + n].decode("utf-8"))
    pos += n
    (count,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    tensors = {}
    for _ in range(count):
        (klen,) = struct.unpack_from("<I", raw, pos)
        pos += 4
        name = raw[pos:pos + klen].decode("utf-8")
        pos += klen
        (rank,) = struct.unpack_from("<I", raw, pos)
        pos += 4
        shape = struct.unpack_from(f"<{rank}Q", raw, pos)
        pos += 8 * rank
        size = int(np.prod(shape)) if rank else 1
        tensors[name] = np.frombuffer(raw, dtype="<f4", count=size, offset=pos).reshape(shape).copy()
        pos += 4 * size
    if pos != len(raw):
        raise DataError(f"{path}: {len(raw) - pos} trailing bytes")
    return meta, tensors
