"""Slice a source video into per-second (center frame, 1 s audio) pairs.

For each second s the frame nearest t = s + 0.5 is center-cropped to a
square, resized to 128x128 and saved as PNG; the audio of [s, s+1) is
downmixed to mono, resampled to 16 kHz and saved as PCM16 WAV with exactly
16000 samples. sample_id is "<video basename>:<s>".
"""

from __future__ import annotations

import json
import os
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .media import MediaError, pick_decoder


@dataclass(frozen=True)
class SourceVideo:
    path: Path
    label: str
    duration_seconds: int

    @classmethod
    def probe(cls, path, label, decoder=None) -> "SourceVideo":
        decoder = decoder or pick_decoder(path)
        info = decoder.probe(path)
        duration = int(info.duration_seconds)
        if duration < 1:
            raise MediaError(f"{path} is shorter than one second")
        return cls(path=Path(path), label=label, duration_seconds=duration)


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    image: str  # path relative to the output directory
    audio: str
    label: str


def write_wav_pcm16(path, sample_rate: int, samples):
    """Standalone PCM16 WAV writer (stdlib only)."""
    samples = np.asarray(samples, dtype=np.float64)
    quantized = np.clip(np.round(samples * 32768.0), -32768, 32767).astype("<i2")
    payload = quantized.tobytes()
    header = (
        b"RIFF"
        + struct.pack("<I", 36 + len(payload))
        + b"WAVEfmt "
        + struct.pack("<IHHIIHH", 16, 1, 1, sample_rate, sample_rate * 2, 2, 16)
        + b"data"
        + struct.pack("<I", len(payload))
    )
    with open(path, "wb") as fh:
        fh.write(header + payload)


def _prepare_image(frame: np.ndarray, size: int) -> Image.Image:
    height, width = frame.shape[:2]
    side = min(height, width)
    top = (height - side) // 2
    left = (width - side) // 2
    img = Image.fromarray(frame[top : top + side, left : left + side])
    if img.size != (size, size):
        img = img.resize((size, size), Image.BILINEAR)
    return img


def slice_video(
    src: SourceVideo,
    out_dir,
    start: int = 0,
    end: int | None = None,
    *,
    image_size: int = 128,
    sample_rate: int = 16000,
    decoder=None,
) -> list:
    """Extracts one (PNG, WAV) pair per second in [start, end).

    A final second whose audio stream comes up short is skipped with a
    warning rather than padded.
    """
    decoder = decoder or pick_decoder(src.path)
    end = src.duration_seconds if end is None else end
    if not 0 <= start < end <= src.duration_seconds:
        raise ValueError(
            f"invalid range [{start}, {end}) for a {src.duration_seconds}s video"
        )
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)
    basename = Path(src.path).stem
    records = []
    for second in range(start, end):
        audio = decoder.audio_segment(src.path, second, second + 1, sample_rate)
        if audio is None:
            warnings.warn(f"{basename}: second {second} has short audio, skipped")
            continue
        frame = decoder.frame_at(src.path, second + 0.5)
        image_rel = f"images/{basename}_{second:05d}.png"
        audio_rel = f"audio/{basename}_{second:05d}.wav"
        _prepare_image(frame, image_size).save(out_dir / image_rel)
        write_wav_pcm16(out_dir / audio_rel, sample_rate, audio)
        records.append(
            SampleRecord(
                sample_id=f"{basename}:{second}",
                image=image_rel,
                audio=audio_rel,
                label=src.label,
            )
        )
    return records


def build_manifest(records, out_path, tool_version: str = "unknown"):
    """Writes JSON Lines atomically; duplicate sample ids abort before writing."""
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    seen = {}
    duplicates = []
    for rec in records:
        if rec.sample_id in seen:
            duplicates.append(rec.sample_id)
        seen[rec.sample_id] = rec
    if duplicates:
        raise ValueError(f"duplicate sample ids: {sorted(set(duplicates))}")
    out_path = Path(out_path)
    tmp_path = out_path.with_suffix(out_path.suffix + ".tmp")
    with open(tmp_path, "w") as fh:
        fh.write(f"# ingest tool: {tool_version}\n")
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "sample_id": rec.sample_id,
                        "image": rec.image,
                        "audio": rec.audio,
                        "label": rec.label,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    os.replace(tmp_path, out_path)
    return out_path


def read_manifest_records(path) -> list:
    """Existing manifest rows, so repeated ingest runs can accumulate."""
    records = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        row = json.loads(line)
        records.append(
            SampleRecord(
                sample_id=row["sample_id"],
                image=row["image"],
                audio=row["audio"],
                label=row["label"],
            )
        )
    return records
