"""Paired image/audio datasets: manifest loading, WAV I/O, synthetic data.

The manifest is JSON Lines with fields sample_id, image, audio, label
(paths relative to the manifest). A classes.txt beside the manifest fixes
the class-index order; otherwise sorted unique labels are used.

The synthetic generator writes desk-scale WAV/PNG pairs whose class
signatures can be made deliberately confusable across modalities: with
probability `ambiguity` a sample flips a fair coin between its own
signatures and a borrowed pair (audio traits of the next class, image
traits of the class after that, cyclically). Either modality alone then
faces a 50/50 signature collision, while the signature pair still decodes
the true class uniquely, so fusion stays informative.
"""

from __future__ import annotations

import colorsys
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.io import wavfile

from .audio_features import AudioClip, MfccConfig, clip_features
from .image_branch import preprocess_image
from .utils import parallel_map

__all__ = [
    "SampleRecord",
    "PairedDataset",
    "SynthConfig",
    "read_wav_mono",
    "write_wav_pcm16",
    "load_manifest_dataset",
    "scan_class_directories",
    "generate_synthetic",
    "mfcc_matrix",
    "write_features_csv",
]


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    image_path: Path
    audio_path: Path
    label: str

    @property
    def source_id(self) -> str:
        return self.sample_id.rsplit(":", 1)[0]


@dataclass
class PairedDataset:
    records: list
    images: np.ndarray  # (N, H, W, 3) in [0, 1]
    audio: np.ndarray  # (N, sample_rate) in [-1, 1]
    labels: np.ndarray  # (N,) class indices
    class_names: list
    sample_rate: int

    def __len__(self):
        return len(self.records)

    @property
    def sample_ids(self):
        return [r.sample_id for r in self.records]

    @property
    def source_ids(self):
        return sorted({r.source_id for r in self.records})


def read_wav_mono(path):
    """(sample_rate, float64 samples in [-1, 1]); multi-channel is averaged."""
    rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise ValueError(
            f"unsupported WAV sample format {data.dtype} in {path}; "
            "expected 16-bit PCM or 32-bit float"
        )
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return int(rate), samples


def write_wav_pcm16(path, sample_rate: int, samples):
    samples = np.asarray(samples, dtype=np.float64)
    quantized = np.clip(np.round(samples * 32768.0), -32768, 32767)
    wavfile.write(path, sample_rate, quantized.astype(np.int16))


def _parse_manifest(manifest_path):
    manifest_path = Path(manifest_path)
    records = []
    seen = set()
    with open(manifest_path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            row = json.loads(line)
            sid = row["sample_id"]
            if sid in seen:
                raise ValueError(f"duplicate sample_id {sid!r} at manifest line {line_no}")
            seen.add(sid)
            records.append(
                SampleRecord(
                    sample_id=sid,
                    image_path=manifest_path.parent / row["image"],
                    audio_path=manifest_path.parent / row["audio"],
                    label=str(row["label"]),
                )
            )
    return records


def _class_order(records, manifest_path, classes_path, class_names=None):
    if class_names is not None:
        names = list(class_names)
    else:
        if classes_path is None:
            candidate = Path(manifest_path).parent / "classes.txt"
            classes_path = candidate if candidate.exists() else None
        if classes_path is not None:
            names = [ln.strip() for ln in Path(classes_path).read_text().splitlines() if ln.strip()]
        else:
            names = sorted({r.label for r in records})
    index = {name: i for i, name in enumerate(names)}
    for r in records:
        if r.label not in index:
            raise ValueError(f"label {r.label!r} of {r.sample_id} missing from class list")
    return names, index


def load_manifest_dataset(
    manifest_path,
    sample_rate: int = 16000,
    image_size: int = 128,
    classes_path=None,
    class_names=None,
) -> PairedDataset:
    """Loads every manifest row: image preprocessed, audio validated as 1 s mono.

    Class-index order comes from ``class_names`` if given, else a
    classes.txt beside the manifest, else sorted unique labels.
    """
    records = _parse_manifest(manifest_path)
    if not records:
        return PairedDataset(
            records=[],
            images=np.zeros((0, image_size, image_size, 3)),
            audio=np.zeros((0, sample_rate)),
            labels=np.zeros(0, dtype=int),
            class_names=list(class_names or []),
            sample_rate=sample_rate,
        )
    class_names, class_index = _class_order(records, manifest_path, classes_path, class_names)
    images, clips, labels = [], [], []
    for rec in records:
        for path in (rec.image_path, rec.audio_path):
            if not Path(path).exists():
                raise FileNotFoundError(f"sample {rec.sample_id}: missing file {path}")
        with Image.open(rec.image_path) as img:
            pixels = np.asarray(img.convert("RGB"))
        images.append(preprocess_image(pixels, image_size))
        rate, samples = read_wav_mono(rec.audio_path)
        if rate != sample_rate:
            raise ValueError(
                f"sample {rec.sample_id}: sample rate {rate} != expected {sample_rate}"
            )
        if len(samples) != sample_rate:
            raise ValueError(
                f"sample {rec.sample_id}: {len(samples)} samples, expected exactly {sample_rate}"
            )
        clips.append(samples)
        labels.append(class_index[rec.label])
    return PairedDataset(
        records=records,
        images=np.stack(images),
        audio=np.stack(clips),
        labels=np.array(labels, dtype=int),
        class_names=class_names,
        sample_rate=sample_rate,
    )


def scan_class_directories(root) -> list:
    """Synthesizes manifest rows from a folder-per-class layout.

    Pairs <class>/<stem>.png with <class>/<stem>.wav; stems missing either
    file are rejected.
    """
    root = Path(root)
    rows = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        stems = {}
        for path in sorted(class_dir.iterdir()):
            if path.suffix.lower() in (".png", ".jpg", ".jpeg", ".wav"):
                stems.setdefault(path.stem, []).append(path)
        for stem, paths in sorted(stems.items()):
            images = [p for p in paths if p.suffix.lower() != ".wav"]
            audios = [p for p in paths if p.suffix.lower() == ".wav"]
            if not images or not audios:
                raise ValueError(f"{class_dir.name}/{stem}: needs both an image and a wav")
            rows.append(
                {
                    "sample_id": f"{class_dir.name}-{stem}:0",
                    "image": str(images[0].relative_to(root)),
                    "audio": str(audios[0].relative_to(root)),
                    "label": class_dir.name,
                }
            )
    return rows


@dataclass(frozen=True)
class SynthConfig:
    num_classes: int = 3
    samples_per_class: int = 100
    ambiguity: float = 0.0  # probability a sample's signatures are coin-flipped
    seed: int = 0
    sample_rate: int = 16000
    image_size: int = 128

    def __post_init__(self):
        if not 0.0 <= self.ambiguity <= 1.0:
            raise ValueError("ambiguity must lie in [0, 1]")
        minimum = 3 if self.ambiguity > 0 else 2
        if self.num_classes < minimum:
            raise ValueError(
                f"need at least {minimum} classes (cyclic confusable pairs require 3)"
            )
        if self.samples_per_class < 1:
            raise ValueError("samples_per_class must be >= 1")


def _class_tone_frequencies(cls: int):
    base = 300.0 + 260.0 * cls
    return base, base * 1.5


def _synth_audio(cls: int, rng, cfg: SynthConfig) -> np.ndarray:
    f1, f2 = _class_tone_frequencies(cls)
    t = np.arange(cfg.sample_rate) / cfg.sample_rate
    phase1, phase2 = rng.uniform(0, 2 * np.pi, size=2)
    wave = 0.35 * np.sin(2 * np.pi * f1 * t + phase1) + 0.25 * np.sin(
        2 * np.pi * f2 * t + phase2
    )
    wave += rng.normal(scale=0.02, size=len(t))
    return np.clip(wave, -1.0, 1.0)


def _synth_image(cls: int, rng, cfg: SynthConfig) -> np.ndarray:
    size = cfg.image_size
    hue = cls / cfg.num_classes
    base = np.array(colorsys.hsv_to_rgb(hue, 0.65, 0.75))
    img = np.tile(base, (size, size, 1))
    period = 8.0 + 4.0 * cls
    wave = 0.15 * np.sin(2 * np.pi * np.arange(size) / period)
    stripes = wave[None, :] if cls % 2 == 0 else wave[:, None]
    img = img + stripes[:, :, None]
    img += rng.normal(scale=0.03, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def generate_synthetic(cfg: SynthConfig, out_dir) -> Path:
    """Writes paired WAV+PNG files and a manifest; returns the manifest path.

    Byte-identical for identical configs: every sample draws from its own
    generator seeded by (seed, class, index).
    """
    out_dir = Path(out_dir)
    audio_dir = out_dir / "audio"
    image_dir = out_dir / "images"
    audio_dir.mkdir(parents=True, exist_ok=True)
    image_dir.mkdir(parents=True, exist_ok=True)
    labels = [f"class{c}" for c in range(cfg.num_classes)]
    rows = []
    for cls in range(cfg.num_classes):
        for i in range(cfg.samples_per_class):
            rng = np.random.default_rng([cfg.seed, cls, i])
            ambiguous, coin = rng.random(), rng.random()
            audio_cls, image_cls = cls, cls
            if ambiguous < cfg.ambiguity and coin < 0.5:
                audio_cls = (cls + 1) % cfg.num_classes
                image_cls = (cls + 2) % cfg.num_classes
            wav_name = f"{labels[cls]}_{i:04d}.wav"
            png_name = f"{labels[cls]}_{i:04d}.png"
            write_wav_pcm16(
                audio_dir / wav_name, cfg.sample_rate, _synth_audio(audio_cls, rng, cfg)
            )
            pixels = (_synth_image(image_cls, rng, cfg) * 255.0).round().astype(np.uint8)
            Image.fromarray(pixels).save(image_dir / png_name)
            rows.append(
                {
                    # seed is part of the source id so differently seeded
                    # synthetic sets count as disjoint sources for holdout
                    "sample_id": f"synth{cfg.seed}-{labels[cls]}:{i}",
                    "image": f"images/{png_name}",
                    "audio": f"audio/{wav_name}",
                    "label": labels[cls],
                }
            )
    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    (out_dir / "classes.txt").write_text("".join(label + "\n" for label in labels))
    return manifest_path


def mfcc_matrix(dataset: PairedDataset, cfg: MfccConfig = MfccConfig(), threads: int = 1) -> np.ndarray:
    """Clip feature rows for every sample, in dataset order."""
    rows = parallel_map(
        lambda samples: clip_features(AudioClip(samples, dataset.sample_rate), cfg),
        dataset.audio,
        threads,
    )
    return np.stack(rows)


def write_features_csv(features, labels, class_names, path):
    """One row per clip: the feature values followed by the label name."""
    features = np.asarray(features)
    with open(path, "w") as fh:
        header = [f"mfcc{i}" for i in range(features.shape[1])] + ["label"]
        fh.write(",".join(header) + "\n")
        for row, label in zip(features, labels):
            name = class_names[int(label)]
            fh.write(",".join(repr(float(v)) for v in row) + f",{name}\n")
