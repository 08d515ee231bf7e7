"""Run configuration: defaults <- config file <- command-line flags.

The config file is flat ``key = value`` text with ``#`` comments. Every
subcommand writes its fully resolved configuration next to its outputs so
a run can be reproduced from the directory alone.
"""

from __future__ import annotations

from pathlib import Path

__all__ = ["DEFAULTS", "load_config_file", "resolve_config", "write_config", "parse_int_list"]

DEFAULTS = {
    # global
    "seed": 0,
    "threads": 1,
    "folds": 10,
    # mfcc
    "sample_rate": 16000,
    "window_seconds": 0.25,
    "windows_per_clip": 8,
    "coefficients_per_window": 13,
    "mel_filters": 26,
    "fft_size": 4096,
    # images / backbone
    "image_size": 128,
    "backbone_blocks": "8x5x2,16x3x2,32x3x2",
    "backbone_epochs": 3,
    "backbone_batch": 16,
    "backbone_lr": 0.01,
    # synthetic data
    "classes": 3,
    "per_class": 100,
    "ambiguity": 0.0,
    # audio branch / evolution
    "audio_hidden": "32",
    "audio_epochs": 60,
    "audio_lr": 0.02,
    "batch_size": 32,
    "population": 20,
    "generations": 10,
    "runs": 5,
    "mutation_rate": 0.3,
    "crossover_rate": 0.7,
    "elitism": 1,
    "min_width": 8,
    "max_width": 2048,
    "max_layers": 5,
    "fitness_folds": 3,
    "final_folds": 10,
    "fitness_epochs": 30,
    # interpretation heads
    "widths": "2,4,8,16,32,64,128,256,512,1024,2048,4096",
    "image_width": 16,
    "fusion_width": 16,
    "head_epochs": 60,
    "head_lr": 0.02,
    "fusion_epochs": 60,
    "fusion_lr": 0.01,
    # classical baselines
    "forest_trees": 100,
    "forest_depth": 12,
    "svm_regularization": 1e-3,
    "svm_epochs": 200,
}


def _coerce(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def load_config_file(path) -> dict:
    values = {}
    for line_no, line in enumerate(Path(path).read_text().splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{line_no}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        values[key.strip()] = _coerce(value)
    return values


def resolve_config(file_path=None, overrides=None) -> dict:
    """DEFAULTS, updated by the config file, updated by explicit flags."""
    resolved = dict(DEFAULTS)
    if file_path is not None:
        for key, value in load_config_file(file_path).items():
            if key not in resolved:
                raise ValueError(f"unknown config key {key!r}")
            resolved[key] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            resolved[key] = value
    return resolved


def write_config(config: dict, path):
    lines = [f"{key} = {config[key]}" for key in sorted(config)]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_int_list(text) -> list:
    """'64,32' -> [64, 32]."""
    if isinstance(text, int):
        return [text]
    items = [part.strip() for part in str(text).split(",") if part.strip()]
    return [int(part) for part in items]


def parse_blocks(text) -> tuple:
    """'8x5x2,16x3x2' -> ((8, 5, 2), (16, 3, 2))."""
    blocks = []
    for part in str(text).split(","):
        bits = part.strip().split("x")
        if len(bits) != 3:
            raise ValueError(f"bad backbone block {part!r}; expected FILTERSxKERNELxPOOL")
        blocks.append(tuple(int(b) for b in bits))
    return tuple(blocks)
