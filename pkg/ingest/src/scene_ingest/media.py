"""Media decoding behind one small interface.

The preferred decoder shells out to ffmpeg/ffprobe (any container, proper
resampling). When those are not on PATH, a built-in fallback handles AVI
files carrying MJPEG frames and PCM16 audio, which is also the format of
the bundled test video.
"""

from __future__ import annotations

import io
import json
import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .avi import AviFile, read_avi


@dataclass(frozen=True)
class MediaInfo:
    duration_seconds: float
    fps: float
    width: int
    height: int
    has_audio: bool


class MediaError(RuntimeError):
    pass


class FfmpegDecoder:
    """Frame and audio extraction via ffmpeg/ffprobe subprocesses."""

    def __init__(self, ffmpeg="ffmpeg", ffprobe="ffprobe"):
        self.ffmpeg = ffmpeg
        self.ffprobe = ffprobe

    @staticmethod
    def available() -> bool:
        return shutil.which("ffmpeg") is not None and shutil.which("ffprobe") is not None

    def version(self) -> str:
        out = subprocess.run(
            [self.ffmpeg, "-version"], capture_output=True, text=True, check=True
        ).stdout
        return out.splitlines()[0].strip()

    def _run(self, args) -> bytes:
        proc = subprocess.run(args, capture_output=True)
        if proc.returncode != 0:
            raise MediaError(
                f"{args[0]} failed ({proc.returncode}): {proc.stderr.decode(errors='replace')[-500:]}"
            )
        return proc.stdout

    def probe(self, path) -> MediaInfo:
        out = self._run(
            [
                self.ffprobe,
                "-v", "error",
                "-print_format", "json",
                "-show_format",
                "-show_streams",
                str(path),
            ]
        )
        doc = json.loads(out)
        video = next((s for s in doc["streams"] if s["codec_type"] == "video"), None)
        if video is None:
            raise MediaError(f"no video stream in {path}")
        num, _, den = video.get("avg_frame_rate", "0/1").partition("/")
        fps = float(num) / float(den or 1) if float(den or 1) else 0.0
        return MediaInfo(
            duration_seconds=float(doc["format"]["duration"]),
            fps=fps,
            width=int(video["width"]),
            height=int(video["height"]),
            has_audio=any(s["codec_type"] == "audio" for s in doc["streams"]),
        )

    def frame_at(self, path, t: float) -> np.ndarray:
        out = self._run(
            [
                self.ffmpeg,
                "-v", "error",
                "-ss", f"{t:.6f}",
                "-i", str(path),
                "-frames:v", "1",
                "-f", "image2pipe",
                "-vcodec", "png",
                "pipe:1",
            ]
        )
        if not out:
            raise MediaError(f"no frame decodable at t={t:.3f}s in {path}")
        with Image.open(io.BytesIO(out)) as img:
            return np.asarray(img.convert("RGB"))

    def audio_segment(self, path, start: float, end: float, sample_rate: int):
        """Mono float64 samples resampled to sample_rate, or None if short."""
        out = self._run(
            [
                self.ffmpeg,
                "-v", "error",
                "-ss", f"{start:.6f}",
                "-t", f"{end - start:.6f}",
                "-i", str(path),
                "-ac", "1",
                "-ar", str(sample_rate),
                "-f", "s16le",
                "pipe:1",
            ]
        )
        samples = np.frombuffer(out, dtype="<i2").astype(np.float64) / 32768.0
        wanted = int(round((end - start) * sample_rate))
        if len(samples) < wanted:
            # tolerate a codec-padding shortfall of up to 1 ms, else report short
            if wanted - len(samples) > sample_rate // 1000:
                return None
            samples = np.concatenate([samples, np.zeros(wanted - len(samples))])
        return samples[:wanted]


class BuiltinAviDecoder:
    """Pure-Python fallback for MJPEG+PCM16 AVI files."""

    def __init__(self):
        self._path = None
        self._file: AviFile | None = None

    @staticmethod
    def available() -> bool:
        return True

    def version(self) -> str:
        return "builtin-avi-demuxer"

    def _load(self, path) -> AviFile:
        path = str(path)
        if self._path != path:
            self._file = read_avi(path)
            self._path = path
        return self._file

    def probe(self, path) -> MediaInfo:
        avi = self._load(path)
        return MediaInfo(
            duration_seconds=avi.duration_seconds,
            fps=avi.fps,
            width=avi.width,
            height=avi.height,
            has_audio=avi.audio is not None,
        )

    def frame_at(self, path, t: float) -> np.ndarray:
        avi = self._load(path)
        index = int(np.floor(t * avi.fps))
        if not 0 <= index < avi.frame_count:
            raise MediaError(f"no frame at t={t:.3f}s (have {avi.frame_count} frames)")
        return avi.frame_rgb(index)

    def audio_segment(self, path, start: float, end: float, sample_rate: int):
        avi = self._load(path)
        if avi.audio is None:
            raise MediaError(f"{path} has no audio stream")
        mono = avi.audio_mono()
        i0 = int(round(start * avi.audio_rate))
        i1 = int(round(end * avi.audio_rate))
        if i1 > len(mono):
            return None
        segment = mono[i0:i1]
        if avi.audio_rate == sample_rate:
            return segment
        wanted = int(round((end - start) * sample_rate))
        src_t = np.arange(len(segment)) / avi.audio_rate
        dst_t = np.arange(wanted) / sample_rate
        return np.interp(dst_t, src_t, segment)


def pick_decoder(path):
    """ffmpeg when installed; otherwise the builtin AVI fallback."""
    if FfmpegDecoder.available():
        return FfmpegDecoder()
    if str(path).lower().endswith(".avi"):
        return BuiltinAviDecoder()
    raise MediaError(
        f"cannot decode {path}: ffmpeg/ffprobe not found on PATH and the "
        "builtin fallback only reads MJPEG+PCM AVI files"
    )
