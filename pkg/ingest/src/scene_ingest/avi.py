"""Minimal RIFF/AVI muxing and demuxing for MJPEG video + PCM16 audio.

Covers exactly the container subset the ingest fallback needs when no
external media tool is installed: one 'vids' stream of JPEG-compressed
frames and one optional 'auds' PCM stream. Chunks are word-aligned per the
RIFF rules; unknown chunks are skipped on read.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np
from PIL import Image


def _chunk(fourcc: bytes, payload: bytes) -> bytes:
    pad = b"\x00" if len(payload) % 2 else b""
    return fourcc + struct.pack("<I", len(payload)) + payload + pad


def _list(formtype: bytes, payload: bytes) -> bytes:
    return _chunk(b"LIST", formtype + payload)


def write_avi(path, frames, fps: int, audio=None, sample_rate: int = 16000, jpeg_quality: int = 90):
    """Writes RGB uint8 frames (H, W, 3) as MJPEG plus optional PCM16 audio.

    ``audio`` is int16, shape (n,) or (n, channels). Deterministic output
    for identical inputs.
    """
    frames = [np.asarray(f, dtype=np.uint8) for f in frames]
    if not frames:
        raise ValueError("need at least one frame")
    height, width = frames[0].shape[:2]

    jpegs = []
    for frame in frames:
        buf = io.BytesIO()
        Image.fromarray(frame).save(buf, format="JPEG", quality=jpeg_quality)
        jpegs.append(buf.getvalue())

    has_audio = audio is not None
    if has_audio:
        audio = np.asarray(audio, dtype=np.int16)
        if audio.ndim == 1:
            audio = audio[:, None]
        channels = audio.shape[1]
        block_align = 2 * channels
        audio_bytes = audio.astype("<i2").tobytes()

    avih = _chunk(
        b"avih",
        struct.pack(
            "<14I",
            1_000_000 // fps,  # microseconds per frame
            0,
            0,
            0x10,  # AVIF_HASINDEX off; 0x10 = AVIF_WASCAPTUREFILE-ish, harmless
            len(jpegs),
            0,
            2 if has_audio else 1,
            max(len(j) for j in jpegs),
            width,
            height,
            0,
            0,
            0,
            0,
        ),
    )

    video_strh = _chunk(
        b"strh",
        struct.pack(
            "<4s4sIHHIIIIIIII4h",
            b"vids",
            b"MJPG",
            0,
            0,
            0,
            0,
            1,
            fps,
            0,
            len(jpegs),
            max(len(j) for j in jpegs),
            0,
            0,
            0,
            0,
            width,
            height,
        ),
    )
    video_strf = _chunk(
        b"strf",
        struct.pack(
            "<IiiHH4sIiiII",
            40,
            width,
            height,
            1,
            24,
            b"MJPG",
            width * height * 3,
            0,
            0,
            0,
            0,
        ),
    )
    streams = _list(b"strl", video_strh + video_strf)

    if has_audio:
        audio_strh = _chunk(
            b"strh",
            struct.pack(
                "<4s4sIHHIIIIIIII4h",
                b"auds",
                b"\x00\x00\x00\x00",
                0,
                0,
                0,
                0,
                1,
                sample_rate,
                0,
                len(audio),
                len(audio_bytes),
                0,
                block_align,
                0,
                0,
                0,
                0,
            ),
        )
        audio_strf = _chunk(
            b"strf",
            struct.pack(
                "<HHIIHH",
                1,  # WAVE_FORMAT_PCM
                channels,
                sample_rate,
                sample_rate * block_align,
                block_align,
                16,
            ),
        )
        streams += _list(b"strl", audio_strh + audio_strf)

    hdrl = _list(b"hdrl", avih + streams)

    movi_payload = b""
    # interleave one second of audio after each second of frames
    audio_cursor = 0
    for i, jpeg in enumerate(jpegs):
        movi_payload += _chunk(b"00dc", jpeg)
        if has_audio and (i + 1) % fps == 0:
            upto = min(len(audio_bytes), ((i + 1) // fps) * sample_rate * block_align)
            movi_payload += _chunk(b"01wb", audio_bytes[audio_cursor:upto])
            audio_cursor = upto
    if has_audio and audio_cursor < len(audio_bytes):
        movi_payload += _chunk(b"01wb", audio_bytes[audio_cursor:])
    movi = _list(b"movi", movi_payload)

    riff = _chunk(b"RIFF", b"AVI " + hdrl + movi)
    with open(path, "wb") as fh:
        fh.write(riff)


@dataclass
class AviFile:
    """Parsed container: JPEG frame payloads plus the raw PCM audio track."""

    width: int
    height: int
    fps: float
    frames: list = field(default_factory=list)  # JPEG byte strings
    audio: np.ndarray | None = None  # int16 (n, channels)
    audio_rate: int = 0

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    @property
    def duration_seconds(self) -> float:
        return self.frame_count / self.fps

    def frame_rgb(self, index: int) -> np.ndarray:
        with Image.open(io.BytesIO(self.frames[index])) as img:
            return np.asarray(img.convert("RGB"))

    def audio_mono(self) -> np.ndarray:
        """Float64 mono samples in [-1, 1]."""
        if self.audio is None:
            raise ValueError("container has no audio stream")
        return self.audio.astype(np.float64).mean(axis=1) / 32768.0


def _iter_chunks(data: bytes, offset: int, end: int):
    while offset + 8 <= end:
        fourcc = data[offset : offset + 4]
        (size,) = struct.unpack_from("<I", data, offset + 4)
        payload_start = offset + 8
        yield fourcc, payload_start, size
        offset = payload_start + size + (size % 2)


def read_avi(path) -> AviFile:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != b"RIFF" or data[8:12] != b"AVI ":
        raise ValueError(f"{path} is not an AVI container")

    stream_types = []  # fccType per stream, in declaration order
    audio_format = None
    video = {"width": 0, "height": 0, "fps": 0.0}
    frames = []
    audio_chunks = []

    def walk(start: int, end: int):
        nonlocal audio_format
        for fourcc, payload, size in _iter_chunks(data, start, end):
            if fourcc in (b"RIFF", b"LIST"):
                walk(payload + 4, payload + size)
            elif fourcc == b"strh":
                fcc_type, _, _, _, _, _, scale, rate, _, _, _, _, _ = struct.unpack_from(
                    "<4s4sIHHIIIIIIII", data, payload
                )
                stream_types.append(fcc_type)
                if fcc_type == b"vids" and scale:
                    video["fps"] = rate / scale
            elif fourcc == b"strf":
                if stream_types and stream_types[-1] == b"vids":
                    _, width, height = struct.unpack_from("<Iii", data, payload)
                    video["width"], video["height"] = width, abs(height)
                elif stream_types and stream_types[-1] == b"auds":
                    tag, channels, rate, _, block, bits = struct.unpack_from(
                        "<HHIIHH", data, payload
                    )
                    audio_format = {"tag": tag, "channels": channels, "rate": rate, "bits": bits}
            elif fourcc[2:] in (b"dc", b"db"):
                frames.append(data[payload : payload + size])
            elif fourcc[2:] == b"wb":
                audio_chunks.append(data[payload : payload + size])

    walk(12, len(data))

    audio = None
    audio_rate = 0
    if audio_format is not None and audio_chunks:
        if audio_format["tag"] != 1 or audio_format["bits"] != 16:
            raise ValueError("builtin AVI reader supports 16-bit PCM audio only")
        raw = b"".join(audio_chunks)
        samples = np.frombuffer(raw, dtype="<i2")
        audio = samples.reshape(-1, audio_format["channels"])
        audio_rate = audio_format["rate"]

    if not frames:
        raise ValueError(f"no video frames found in {path}")
    if not video["fps"]:
        raise ValueError(f"missing video rate header in {path}")
    return AviFile(
        width=video["width"],
        height=video["height"],
        fps=video["fps"],
        frames=frames,
        audio=audio,
        audio_rate=audio_rate,
    )
