"""Deterministic demo video: the bundled 5-second ingest test asset.

Each second has a distinct solid background color with a moving box, and
the audio is a per-second tone at 200*(s+1) Hz (stereo, so downmix is
exercised). Written as MJPEG+PCM16 AVI so the builtin demuxer can read it
without any external media tool.
"""

from __future__ import annotations

import numpy as np

from .avi import write_avi

SECOND_COLORS = [
    (200, 40, 40),
    (40, 200, 40),
    (40, 40, 200),
    (200, 200, 40),
    (40, 200, 200),
    (200, 40, 200),
    (120, 120, 120),
]


def tone_frequency(second: int) -> float:
    return 200.0 * (second + 1)


def make_demo_video(path, seconds: int = 5, fps: int = 12, width: int = 192, height: int = 144,
                    sample_rate: int = 16000):
    frames = []
    for index in range(seconds * fps):
        second = index // fps
        frame = np.empty((height, width, 3), dtype=np.uint8)
        frame[:] = SECOND_COLORS[second % len(SECOND_COLORS)]
        # a small box sweeping left to right within each second
        phase = (index % fps) / fps
        x0 = int(phase * (width - 24))
        frame[height // 3 : height // 3 + 24, x0 : x0 + 24] = 255
        frames.append(frame)

    t = np.arange(seconds * sample_rate) / sample_rate
    seconds_index = np.minimum((t).astype(int), seconds - 1)
    freqs = 200.0 * (seconds_index + 1)
    mono = 0.4 * np.sin(2 * np.pi * freqs * t)
    stereo = np.stack([mono, 0.5 * mono], axis=1)
    audio = np.round(stereo * 32767).astype(np.int16)

    write_avi(path, frames, fps=fps, audio=audio, sample_rate=sample_rate)
    return path


if __name__ == "__main__":
    import sys

    target = sys.argv[1] if len(sys.argv) > 1 else "demo.avi"
    make_demo_video(target)
    print(target)
