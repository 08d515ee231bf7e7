"""Command line: slice one source video and extend the output manifest.

    ingest.py --video PATH --label NAME --out DIR [--start S --end E]

Repeated invocations with the same --out accumulate into one manifest;
classes.txt is kept in sync (sorted label list). Requires ffmpeg/ffprobe on
PATH for general containers; MJPEG+PCM AVI files decode without them.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .media import MediaError, pick_decoder
from .slicer import SourceVideo, build_manifest, read_manifest_records, slice_video


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scene-ingest", description=__doc__)
    parser.add_argument("--video", required=True, help="source video file")
    parser.add_argument("--label", required=True, help="scene class name")
    parser.add_argument("--out", required=True, help="output dataset directory")
    parser.add_argument("--start", type=int, default=0, help="first second (default 0)")
    parser.add_argument("--end", type=int, default=None, help="end second (default: duration)")
    parser.add_argument("--image-size", type=int, default=128)
    parser.add_argument("--sample-rate", type=int, default=16000)
    return parser


def run(args) -> int:
    decoder = pick_decoder(args.video)
    src = SourceVideo.probe(args.video, args.label, decoder)
    records = slice_video(
        src,
        args.out,
        start=args.start,
        end=src.duration_seconds if args.end is None else args.end,
        image_size=args.image_size,
        sample_rate=args.sample_rate,
        decoder=decoder,
    )
    out = Path(args.out)
    manifest = out / "manifest.jsonl"
    existing = read_manifest_records(manifest) if manifest.exists() else []
    build_manifest(existing + records, manifest, tool_version=decoder.version())
    labels = sorted({r.label for r in existing + records})
    (out / "classes.txt").write_text("".join(label + "\n" for label in labels))
    print(f"{len(records)} pairs from {src.path.name}; manifest now {len(existing) + len(records)} rows")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (MediaError, ValueError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
