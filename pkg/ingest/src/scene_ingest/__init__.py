"""Video-to-dataset ingest: per-second (center frame, 1 s audio) pairs."""

from .media import BuiltinAviDecoder, FfmpegDecoder, MediaError, pick_decoder
from .slicer import SampleRecord, SourceVideo, build_manifest, slice_video

__version__ = "0.1.0"
