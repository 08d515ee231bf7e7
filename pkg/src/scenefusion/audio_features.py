"""MFCC feature extraction for 1-second scene audio clips.

A clip is analysed with 0.25 s sliding windows at a 0.125 s hop (4 base
windows plus 4 half-shifted ones), and each window yields 13 cepstral
coefficients: power spectrum -> triangular mel filterbank -> log -> DCT.
At the default configuration one clip becomes a 104-value feature vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AudioClip",
    "MfccConfig",
    "dct_ii",
    "power_spectrum",
    "hz_to_mel",
    "mel_to_hz",
    "mel_filter_centers",
    "mel_filterbank",
    "mfcc_frame",
    "clip_features",
]


@dataclass(frozen=True)
class AudioClip:
    """Mono audio samples in [-1, 1] plus their sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class MfccConfig:
    """Tunables of the clip feature extractor.

    Defaults give 8 windows x 13 coefficients = 104 features per 1 s clip:
    0.25 s windows (4000 samples at 16 kHz) zero-padded into a 4096-point
    FFT, 26 triangular mel filters, first 13 DCT coefficients retained.
    """

    window_seconds: float = 0.25
    windows_per_clip: int = 8
    coefficients_per_window: int = 13
    mel_filters: int = 26
    fft_size: int = 4096
    log_floor: float = 1e-10
    sample_rate: int = 16000
    # Optional conditioning, both disabled by default: the pipeline uses a
    # plain rectangular analysis window and no pre-emphasis.
    pre_emphasis: float | None = None
    analysis_window: str = "rectangular"  # or "hamming"

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.window_seconds <= 0:
            raise ValueError("window_seconds must be positive")
        if self.windows_per_clip < 1:
            raise ValueError("windows_per_clip must be >= 1")
        if self.fft_size < 1 or (self.fft_size & (self.fft_size - 1)) != 0:
            raise ValueError(f"fft_size must be a power of two, got {self.fft_size}")
        if not (self.coefficients_per_window <= self.mel_filters <= self.fft_size // 2):
            raise ValueError(
                "need coefficients_per_window <= mel_filters <= fft_size/2, got "
                f"{self.coefficients_per_window} / {self.mel_filters} / {self.fft_size // 2}"
            )
        if self.frame_length > self.fft_size:
            raise ValueError(
                f"window of {self.frame_length} samples does not fit fft_size {self.fft_size}"
            )
        if self.analysis_window not in ("rectangular", "hamming"):
            raise ValueError(f"unknown analysis_window {self.analysis_window!r}")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")

    @property
    def frame_length(self) -> int:
        """Samples per analysis window (4000 at defaults)."""
        return int(round(self.window_seconds * self.sample_rate))

    @property
    def feature_length(self) -> int:
        """Length of one clip's feature vector (104 at defaults)."""
        return self.windows_per_clip * self.coefficients_per_window


def dct_ii(x) -> np.ndarray:
    """Type-II discrete cosine transform, X_k = sum_n x_n cos(pi/N (n+1/2) k).

    Unnormalized: no orthonormal or factor-2 scaling is applied.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("dct_ii expects a nonempty 1-D array")
    if not np.all(np.isfinite(x)):
        raise ValueError("dct_ii input must be finite")
    n = x.size
    k = np.arange(n)[:, None]
    grid = (np.arange(n) + 0.5)[None, :]
    return np.cos(np.pi / n * grid * k) @ x


def power_spectrum(frame, fft_size: int) -> np.ndarray:
    """One-sided power spectrum of a frame zero-padded to ``fft_size``.

    Returns |rfft(frame)|^2 / fft_size, length fft_size/2 + 1.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 1:
        raise ValueError("power_spectrum expects a 1-D frame")
    if fft_size < 1 or (fft_size & (fft_size - 1)) != 0:
        raise ValueError(f"fft_size must be a power of two, got {fft_size}")
    if len(frame) > fft_size:
        raise ValueError(f"frame of {len(frame)} samples exceeds fft_size {fft_size}")
    spectrum = np.fft.rfft(frame, n=fft_size)
    return (spectrum.real**2 + spectrum.imag**2) / fft_size


def hz_to_mel(f):
    """Mel pitch of a frequency in Hz: 2595 * log10(1 + f/700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    """Inverse of :func:`hz_to_mel`."""
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def _mel_bin_edges(cfg: MfccConfig) -> np.ndarray:
    """FFT bin indices of the mel_filters + 2 filter edge points.

    Edges are equally spaced on the mel scale between 0 Hz and Nyquist and
    snapped to the nearest-below FFT bin so every triangle peaks at exactly
    1.0 on some bin.
    """
    edges_mel = np.linspace(hz_to_mel(0.0), hz_to_mel(cfg.sample_rate / 2.0), cfg.mel_filters + 2)
    edges_hz = mel_to_hz(edges_mel)
    return np.floor((cfg.fft_size + 1) * edges_hz / cfg.sample_rate).astype(int)


def mel_filter_centers(cfg: MfccConfig) -> np.ndarray:
    """Center frequency in Hz of each triangular filter (bin-snapped)."""
    bins = _mel_bin_edges(cfg)
    return bins[1:-1] * cfg.sample_rate / cfg.fft_size


def mel_filterbank(cfg: MfccConfig) -> np.ndarray:
    """Triangular mel filter matrix of shape (mel_filters, fft_size/2 + 1).

    Filter m rises linearly from edge bin m to its center at edge bin m+1
    (weight 1.0) and falls to zero at edge bin m+2; adjacent filters share
    edges, so coverage between the first and last center is gapless.
    """
    if cfg.mel_filters < 2:
        raise ValueError(f"need at least 2 mel filters, got {cfg.mel_filters}")
    bins = _mel_bin_edges(cfg)
    if np.any(np.diff(bins) < 1):
        raise ValueError(
            f"fft_size {cfg.fft_size} too coarse to resolve {cfg.mel_filters} "
            "triangular mel filters; increase fft_size or reduce mel_filters"
        )
    bank = np.zeros((cfg.mel_filters, cfg.fft_size // 2 + 1))
    for m in range(cfg.mel_filters):
        left, center, right = bins[m], bins[m + 1], bins[m + 2]
        for i in range(left, center):
            bank[m, i] = (i - left) / (center - left)
        for i in range(center, right):
            bank[m, i] = (right - i) / (right - center)
    return bank


def _condition_frame(frame: np.ndarray, cfg: MfccConfig) -> np.ndarray:
    if cfg.pre_emphasis is not None:
        frame = np.concatenate(([frame[0]], frame[1:] - cfg.pre_emphasis * frame[:-1]))
    if cfg.analysis_window == "hamming":
        frame = frame * np.hamming(len(frame))
    return frame


def mfcc_frame(frame, cfg: MfccConfig, _bank: np.ndarray | None = None) -> np.ndarray:
    """Cepstral coefficients of one analysis window.

    Pipeline: power spectrum -> mel filterbank energies -> log (floored at
    cfg.log_floor) -> DCT-II -> first coefficients_per_window entries.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 1 or len(frame) != cfg.frame_length:
        raise ValueError(
            f"expected a frame of {cfg.frame_length} samples, got shape {frame.shape}"
        )
    bank = mel_filterbank(cfg) if _bank is None else _bank
    frame = _condition_frame(frame, cfg)
    energies = bank @ power_spectrum(frame, cfg.fft_size)
    log_energies = np.log(np.maximum(energies, cfg.log_floor))
    return dct_ii(log_energies)[: cfg.coefficients_per_window]


def clip_features(clip: AudioClip, cfg: MfccConfig = MfccConfig()) -> np.ndarray:
    """Feature vector of a standard clip: concatenated per-window MFCCs.

    Windows start at offsets i / windows_per_clip seconds (0, 0.125, ...,
    0.875 s at defaults, interleaving the base and half-shifted sets in
    offset order); a window reaching past the clip end is zero-padded.
    """
    if clip.sample_rate != cfg.sample_rate:
        raise ValueError(
            f"clip sample rate {clip.sample_rate} != configured {cfg.sample_rate}"
        )
    expected = cfg.sample_rate  # standard clips are exactly one second
    samples = np.asarray(clip.samples, dtype=np.float64)
    if samples.ndim != 1 or len(samples) != expected:
        raise ValueError(
            f"expected a 1 s clip of {expected} samples, got {samples.shape}"
        )
    bank = mel_filterbank(cfg)
    frame_len = cfg.frame_length
    hop = expected / cfg.windows_per_clip
    blocks = []
    for i in range(cfg.windows_per_clip):
        start = int(round(i * hop))
        frame = samples[start : start + frame_len]
        if len(frame) < frame_len:
            frame = np.concatenate([frame, np.zeros(frame_len - len(frame))])
        blocks.append(mfcc_frame(frame, cfg, _bank=bank))
    return np.concatenate(blocks)
