"""Mel-cepstral feature extraction producing the fixed-size feature image.

A 1 s segment is framed on a fixed hop grid, windowed, transformed to a
power spectrum, pooled through a triangular mel filterbank, and
decorrelated with a cosine transform:

    c_i = sqrt(2/N) * sum_{j=1..N} log(x_j) * cos(i*pi*(j - 0.5)/N)

for i = 1..n_mfcc, where x_j is the j-th filterbank energy. The pure-energy
0th coefficient is excluded. Output shape is always (n_mfcc, n_frames); the
upstream zero-padding of segments guarantees it.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .audio import AudioSegment, SAMPLE_RATE_HZ, SEGMENT_SAMPLES

LOG_ENERGY_FLOOR = 1e-10  # clamps silent filterbank energies before log

# Frame lengths evaluated for the detector, with 0% or 25% overlap.
STANDARD_FRAME_LENGTHS_MS = (5, 20, 35, 50, 70)
STANDARD_OVERLAPS_PCT = (0, 25)


class NegativeFrequency(ValueError):
    pass


class NegativeMel(ValueError):
    pass


class DegenerateFilter(ValueError):
    """fft_size too small for n_mel_filters: two centers collapse onto one bin."""


class ConfigMismatch(ValueError):
    """Segment length does not match the configuration's expectations."""


def hz_to_mel(f: float) -> float:
    """Map frequency in Hz onto the mel scale: 2595 * log10(1 + f/700)."""
    if f < 0:
        raise NegativeFrequency(f"frequency must be >= 0, got {f}")
    return 2595.0 * math.log10(1.0 + f / 700.0)


def mel_to_hz(m: float) -> float:
    """Exact inverse of hz_to_mel: 700 * (10^(m/2595) - 1)."""
    if m < 0:
        raise NegativeMel(f"mel value must be >= 0, got {m}")
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def _smallest_pow2_at_least(n: int) -> int:
    size = 1
    while size < n:
        size *= 2
    return size


@dataclass(frozen=True)
class MfccConfig:
    """Frame/hop geometry and filterbank parameters.

    frame_length_ms and overlap_pct are free for budgeting experiments;
    the evaluated grid is STANDARD_FRAME_LENGTHS_MS x STANDARD_OVERLAPS_PCT.
    """

    n_mfcc: int = 40
    n_mel_filters: int = 40
    frame_length_ms: float = 5.0
    overlap_pct: float = 25.0
    fmin_hz: float = 0.0
    fmax_hz: float = 8000.0

    def __post_init__(self):
        if self.frame_length_ms <= 0:
            raise ValueError("frame_length_ms must be positive")
        if not 0 <= self.overlap_pct < 100:
            raise ValueError("overlap_pct must be in [0, 100)")
        if self.n_mfcc > self.n_mel_filters:
            raise ValueError("n_mfcc cannot exceed n_mel_filters")
        if not 0 <= self.fmin_hz < self.fmax_hz:
            raise ValueError("need 0 <= fmin_hz < fmax_hz")
        if self.fmax_hz > SAMPLE_RATE_HZ / 2:
            raise ValueError(f"fmax_hz {self.fmax_hz} exceeds Nyquist {SAMPLE_RATE_HZ / 2}")

    @property
    def hop_ms(self) -> float:
        return self.frame_length_ms * (1.0 - self.overlap_pct / 100.0)

    @property
    def n_frames(self) -> int:
        return math.ceil(1000.0 / self.hop_ms)

    @property
    def frame_length_samples(self) -> int:
        return round(self.frame_length_ms * SAMPLE_RATE_HZ / 1000.0)

    @property
    def hop_samples(self) -> float:
        return self.hop_ms * SAMPLE_RATE_HZ / 1000.0

    @property
    def fft_size(self) -> int:
        """Smallest power of two holding one frame."""
        return _smallest_pow2_at_least(self.frame_length_samples)


@dataclass(frozen=True)
class MfccMatrix:
    """Feature image of shape (n_mfcc, n_frames); columns are frames."""

    coefficients: np.ndarray
    config: MfccConfig

    def __post_init__(self):
        expect = (self.config.n_mfcc, self.config.n_frames)
        if self.coefficients.shape != expect:
            raise ValueError(f"coefficient shape {self.coefficients.shape} != {expect}")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("coefficients must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.coefficients.shape


def mel_filter_centers_hz(config: MfccConfig) -> np.ndarray:
    """Center frequencies of the triangular filters, in Hz."""
    mel_pts = np.linspace(hz_to_mel(config.fmin_hz), hz_to_mel(config.fmax_hz),
                          config.n_mel_filters + 2)
    return 700.0 * (10.0 ** (mel_pts[1:-1] / 2595.0) - 1.0)


def build_mel_filterbank(config: MfccConfig) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mel_filters, fft_size//2 + 1).

    Filter edges are the neighboring centers on an equally spaced mel grid
    between fmin and fmax. Triangles are evaluated at the FFT bin
    frequencies. A filter narrower than the bin spacing would catch no bin
    at all; such a filter is snapped to the single bin nearest its center
    (weight 1.0) so every filter keeps at least one nonzero weight. If two
    snapped filters land on the same bin the bank is unusable and
    DegenerateFilter is raised.
    """
    n_bins = config.fft_size // 2 + 1
    bin_hz = np.arange(n_bins) * (SAMPLE_RATE_HZ / config.fft_size)
    mel_pts = np.linspace(hz_to_mel(config.fmin_hz), hz_to_mel(config.fmax_hz),
                          config.n_mel_filters + 2)
    pts_hz = 700.0 * (10.0 ** (mel_pts / 2595.0) - 1.0)

    bank = np.zeros((config.n_mel_filters, n_bins))
    snapped: dict[int, int] = {}
    for k in range(config.n_mel_filters):
        left, center, right = pts_hz[k], pts_hz[k + 1], pts_hz[k + 2]
        rise = (bin_hz - left) / (center - left)
        fall = (right - bin_hz) / (right - center)
        row = np.maximum(0.0, np.minimum(rise, fall))
        if not row.any():
            snap_bin = int(round(center / (SAMPLE_RATE_HZ / config.fft_size)))
            snap_bin = min(snap_bin, n_bins - 1)
            if snap_bin in snapped:
                raise DegenerateFilter(
                    f"filters {snapped[snap_bin]} and {k} both collapse onto FFT bin "
                    f"{snap_bin}; fft_size {config.fft_size} is too small for "
                    f"{config.n_mel_filters} filters"
                )
            snapped[snap_bin] = k
            row[snap_bin] = 1.0
        bank[k] = row
    return bank


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window of length n."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def frame_signal(segment: AudioSegment, config: MfccConfig) -> np.ndarray:
    """Slice a segment into n_frames Hann-windowed frames on the hop grid.

    Frames reaching past the segment end are zero-padded, so the frame
    count depends only on the configuration.
    """
    samples = segment.samples
    if len(samples) != SEGMENT_SAMPLES:
        raise ConfigMismatch(f"expected a {SEGMENT_SAMPLES}-sample segment")
    frame_len = config.frame_length_samples
    window = hann_window(frame_len)
    frames = np.zeros((config.n_frames, frame_len))
    for t in range(config.n_frames):
        start = round(t * config.hop_samples)
        avail = max(0, min(frame_len, SEGMENT_SAMPLES - start))
        if avail:
            frames[t, :avail] = samples[start:start + avail]
    return frames * window


def power_spectrum(frames: np.ndarray, fft_size: int) -> np.ndarray:
    """Magnitude-squared spectrum of zero-padded frames, shape (n, fft//2+1)."""
    spec = np.fft.rfft(frames, n=fft_size, axis=-1)
    return np.real(spec * np.conj(spec))


def log_mel_energies(segment: AudioSegment, config: MfccConfig,
                     filterbank: np.ndarray | None = None) -> np.ndarray:
    """Floored log filterbank energies, shape (n_mel_filters, n_frames)."""
    if filterbank is None:
        filterbank = build_mel_filterbank(config)
    frames = frame_signal(segment, config)
    power = power_spectrum(frames, config.fft_size)
    # einsum keeps one reduction order per output element, so identical
    # frames yield bit-identical columns (BLAS fringe kernels do not)
    energies = np.einsum("fb,tb->ft", filterbank, power)
    return np.log(np.maximum(energies, LOG_ENERGY_FLOOR))


def dct_basis(n_mfcc: int, n_mel_filters: int) -> np.ndarray:
    """Cosine transform rows for coefficients 1..n_mfcc over N filter bands."""
    i = np.arange(1, n_mfcc + 1)[:, None]
    j = np.arange(1, n_mel_filters + 1)[None, :]
    return math.sqrt(2.0 / n_mel_filters) * np.cos(i * np.pi * (j - 0.5) / n_mel_filters)


def cepstral_transform(log_energies: np.ndarray, n_mfcc: int) -> np.ndarray:
    """Apply the cosine transform to log filterbank energies (bands, frames)."""
    n_filters = log_energies.shape[0]
    return np.einsum("ij,jt->it", dct_basis(n_mfcc, n_filters), log_energies)


def mfcc(segment: AudioSegment, config: MfccConfig,
         filterbank: np.ndarray | None = None) -> MfccMatrix:
    """Full feature extraction for one segment.

    The filterbank may be precomputed once and shared read-only across
    segments and threads.
    """
    logs = log_mel_energies(segment, config, filterbank)
    coeffs = cepstral_transform(logs, config.n_mfcc)
    return MfccMatrix(coefficients=coeffs, config=config)


# --- feature serialization ---------------------------------------------------
#
# Binary layout (little-endian), 16-byte header then row-major float32 data:
#   magic "MFC1" | n_mfcc u32 | n_frames u32 | reserved u32 (zero)

FEATURE_MAGIC = b"MFC1"
_FEATURE_HEADER = struct.Struct("<4sIII")


class BadFeatureFile(ValueError):
    pass


def write_feature_binary(matrix: MfccMatrix) -> bytes:
    n_mfcc, n_frames = matrix.shape
    header = _FEATURE_HEADER.pack(FEATURE_MAGIC, n_mfcc, n_frames, 0)
    return header + matrix.coefficients.astype("<f4").tobytes()


def read_feature_binary(data: bytes) -> np.ndarray:
    """Decode the binary feature format back into a (n_mfcc, n_frames) array."""
    if len(data) < _FEATURE_HEADER.size:
        raise BadFeatureFile("feature file shorter than its header")
    magic, n_mfcc, n_frames, _reserved = _FEATURE_HEADER.unpack_from(data)
    if magic != FEATURE_MAGIC:
        raise BadFeatureFile(f"bad magic {magic!r}")
    want = n_mfcc * n_frames * 4
    body = data[_FEATURE_HEADER.size:]
    if len(body) != want:
        raise BadFeatureFile(f"expected {want} data bytes, got {len(body)}")
    return np.frombuffer(body, dtype="<f4").reshape(n_mfcc, n_frames).astype(np.float64)


def feature_json(matrix: MfccMatrix) -> str:
    """Human-inspectable JSON rendering of a feature matrix."""
    n_mfcc, n_frames = matrix.shape
    return json.dumps(
        {
            "n_mfcc": n_mfcc,
            "n_frames": n_frames,
            "frame_length_ms": matrix.config.frame_length_ms,
            "overlap_pct": matrix.config.overlap_pct,
            "coefficients": matrix.coefficients.tolist(),
        },
        indent=2,
    )
