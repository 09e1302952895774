"""WAV ingestion and fixed one-second segmentation.

The detector consumes mono 16 kHz PCM16 audio. Anything else is rejected
rather than resampled or downmixed, keeping the device-side pipeline
deterministic. Streams are tiled into back-to-back 1 s windows; the final
window is zero-padded to exactly one second.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterator

import numpy as np

SAMPLE_RATE_HZ = 16000
SEGMENT_SAMPLES = 16000  # one second at 16 kHz


class MalformedWav(ValueError):
    """Input is not a readable RIFF/WAVE container."""


class UnsupportedFormat(ValueError):
    """WAV is readable but not mono 16-bit PCM at 16 kHz."""


class EmptyStream(ValueError):
    """Stream holds no samples."""


@dataclass(frozen=True)
class AudioStream:
    """Normalized mono audio at the pipeline's fixed rate.

    samples are float amplitudes in [-1, 1] (int16 / 32768).
    """

    samples: np.ndarray
    sample_rate_hz: int = SAMPLE_RATE_HZ
    channel_count: int = 1

    def __post_init__(self):
        if self.sample_rate_hz != SAMPLE_RATE_HZ:
            raise UnsupportedFormat(
                f"expected {SAMPLE_RATE_HZ} Hz, got {self.sample_rate_hz} Hz"
            )
        if self.channel_count != 1:
            raise UnsupportedFormat(f"expected mono, got {self.channel_count} channels")
        peak = float(np.max(np.abs(self.samples))) if self.samples.size else 0.0
        if peak > 1.0:
            raise ValueError(f"sample amplitude {peak} outside [-1, 1]")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass(frozen=True)
class AudioSegment:
    """Exactly one second of audio; the unit of inference.

    padded_sample_count trailing samples are synthetic zeros appended to
    fill the window.
    """

    samples: np.ndarray
    start_time_s: float
    padded_sample_count: int = 0

    def __post_init__(self):
        if len(self.samples) != SEGMENT_SAMPLES:
            raise ValueError(
                f"segment must hold {SEGMENT_SAMPLES} samples, got {len(self.samples)}"
            )
        if self.padded_sample_count < 0:
            raise ValueError("padded_sample_count must be >= 0")
        if self.padded_sample_count:
            tail = self.samples[SEGMENT_SAMPLES - self.padded_sample_count:]
            if np.any(tail != 0.0):
                raise ValueError("padded tail samples must be exactly 0.0")

    @property
    def real_sample_count(self) -> int:
        return SEGMENT_SAMPLES - self.padded_sample_count


_RIFF_HEADER = struct.Struct("<4sI4s")
_CHUNK_HEADER = struct.Struct("<4sI")
_FMT_BODY = struct.Struct("<HHIIHH")


def _read_exact(fp: BinaryIO, n: int, what: str) -> bytes:
    buf = fp.read(n)
    if len(buf) != n:
        raise MalformedWav(f"truncated WAV: expected {n} bytes for {what}, got {len(buf)}")
    return buf


def _parse_header(fp: BinaryIO) -> int:
    """Walk RIFF chunks up to the data chunk; return the data byte length.

    Leaves fp positioned at the first data byte. Chunks other than
    `fmt ` and `data` are skipped (RIFF chunks are word-aligned).
    """
    riff, _size, wave = _RIFF_HEADER.unpack(_read_exact(fp, 12, "RIFF header"))
    if riff != b"RIFF" or wave != b"WAVE":
        raise MalformedWav(f"not a RIFF/WAVE file (got {riff!r}/{wave!r})")

    fmt_seen = False
    while True:
        hdr = fp.read(8)
        if len(hdr) == 0:
            raise MalformedWav("no data chunk found")
        if len(hdr) < 8:
            raise MalformedWav("truncated chunk header")
        cid, size = _CHUNK_HEADER.unpack(hdr)
        if cid == b"fmt ":
            if size < 16:
                raise MalformedWav(f"fmt chunk too short ({size} bytes)")
            body = _read_exact(fp, size, "fmt chunk")
            fmt_code, channels, rate, _byte_rate, _align, bits = _FMT_BODY.unpack(body[:16])
            if fmt_code != 1:
                raise UnsupportedFormat(f"expected PCM (format 1), got format {fmt_code}")
            if bits != 16:
                raise UnsupportedFormat(f"expected 16-bit samples, got {bits}-bit")
            if channels != 1:
                raise UnsupportedFormat(f"expected mono, got {channels} channels")
            if rate != SAMPLE_RATE_HZ:
                raise UnsupportedFormat(f"expected {SAMPLE_RATE_HZ} Hz, got {rate} Hz")
            fmt_seen = True
            if size % 2:
                fp.read(1)
        elif cid == b"data":
            if not fmt_seen:
                raise MalformedWav("data chunk precedes fmt chunk")
            return size
        else:
            skip = size + (size % 2)
            if len(fp.read(skip)) != skip:
                raise MalformedWav(f"truncated {cid!r} chunk")


def parse_wav(data: bytes) -> AudioStream:
    """Decode a mono 16 kHz PCM16 WAV byte string into an AudioStream."""
    fp = io.BytesIO(data)
    data_len = _parse_header(fp)
    raw = _read_exact(fp, data_len, "data chunk")
    if data_len % 2:
        raise MalformedWav(f"data chunk length {data_len} is not a whole number of samples")
    ints = np.frombuffer(raw, dtype="<i2")
    return AudioStream(samples=ints.astype(np.float64) / 32768.0)


def segment(stream: AudioStream) -> list[AudioSegment]:
    """Tile a stream into ceil(len/16000) back-to-back 1 s segments."""
    n = len(stream.samples)
    if n == 0:
        raise EmptyStream("cannot segment an empty stream")
    out = []
    for k in range(0, n, SEGMENT_SAMPLES):
        chunk = stream.samples[k:k + SEGMENT_SAMPLES]
        pad = SEGMENT_SAMPLES - len(chunk)
        if pad:
            chunk = np.concatenate([chunk, np.zeros(pad)])
        out.append(AudioSegment(samples=chunk, start_time_s=k / SAMPLE_RATE_HZ,
                                padded_sample_count=pad))
    return out


def iter_segments(fp: BinaryIO) -> Iterator[AudioSegment]:
    """Stream 1 s segments from an open WAV file without loading it whole.

    Memory stays bounded at one segment regardless of stream length.
    """
    data_len = _parse_header(fp)
    if data_len % 2:
        raise MalformedWav(f"data chunk length {data_len} is not a whole number of samples")
    total = data_len // 2
    if total == 0:
        raise EmptyStream("WAV data chunk holds no samples")
    read_samples = 0
    index = 0
    while read_samples < total:
        want = min(SEGMENT_SAMPLES, total - read_samples)
        raw = _read_exact(fp, want * 2, f"segment {index}")
        chunk = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
        pad = SEGMENT_SAMPLES - want
        if pad:
            chunk = np.concatenate([chunk, np.zeros(pad)])
        yield AudioSegment(samples=chunk, start_time_s=float(index),
                           padded_sample_count=pad)
        read_samples += want
        index += 1
