"""Shared fixture builders: WAV bytes, synthetic signals, model weights."""

from __future__ import annotations

import struct

import numpy as np

from coughdet.audio import SAMPLE_RATE_HZ, AudioSegment, AudioStream
from coughdet.model import (BatchNormParams, ConvLayer, DenseLayer, ModelWeights)


def wav_bytes(ints: np.ndarray, sample_rate: int = SAMPLE_RATE_HZ,
              channels: int = 1, bits: int = 16, fmt_code: int = 1,
              extra_chunks: list[tuple[bytes, bytes]] | None = None) -> bytes:
    """Serialize int16 samples into a RIFF/WAVE container (test-only)."""
    data = np.asarray(ints, dtype="<i2").tobytes()
    fmt = struct.pack("<HHIIHH", fmt_code, channels, sample_rate,
                      sample_rate * channels * bits // 8,
                      channels * bits // 8, bits)
    chunks = b"".join(
        struct.pack("<4sI", cid, len(body)) + body + (b"\x00" if len(body) % 2 else b"")
        for cid, body in (extra_chunks or [])
    )
    body = (struct.pack("<4sI", b"fmt ", len(fmt)) + fmt + chunks
            + struct.pack("<4sI", b"data", len(data)) + data)
    return struct.pack("<4sI4s", b"RIFF", 4 + len(body), b"WAVE") + body


def wav_from_float(samples: np.ndarray, **kwargs) -> bytes:
    ints = np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767).astype(np.int16)
    return wav_bytes(ints, **kwargs)


def stream_from_float(samples: np.ndarray) -> AudioStream:
    return AudioStream(samples=np.asarray(samples, dtype=np.float64))


def make_segment(samples: np.ndarray, start_time_s: float = 0.0,
                 padded: int = 0) -> AudioSegment:
    return AudioSegment(samples=np.asarray(samples, dtype=np.float64),
                        start_time_s=start_time_s, padded_sample_count=padded)


def sine(freq_hz: float, duration_s: float = 1.0, amplitude: float = 0.5) -> np.ndarray:
    t = np.arange(int(duration_s * SAMPLE_RATE_HZ)) / SAMPLE_RATE_HZ
    return amplitude * np.sin(2 * np.pi * freq_hz * t)


def noise_burst(start_s: float, length_s: float, duration_s: float = 1.0,
                amplitude: float = 0.5, seed: int = 0) -> np.ndarray:
    """Silence with a white-noise burst at start_s."""
    rng = np.random.default_rng(seed)
    out = np.zeros(int(duration_s * SAMPLE_RATE_HZ))
    a = int(start_s * SAMPLE_RATE_HZ)
    b = min(len(out), a + int(length_s * SAMPLE_RATE_HZ))
    out[a:b] = amplitude * rng.uniform(-1.0, 1.0, b - a)
    return out


def cough_like(duration_s: float = 1.0, onset_s: float = 0.3, seed: int = 5) -> np.ndarray:
    """Synthetic cough stand-in: sharp wideband burst with a decaying voiced tail."""
    rng = np.random.default_rng(seed)
    n = int(duration_s * SAMPLE_RATE_HZ)
    out = np.zeros(n)
    a = int(onset_s * SAMPLE_RATE_HZ)
    burst_len = int(0.08 * SAMPLE_RATE_HZ)
    t = np.arange(burst_len) / SAMPLE_RATE_HZ
    envelope = np.exp(-t / 0.02)
    out[a:a + burst_len] = 0.8 * envelope * rng.uniform(-1, 1, burst_len)
    tail_len = int(0.25 * SAMPLE_RATE_HZ)
    tt = np.arange(tail_len) / SAMPLE_RATE_HZ
    tail = 0.25 * np.exp(-tt / 0.1) * np.sin(2 * np.pi * 350 * tt)
    b = a + burst_len
    out[b:b + tail_len] += tail[: max(0, min(tail_len, n - b))]
    return out


def fixture_weights(n_frames: int = 267, seed: int = 7, dense_bias: float = 0.0,
                    dense_scale: float = 0.3) -> ModelWeights:
    """Seeded random weights with sane scales for the fixed architecture."""
    rng = np.random.default_rng(seed)

    def conv(cin: int, cout: int) -> ConvLayer:
        k = rng.normal(0.0, np.sqrt(2.0 / (9 * cin)), (3, 3, cin, cout))
        return ConvLayer(kernel=k, bias=rng.normal(0.0, 0.05, cout))

    bn = BatchNormParams(
        gamma=rng.uniform(0.8, 1.2, 40), beta=rng.normal(0.0, 0.1, 40),
        moving_mean=rng.normal(0.0, 0.5, 40), moving_var=rng.uniform(0.5, 1.5, 40),
        epsilon=1e-3,
    )
    dense = DenseLayer(kernel=rng.normal(0.0, dense_scale, (40, 1)),
                       bias=np.array([dense_bias]))
    return ModelWeights(conv1=conv(1, 16), conv2=conv(16, 32), conv3=conv(32, 40),
                        bn=bn, dense=dense, input_shape=(40, n_frames, 1))


def positive_weights(n_frames: int = 267, seed: int = 7) -> ModelWeights:
    """Weights biased to say cough for anything that reaches inference."""
    return fixture_weights(n_frames=n_frames, seed=seed,
                           dense_bias=4.0, dense_scale=0.01)


def identity_bn_weights(n_frames: int = 267, seed: int = 11) -> ModelWeights:
    """Random kernels, zero biases, pass-through batch norm."""
    rng = np.random.default_rng(seed)

    def conv(cin: int, cout: int) -> ConvLayer:
        return ConvLayer(kernel=rng.normal(0.0, 0.1, (3, 3, cin, cout)),
                         bias=np.zeros(cout))

    bn = BatchNormParams(gamma=np.ones(40), beta=np.zeros(40),
                         moving_mean=np.zeros(40), moving_var=np.ones(40), epsilon=0.0)
    return ModelWeights(conv1=conv(1, 16), conv2=conv(16, 32), conv3=conv(32, 40),
                        bn=bn, dense=DenseLayer(kernel=rng.normal(0.0, 0.3, (40, 1)),
                                                bias=np.array([0.0])),
                        input_shape=(40, n_frames, 1))
