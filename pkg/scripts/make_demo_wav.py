#!/usr/bin/env python3
"""Synthesize a demo WAV: silence with cough-like bursts at chosen times.

Each burst is a sharp wideband transient with a short decaying voiced
tail, which is enough to trip the onset gate and give the detector
something to classify.
"""

import argparse
import struct
from pathlib import Path

import numpy as np

SAMPLE_RATE = 16000


def cough_burst(rng: np.random.Generator) -> np.ndarray:
    burst_len = int(0.08 * SAMPLE_RATE)
    t = np.arange(burst_len) / SAMPLE_RATE
    burst = 0.8 * np.exp(-t / 0.02) * rng.uniform(-1, 1, burst_len)
    tail_len = int(0.25 * SAMPLE_RATE)
    tt = np.arange(tail_len) / SAMPLE_RATE
    tail = 0.25 * np.exp(-tt / 0.1) * np.sin(2 * np.pi * 350 * tt)
    return np.concatenate([burst, tail])


def write_wav(path: Path, samples: np.ndarray):
    ints = np.clip(np.round(samples * 32768.0), -32768, 32767).astype("<i2")
    data = ints.tobytes()
    fmt = struct.pack("<HHIIHH", 1, 1, SAMPLE_RATE, SAMPLE_RATE * 2, 2, 16)
    body = (struct.pack("<4sI", b"fmt ", len(fmt)) + fmt
            + struct.pack("<4sI", b"data", len(data)) + data)
    path.write_bytes(struct.pack("<4sI4s", b"RIFF", 4 + len(body), b"WAVE") + body)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", help="path for the .wav file")
    parser.add_argument("--duration", type=float, default=5.0, help="seconds")
    parser.add_argument("--bursts", type=float, nargs="*", default=[1.3, 3.6],
                        help="burst onset times in seconds (none for silence)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    samples = np.zeros(int(args.duration * SAMPLE_RATE))
    for onset in args.bursts:
        clip = cough_burst(rng)
        a = int(onset * SAMPLE_RATE)
        b = min(len(samples), a + len(clip))
        samples[a:b] += clip[: b - a]
    write_wav(Path(args.output), np.clip(samples, -1, 1))
    print(f"wrote {args.output}: {args.duration} s, bursts at {args.bursts}")


if __name__ == "__main__":
    main()
