#!/usr/bin/env python3
"""Sweep the frame-length/overlap grid: budget numbers plus a live run.

Prints the full budget table, then (given weights and a WAV) runs the
detector at each configuration whose frame count matches the weights, so
memory cost and detection behavior can be compared side by side.
"""

import argparse
import json
import time
from pathlib import Path

from coughdet.audio import iter_segments
from coughdet.budget import format_table, standard_table
from coughdet.mfcc import MfccConfig
from coughdet.model import load_weights
from coughdet.pipeline import PipelineConfig, build_config, detect_events


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--weights", help=".cghw file; enables the live sweep")
    parser.add_argument("--wav", help="input file for the live sweep")
    args = parser.parse_args()

    print(format_table(standard_table()))

    if not (args.weights and args.wav):
        return
    weights = load_weights(Path(args.weights).read_bytes())
    pinned_frames = weights.input_shape[1]
    print(f"\nweights pinned to {pinned_frames} frames; running matching configs:")
    for frame_ms in (5, 20, 35, 50, 70):
        for overlap in (0, 25):
            mfcc_config = MfccConfig(frame_length_ms=frame_ms, overlap_pct=overlap)
            if mfcc_config.n_frames != pinned_frames:
                continue
            config = build_config({"frame_length_ms": float(frame_ms),
                                   "overlap_pct": float(overlap)})
            start = time.monotonic()
            with open(args.wav, "rb") as fp:
                events, verdicts = detect_events(iter_segments(fp), config, weights)
            elapsed = time.monotonic() - start
            summary = [{"start_s": round(e.start_s, 3), "end_s": round(e.end_s, 3)}
                       for e in events]
            print(f"  {frame_ms} ms / {overlap}%: {len(events)} events in "
                  f"{elapsed:.2f} s  {json.dumps(summary)}")


if __name__ == "__main__":
    main()
