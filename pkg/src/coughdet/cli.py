"""Command-line entry point.

Subcommands: detect, featurize, evaluate, budget, quantize, inspect.
A flat key=value config file sets shared parameters; --set flags override
file values. `detect` exits 0 when at least one event was found, 1 when
none were, and 2 on any error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import budget as budget_mod
from . import metrics as metrics_mod
from .audio import iter_segments, parse_wav, segment as segment_stream
from .mfcc import MfccConfig, feature_json, mfcc, write_feature_binary
from .model import conv_output_hw, load_weights, save_weights
from .pipeline import (Detector, PipelineConfig, build_config, detect_events,
                       dump_config, event_report, parse_config)
from .preprocess import agc, band_pass
from .quantize import quantize_model


def _load_pipeline_config(args) -> PipelineConfig:
    base = PipelineConfig()
    if getattr(args, "config", None):
        base = parse_config(Path(args.config).read_text(), base)
    overrides: dict[str, object] = {}
    for item in getattr(args, "set", None) or []:
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = _parse_override(key.strip(), value.strip())
    if getattr(args, "weights", None):
        overrides["weights_path"] = args.weights
    return build_config(overrides, base)


def _parse_override(key: str, value: str):
    from .pipeline import _CONFIG_SCHEMA

    if key not in _CONFIG_SCHEMA:
        raise ValueError(f"unknown config key {key!r}")
    return _CONFIG_SCHEMA[key][0](value)


def _read_weights(config: PipelineConfig):
    path = config.weights_path
    if not path:
        raise FileNotFoundError("no weights file given (use --weights or weights_path)")
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"weights file not found: {p}")
    return load_weights(p.read_bytes())


def _open_input(path: str):
    if path == "-":
        return io.BytesIO(sys.stdin.buffer.read())
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"input not found: {p}")
    return open(p, "rb")


def cmd_detect(args) -> int:
    config = _load_pipeline_config(args)
    if args.dump_config:
        print(dump_config(config), end="")
        return 0
    weights = _read_weights(config)
    with _open_input(args.input) as fp:
        events, _ = detect_events(iter_segments(fp), config, weights)
    report = event_report(events, source=args.input, config=config)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0 if events else 1


def cmd_featurize(args) -> int:
    config = _load_pipeline_config(args)
    with _open_input(args.input) as fp:
        stream = parse_wav(fp.read())
    segments = segment_stream(stream)
    if not 0 <= args.segment < len(segments):
        raise ValueError(f"segment {args.segment} out of range (stream has {len(segments)})")
    seg = segments[args.segment]
    if args.preprocess:
        seg = band_pass(agc(seg, config.preprocess), config.preprocess)
    matrix = mfcc(seg, config.mfcc)
    if args.json:
        text = feature_json(matrix)
        if args.output:
            Path(args.output).write_text(text + "\n")
        else:
            print(text)
    else:
        data = write_feature_binary(matrix)
        if args.output:
            Path(args.output).write_bytes(data)
        else:
            sys.stdout.buffer.write(data)
    return 0


def cmd_evaluate(args) -> int:
    config = _load_pipeline_config(args)
    weights = _read_weights(config)
    detector = Detector(config, weights)

    segment_counts = metrics_mod.ConfusionCounts()
    event_counts = metrics_mod.ConfusionCounts()
    rows = _read_manifest(Path(args.manifest))
    for path, label in rows:
        with open(path, "rb") as fp:
            segments = list(iter_segments(fp))
        verdicts = detector.run(segments)
        from .events import consolidate

        events = consolidate(verdicts, threshold=config.decision_threshold,
                             merge_window_s=config.merge_window_s, tail_s=config.tail_s)
        for verdict in verdicts:
            predicted = (metrics_mod.COUGH
                         if verdict.probability >= config.decision_threshold
                         else metrics_mod.NOT_COUGH)
            segment_counts = metrics_mod.accumulate(segment_counts, predicted, label)
        file_predicted = metrics_mod.COUGH if events else metrics_mod.NOT_COUGH
        event_counts = metrics_mod.accumulate(event_counts, file_predicted, label)

    segment_report = metrics_mod.metrics(segment_counts)
    event_report_ = metrics_mod.metrics(event_counts)
    payload = {
        "per_segment": segment_report.as_dict(),
        "per_file_events": event_report_.as_dict(),
        "files_evaluated": len(rows),
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    print(_metrics_table("per-segment", segment_report), file=sys.stderr)
    print(_metrics_table("per-file (events)", event_report_), file=sys.stderr)
    return 0


def _metrics_table(title: str, report) -> str:
    def show(v):
        return "undefined" if v is None else f"{100 * v:.2f}%"

    c = report.counts
    return (f"[{title}] tp={c.tp} tn={c.tn} fp={c.fp} fn={c.fn}  "
            f"SE={show(report.sensitivity)} SP={show(report.specificity)} "
            f"PPV={show(report.ppv)} NPV={show(report.npv)} F1={show(report.f1)}")


def _read_manifest(path: Path) -> list[tuple[str, str]]:
    """CSV rows of (wav path, label); labels: cough / not-cough / unknown."""
    alias = {"cough": metrics_mod.COUGH, "not-cough": metrics_mod.NOT_COUGH,
             "unknown": metrics_mod.NOT_COUGH}
    rows = []
    with open(path, newline="") as fp:
        for lineno, row in enumerate(csv.reader(fp), start=1):
            if not row or (lineno == 1 and row[0].strip().lower() == "path"):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}:{lineno}: expected `path,label`")
            label = row[1].strip().lower()
            if label not in alias:
                raise ValueError(f"{path}:{lineno}: unknown label {row[1]!r}")
            wav = row[0].strip()
            base = path.parent / wav
            rows.append((str(base if base.exists() else wav), alias[label]))
    return rows


def cmd_budget(args) -> int:
    scratch = args.scratch_kb
    if args.all or (args.frame_ms is None):
        reports = budget_mod.standard_table(scratch)
    else:
        config = MfccConfig(frame_length_ms=args.frame_ms,
                            overlap_pct=args.overlap_pct or 0.0)
        reports = [budget_mod.mfcc_budget(config, scratch)]
    print(budget_mod.format_table(reports, csv=args.csv))
    if args.weights:
        weights = load_weights(Path(args.weights).read_bytes())
        print()
        print(budget_mod.format_model_budget(budget_mod.model_budget(weights)))
    return 0


def cmd_quantize(args) -> int:
    weights = load_weights(Path(args.input).read_bytes())
    quantized = quantize_model(weights)
    Path(args.output).write_bytes(save_weights(quantized))
    from .model import weight_payload_bytes

    print(f"wrote {args.output}: payload "
          f"{weight_payload_bytes(quantized) / 1024:.2f} KB "
          f"(float was {weight_payload_bytes(weights) / 1024:.2f} KB)")
    return 0


def cmd_inspect(args) -> int:
    weights = load_weights(Path(args.input).read_bytes())
    h, w, c = weights.input_shape
    chain = [[h, w, c]]
    channels = [16, 32, 40]
    for f in channels:
        h, w = conv_output_hw(h, w)
        chain.append([h, w, f])
    info = {
        "parameter_count": weights.parameter_count(),
        "trainable_parameter_count": weights.trainable_parameter_count(),
        "quantized": weights.is_quantized,
        "input_shape": list(weights.input_shape),
        "shape_chain": chain + [[40], [40], [1]],
        "bn_epsilon": weights.bn.epsilon,
    }
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coughdet",
                                     description="Cough detection pipeline tools")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p, weights=True):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config value (repeatable)")
        if weights:
            p.add_argument("--weights", help="weight file (.cghw)")

    p = sub.add_parser("detect", help="detect cough events in a WAV stream")
    p.add_argument("input", help="WAV path, or - for stdin")
    p.add_argument("-o", "--output", help="write the JSON report here instead of stdout")
    p.add_argument("--dump-config", action="store_true",
                   help="print the effective configuration and exit")
    add_config_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("featurize", help="emit the MFCC feature image for one segment")
    p.add_argument("input", help="WAV path, or - for stdin")
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.add_argument("--segment", type=int, default=0, help="segment index (default 0)")
    p.add_argument("--json", action="store_true", help="emit JSON instead of binary")
    p.add_argument("--preprocess", action="store_true",
                   help="apply gain control and band-pass first (the detect path)")
    add_config_flags(p, weights=False)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("evaluate", help="score a labeled manifest (CSV: path,label)")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", help="write the JSON report here instead of stdout")
    add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("budget", help="memory/compute accounting tables")
    p.add_argument("--all", action="store_true",
                   help="print the full standard frame/overlap grid (default)")
    p.add_argument("--frame-ms", type=float, help="single custom frame length")
    p.add_argument("--overlap-pct", type=float, help="overlap for --frame-ms")
    p.add_argument("--scratch-kb", type=float, default=budget_mod.DEFAULT_SCRATCH_KB)
    p.add_argument("--csv", action="store_true", help="CSV instead of aligned text")
    p.add_argument("--weights", help="also report model memory and compute")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("quantize", help="convert a float weight file to int8")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("inspect", help="print weight file facts as JSON")
    p.add_argument("input")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 2
    except Exception as exc:  # surface module errors with context, exit 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
