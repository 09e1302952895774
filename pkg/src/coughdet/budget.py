"""Static memory and compute accounting for the detection pipeline.

Feature memory is hop-grid arithmetic: 40 coefficients per frame, four
bytes each, plus a fixed scratch allowance for onset strength and
intermediate buffers. Model numbers come from tensor shapes alone.

The published estimate for this network is 13.26M multiply-accumulates
and 3.26K additions; stride-2 valid 3x3 convolutions over the published
activation shapes give about 4.58M MACs instead. Reports carry both the
computed value and the published one side by side rather than silently
matching either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .mfcc import MfccConfig
from .model import ModelWeights, conv_output_hw, weight_payload_bytes, _shape

DEFAULT_SCRATCH_KB = 8.4
BYTES_PER_COEFFICIENT = 4  # float32 features

# Published figures for the published 40 x 267 configuration.
PUBLISHED_MAC_ESTIMATE = 13_260_000
PUBLISHED_ADD_ESTIMATE = 3_260

# The (frame length ms, overlap %) grid evaluated for the detector.
STANDARD_TABLE_ROWS = (
    (5, 0), (5, 25), (20, 0), (20, 25), (35, 0),
    (35, 25), (50, 0), (50, 25), (70, 0), (70, 25),
)


@dataclass(frozen=True)
class BudgetReport:
    """Feature and/or model resource accounting, all from static inputs."""

    frame_length_ms: float | None = None
    overlap_pct: float | None = None
    hop_ms: float | None = None
    n_frames: int | None = None
    total_mfcc_coefficients: int | None = None
    mfcc_memory_kb: float | None = None
    preprocessing_memory_kb: float | None = None
    weights_memory_kb_float: float | None = None
    weights_memory_kb_int8: float | None = None
    mac_count: int | None = None
    add_count: int | None = None


def mfcc_budget(config: MfccConfig, scratch_kb: float = DEFAULT_SCRATCH_KB) -> BudgetReport:
    """Feature memory for one configuration (KB means KiB throughout)."""
    hop_ms = config.hop_ms
    n_frames = math.ceil(1000.0 / hop_ms)
    coefficients = config.n_mfcc * n_frames
    mfcc_kb = coefficients * BYTES_PER_COEFFICIENT / 1024
    return BudgetReport(
        frame_length_ms=config.frame_length_ms,
        overlap_pct=config.overlap_pct,
        hop_ms=hop_ms,
        n_frames=n_frames,
        total_mfcc_coefficients=coefficients,
        mfcc_memory_kb=mfcc_kb,
        preprocessing_memory_kb=mfcc_kb + scratch_kb,
    )


def conv_chain_compute(h: int, w: int, filter_plan: list[int],
                       dense_inputs: int, bn_size: int = 0) -> tuple[int, int]:
    """(MACs, additions) for a stride-2 valid 3x3 conv stack plus dense head.

    An empty filter plan degenerates to the dense product count alone.
    """
    macs = 0
    adds = 0
    in_c = 1
    for filters in filter_plan:
        h, w = conv_output_hw(h, w)
        macs += h * w * filters * (9 * in_c)
        adds += h * w * filters  # one bias add per output element
        in_c = filters
    macs += dense_inputs * 1
    adds += 1 if dense_inputs else 0  # dense bias
    adds += 2 * bn_size  # subtract mean, add beta
    return macs, adds


def model_budget(weights: ModelWeights) -> BudgetReport:
    """Weight memory and per-inference compute, derived from shapes."""
    param_count = weights.parameter_count()

    h, w, _ = weights.input_shape
    plan = [int(_shape(layer.kernel)[3])
            for layer in (weights.conv1, weights.conv2, weights.conv3)]
    macs, adds = conv_chain_compute(h, w, plan,
                                    dense_inputs=int(_shape(weights.dense.kernel)[0]),
                                    bn_size=weights.bn.gamma.size)

    quantized_payload = weight_payload_bytes(
        weights if weights.is_quantized else _quantized_view(weights))
    return BudgetReport(
        weights_memory_kb_float=param_count * 4 / 1024,
        weights_memory_kb_int8=quantized_payload / 1024,
        mac_count=macs,
        add_count=adds,
    )


def _quantized_view(weights: ModelWeights) -> ModelWeights:
    from .quantize import quantize_model

    return quantize_model(weights)


def standard_table(scratch_kb: float = DEFAULT_SCRATCH_KB) -> list[BudgetReport]:
    """Budget rows for the full evaluated frame-length/overlap grid."""
    return [
        mfcc_budget(MfccConfig(frame_length_ms=f, overlap_pct=o), scratch_kb)
        for f, o in STANDARD_TABLE_ROWS
    ]


def format_number(value: float | int) -> str:
    """Render with full precision but no trailing zeros (5 is '5', not '5.0')."""
    if isinstance(value, int):
        return str(value)
    text = f"{value:.5f}".rstrip("0").rstrip(".")
    return text if text else "0"


def format_table(reports: list[BudgetReport], csv: bool = False) -> str:
    headers = ["frame_ms", "overlap_pct", "hop_ms", "n_frames",
               "total_coefficients", "mfcc_kb", "preprocessing_kb"]
    rows = [
        [format_number(r.frame_length_ms), format_number(r.overlap_pct),
         format_number(r.hop_ms), format_number(r.n_frames),
         format_number(r.total_mfcc_coefficients), format_number(r.mfcc_memory_kb),
         format_number(r.preprocessing_memory_kb)]
        for r in reports
    ]
    if csv:
        return "\n".join([",".join(headers)] + [",".join(row) for row in rows])
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)


def format_model_budget(report: BudgetReport) -> str:
    lines = [
        f"weights memory, float32: {report.weights_memory_kb_float:.2f} KB",
        f"weights payload, int8:   {report.weights_memory_kb_int8:.2f} KB",
        f"MACs per inference (computed from shapes): {report.mac_count:,}",
        f"MACs per inference (published estimate):   {PUBLISHED_MAC_ESTIMATE:,}",
        f"additions per inference (computed from shapes): {report.add_count:,}",
        f"additions per inference (published estimate):   {PUBLISHED_ADD_ESTIMATE:,}",
    ]
    return "\n".join(lines)
