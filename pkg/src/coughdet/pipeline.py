"""End-to-end detection pipeline and its configuration surface.

Per 1 s segment: gain control, band-pass, onset detection. Segments with
no onset peak never reach the network (silence and steady noise cost no
inference); gated-out segments score probability 0. Surviving segments
are featurized and classified, and the verdict stream is consolidated
into events.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable

from .audio import AudioSegment
from .events import (DEFAULT_MERGE_WINDOW_S, DEFAULT_TAIL_S, CoughEvent,
                     SegmentVerdict, consolidate)
from .mfcc import MfccConfig, build_mel_filterbank, mfcc
from .model import ModelWeights, forward
from .preprocess import (PreprocessConfig, agc, band_pass, normalize_strengths,
                         onset_strength, pick_peaks)
from .quantize import forward_quantized


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    mfcc: MfccConfig = field(default_factory=MfccConfig)
    weights_path: str = ""
    decision_threshold: float = 0.5
    merge_window_s: float = DEFAULT_MERGE_WINDOW_S
    tail_s: float = DEFAULT_TAIL_S

    def __post_init__(self):
        if not 0.0 <= self.decision_threshold <= 1.0:
            raise ConfigError("decision_threshold must be in [0, 1]")
        if self.merge_window_s < 0 or self.tail_s < 0:
            raise ConfigError("merge_window_s and tail_s must be >= 0")

    def fingerprint(self) -> str:
        """Stable digest of every parameter that affects output."""
        return hashlib.sha256(dump_config(self).encode("utf-8")).hexdigest()[:16]


# --- flat key = value config file --------------------------------------------

_CONFIG_SCHEMA = {
    "band_low_hz": (float, lambda c: c.preprocess.band_low_hz),
    "band_high_hz": (float, lambda c: c.preprocess.band_high_hz),
    "agc_target_rms": (float, lambda c: c.preprocess.agc_target_rms),
    "onset_threshold": (float, lambda c: c.preprocess.onset_threshold),
    "filter_order": (int, lambda c: c.preprocess.filter_order),
    "n_mfcc": (int, lambda c: c.mfcc.n_mfcc),
    "n_mel_filters": (int, lambda c: c.mfcc.n_mel_filters),
    "frame_length_ms": (float, lambda c: c.mfcc.frame_length_ms),
    "overlap_pct": (float, lambda c: c.mfcc.overlap_pct),
    "fmin_hz": (float, lambda c: c.mfcc.fmin_hz),
    "fmax_hz": (float, lambda c: c.mfcc.fmax_hz),
    "weights_path": (str, lambda c: c.weights_path),
    "decision_threshold": (float, lambda c: c.decision_threshold),
    "merge_window_s": (float, lambda c: c.merge_window_s),
    "tail_s": (float, lambda c: c.tail_s),
}


def dump_config(config: PipelineConfig) -> str:
    """Serialize to the flat `key = value` text format (one key per line)."""
    lines = [f"{key} = {getter(config)}" for key, (_, getter) in _CONFIG_SCHEMA.items()]
    return "\n".join(lines) + "\n"


def parse_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse the flat config format; unknown keys are errors."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected `key = value`, got {raw!r}")
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in _CONFIG_SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        caster = _CONFIG_SCHEMA[key][0]
        try:
            values[key] = caster(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return build_config(values, base)


def build_config(overrides: dict[str, object],
                 base: PipelineConfig | None = None) -> PipelineConfig:
    """Assemble a PipelineConfig from override values on top of a base."""
    base = base or PipelineConfig()
    merged = {key: getter(base) for key, (_, getter) in _CONFIG_SCHEMA.items()}
    for key, value in overrides.items():
        if key not in merged:
            raise ConfigError(f"unknown config key {key!r}")
        if value is not None:
            merged[key] = value
    return PipelineConfig(
        preprocess=PreprocessConfig(
            band_low_hz=merged["band_low_hz"],
            band_high_hz=merged["band_high_hz"],
            agc_target_rms=merged["agc_target_rms"],
            onset_threshold=merged["onset_threshold"],
            filter_order=int(merged["filter_order"]),
        ),
        mfcc=MfccConfig(
            n_mfcc=int(merged["n_mfcc"]),
            n_mel_filters=int(merged["n_mel_filters"]),
            frame_length_ms=merged["frame_length_ms"],
            overlap_pct=merged["overlap_pct"],
            fmin_hz=merged["fmin_hz"],
            fmax_hz=merged["fmax_hz"],
        ),
        weights_path=str(merged["weights_path"]),
        decision_threshold=merged["decision_threshold"],
        merge_window_s=merged["merge_window_s"],
        tail_s=merged["tail_s"],
    )


# --- segment-by-segment detection ---------------------------------------------


class Detector:
    """Stateless per-segment scorer; the filterbank is built once and shared."""

    def __init__(self, config: PipelineConfig, weights: ModelWeights):
        if weights.input_shape[1] != config.mfcc.n_frames:
            raise ConfigError(
                f"weights expect {weights.input_shape[1]} frames but the feature "
                f"configuration produces {config.mfcc.n_frames}"
            )
        self.config = config
        self.weights = weights
        self.filterbank = build_mel_filterbank(config.mfcc)
        self._infer = forward_quantized if weights.is_quantized else forward

    def score_segment(self, index: int, segment: AudioSegment) -> SegmentVerdict:
        cfg = self.config
        leveled = agc(segment, cfg.preprocess)
        banded = band_pass(leveled, cfg.preprocess)
        strengths = normalize_strengths(
            onset_strength(banded, cfg.mfcc, self.filterbank))
        peaks = pick_peaks(strengths, cfg.preprocess.onset_threshold)
        if not peaks:
            return SegmentVerdict(segment_index=index, probability=0.0)
        features = mfcc(banded, cfg.mfcc, self.filterbank)
        result = self._infer(features, self.weights, cfg.decision_threshold)
        return SegmentVerdict(segment_index=index, probability=result.probability,
                              onset_peaks=tuple(peaks))

    def run(self, segments: Iterable[AudioSegment]) -> list[SegmentVerdict]:
        return [self.score_segment(i, seg) for i, seg in enumerate(segments)]


def detect_events(segments: Iterable[AudioSegment], config: PipelineConfig,
                  weights: ModelWeights) -> tuple[list[CoughEvent], list[SegmentVerdict]]:
    """Score a segment stream and consolidate it into events."""
    detector = Detector(config, weights)
    verdicts = detector.run(segments)
    events = consolidate(verdicts, threshold=config.decision_threshold,
                         merge_window_s=config.merge_window_s, tail_s=config.tail_s)
    return events, verdicts


def event_report(events: list[CoughEvent], source: str,
                 config: PipelineConfig) -> dict:
    """JSON-ready event report with stream metadata."""
    return {
        "source": source,
        "config_fingerprint": config.fingerprint(),
        "event_count": len(events),
        "events": [
            {
                "start_s": round(e.start_s, 6),
                "end_s": round(e.end_s, 6),
                "confidence": round(e.confidence, 6),
                "merged_segment_count": e.merged_segment_count,
            }
            for e in events
        ],
    }
