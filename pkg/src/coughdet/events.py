"""Consolidation of per-segment verdicts into timestamped cough events.

A cough lasts 0.25 to 1 s, so one can straddle the fixed 1 s segmentation
boundary and show up as two positive segments. Consecutive positives are
merged into a single event when the later segment's first onset peak sits
close enough to the boundary to be the continuation of the earlier sound.
"""

from __future__ import annotations

from dataclasses import dataclass

from .preprocess import OnsetPeak

SEGMENT_DURATION_S = 1.0
DEFAULT_MERGE_WINDOW_S = 0.4  # onset this close to the boundary continues the event
DEFAULT_TAIL_S = 0.45  # decay allowance past the final onset


class NonContiguousSegments(ValueError):
    pass


@dataclass(frozen=True)
class SegmentVerdict:
    """Inference output plus onset evidence for one 1 s segment."""

    segment_index: int
    probability: float
    onset_peaks: tuple[OnsetPeak, ...] = ()

    def __post_init__(self):
        if self.segment_index < 0:
            raise ValueError("segment_index must be >= 0")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability {self.probability} outside [0, 1]")


@dataclass(frozen=True)
class CoughEvent:
    start_s: float
    end_s: float
    confidence: float
    merged_segment_count: int = 1

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise ValueError(f"event must span time: [{self.start_s}, {self.end_s}]")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")
        if self.merged_segment_count < 1:
            raise ValueError("merged_segment_count must be >= 1")


@dataclass
class _OpenEvent:
    start_s: float
    end_s: float
    confidence: float
    segments: int
    last_index: int

    def close(self) -> CoughEvent:
        return CoughEvent(start_s=self.start_s, end_s=self.end_s,
                          confidence=self.confidence, merged_segment_count=self.segments)


def consolidate(verdicts: list[SegmentVerdict], threshold: float = 0.5,
                merge_window_s: float = DEFAULT_MERGE_WINDOW_S,
                tail_s: float = DEFAULT_TAIL_S) -> list[CoughEvent]:
    """Fold ordered verdicts into non-overlapping, time-ordered events.

    A positive verdict (probability >= threshold) spans from its first
    onset peak to its last onset peak plus tail_s; with no peaks it spans
    the whole segment (inference outranks onset absence, since onset
    gating already ran upstream). A positive immediately following another
    positive merges into it when its first onset peak lies within
    merge_window_s of the shared boundary. Merged confidence is the max of
    the members', so a boundary-split cough is not penalized for its
    weaker half.
    """
    for prev, cur in zip(verdicts, verdicts[1:]):
        if cur.segment_index != prev.segment_index + 1:
            raise NonContiguousSegments(
                f"segment {cur.segment_index} follows {prev.segment_index}"
            )

    events: list[CoughEvent] = []
    open_event: _OpenEvent | None = None

    for verdict in verdicts:
        if verdict.probability < threshold:
            continue
        base = verdict.segment_index * SEGMENT_DURATION_S
        peaks = verdict.onset_peaks
        if peaks:
            start = base + peaks[0].time_s
            end = min(base + peaks[-1].time_s + tail_s,
                      base + SEGMENT_DURATION_S + tail_s)
        else:
            start = base
            end = base + SEGMENT_DURATION_S

        merge = (
            open_event is not None
            and verdict.segment_index == open_event.last_index + 1
            and peaks
            and peaks[0].time_s <= merge_window_s
        )
        if merge:
            open_event.end_s = max(open_event.end_s, end)
            open_event.confidence = max(open_event.confidence, verdict.probability)
            open_event.segments += 1
            open_event.last_index = verdict.segment_index
        else:
            if open_event is not None:
                events.append(open_event.close())
            open_event = _OpenEvent(start_s=start, end_s=end,
                                    confidence=verdict.probability, segments=1,
                                    last_index=verdict.segment_index)
    if open_event is not None:
        events.append(open_event.close())

    # The tail allowance may run past the next event's onset; snap it back
    # so events never overlap.
    for i in range(len(events) - 1):
        if events[i].end_s > events[i + 1].start_s:
            events[i] = CoughEvent(
                start_s=events[i].start_s, end_s=events[i + 1].start_s,
                confidence=events[i].confidence,
                merged_segment_count=events[i].merged_segment_count,
            )
    return events
