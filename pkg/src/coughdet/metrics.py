"""Confusion-matrix accumulation, rate metrics, and stratified splitting.

Rates with a zero denominator are reported as None (undefined), never
coerced to 0 or 1.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Sequence

COUGH = "cough"
NOT_COUGH = "not-cough"


class EmptyClass(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("counts must be non-negative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(tp=self.tp + other.tp, tn=self.tn + other.tn,
                               fp=self.fp + other.fp, fn=self.fn + other.fn)

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class EvalReport:
    counts: ConfusionCounts
    sensitivity: float | None
    specificity: float | None
    ppv: float | None
    npv: float | None
    f1: float | None

    def as_dict(self) -> dict[str, Any]:
        return {
            "counts": {"tp": self.counts.tp, "tn": self.counts.tn,
                       "fp": self.counts.fp, "fn": self.counts.fn},
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "ppv": self.ppv,
            "npv": self.npv,
            "f1": self.f1,
        }


def accumulate(counts: ConfusionCounts, predicted: str, actual: str) -> ConfusionCounts:
    """Add one (predicted, actual) pair; labels are COUGH or NOT_COUGH."""
    for label in (predicted, actual):
        if label not in (COUGH, NOT_COUGH):
            raise ValueError(f"label must be {COUGH!r} or {NOT_COUGH!r}, got {label!r}")
    if actual == COUGH:
        if predicted == COUGH:
            return counts + ConfusionCounts(tp=1)
        return counts + ConfusionCounts(fn=1)
    if predicted == COUGH:
        return counts + ConfusionCounts(fp=1)
    return counts + ConfusionCounts(tn=1)


def _rate(numerator: int, denominator: int) -> float | None:
    return numerator / denominator if denominator else None


def metrics(counts: ConfusionCounts) -> EvalReport:
    """Sensitivity, specificity, PPV, NPV, and F1 from raw counts.

        SE = TP/(TP+FN)    SP = TN/(TN+FP)
        PPV = TP/(TP+FP)   NPV = TN/(TN+FN)
        F1 = 2*SE*PPV/(SE+PPV)
    """
    se = _rate(counts.tp, counts.tp + counts.fn)
    sp = _rate(counts.tn, counts.tn + counts.fp)
    ppv = _rate(counts.tp, counts.tp + counts.fp)
    npv = _rate(counts.tn, counts.tn + counts.fn)
    if se is None or ppv is None or (se + ppv) == 0:
        f1 = None
    else:
        f1 = 2.0 * se * ppv / (se + ppv)
    return EvalReport(counts=counts, sensitivity=se, specificity=sp,
                      ppv=ppv, npv=npv, f1=f1)


def apportion(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of n items; ties go to the larger split."""
    quotas = [n * f for f in fractions]
    sizes = [int(q) for q in quotas]
    order = sorted(range(len(fractions)),
                   key=lambda i: (quotas[i] - sizes[i], fractions[i]),
                   reverse=True)
    for i in order[: n - sum(sizes)]:
        sizes[i] += 1
    return sizes


def stratified_split(
    samples: Sequence[tuple[Any, Hashable]],
    fractions: tuple[float, float, float] = (0.72, 0.08, 0.20),
    seed: int = 0,
) -> tuple[list[tuple[Any, Hashable]], list[tuple[Any, Hashable]], list[tuple[Any, Hashable]]]:
    """Deterministic per-class train/validation/test partition.

    Each class is shuffled independently and apportioned so every split's
    class proportions are within one sample of the requested fractions.
    Splits are disjoint and exhaustive.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    by_class: dict[Hashable, list[tuple[Any, Hashable]]] = {}
    for item in samples:
        by_class.setdefault(item[1], []).append(item)
    if not by_class:
        raise EmptyClass("no samples given")
    for label, members in by_class.items():
        if not members:
            raise EmptyClass(f"class {label!r} is empty")

    rng = random.Random(seed)
    splits: tuple[list, list, list] = ([], [], [])
    for label in sorted(by_class, key=repr):
        members = list(by_class[label])
        rng.shuffle(members)
        sizes = apportion(len(members), fractions)
        offset = 0
        for split, size in zip(splits, sizes):
            split.extend(members[offset:offset + size])
            offset += size
    return splits
