"""Pixel-level precision, recall and F-score against shadow ground truth.

Scoring is per frame and per class (cast, self), then averaged over the
evaluated frames of a dataset. A frame-class with nothing predicted and
nothing to find is skipped from the averages: there is no meaningful
score to assign it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ValidationError
from .frames import GroundTruth
from .shadows import ClassMap, ShadowClass

_CLASS_NAMES = {ShadowClass.CAST_SHADOW: "cast", ShadowClass.SELF_SHADOW: "self"}


@dataclass(frozen=True)
class ConfusionCounts:
    """Pixel confusion counts for one frame and one class."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValidationError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ClassScore:
    """Precision, recall and their harmonic mean, each in [0, 1]."""

    precision: float
    recall: float
    f: float


@dataclass(frozen=True)
class FrameScore:
    """Score record for one frame and one shadow class.

    ``result`` is None when the record is skipped from aggregation
    (no prediction and empty ground truth for this class).
    """

    frame_id: str
    shadow_class: ShadowClass
    counts: ConfusionCounts
    result: ClassScore | None


@dataclass(frozen=True)
class MeanScore:
    """Arithmetic means of per-frame scores for one class."""

    precision: float
    recall: float
    f: float
    frames: int


@dataclass(frozen=True)
class DatasetReport:
    """Per-frame records plus per-class means for one dataset."""

    dataset: str
    records: tuple[FrameScore, ...]
    means: dict[ShadowClass, MeanScore | None]


def confusion(pred: ClassMap, truth: GroundTruth, shadow_class: ShadowClass) -> ConfusionCounts:
    """Count pixel agreement between a predicted class and its ground truth."""
    if shadow_class not in _CLASS_NAMES:
        raise ValidationError(f"confusion is defined for shadow classes, got {shadow_class!r}")
    gt_bits = (
        truth.cast_shadow.bits
        if shadow_class is ShadowClass.CAST_SHADOW
        else truth.self_shadow.bits
    )
    if pred.labels.shape != gt_bits.shape:
        raise ValidationError(
            f"prediction {pred.labels.shape} and ground truth {gt_bits.shape} differ in size"
        )
    pred_bits = pred.mask_of(shadow_class)
    tp = int((pred_bits & gt_bits).sum())
    fp = int((pred_bits & ~gt_bits).sum())
    fn = int((~pred_bits & gt_bits).sum())
    tn = int((~pred_bits & ~gt_bits).sum())
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def score(counts: ConfusionCounts) -> ClassScore:
    """Precision, recall and F-score from confusion counts.

    Degenerate denominators never divide by zero: an empty denominator
    yields 0 for that component, and F is 0 when precision + recall is 0.
    """
    retrieved = counts.tp + counts.fp
    relevant = counts.tp + counts.fn
    precision = counts.tp / retrieved if retrieved > 0 else 0.0
    recall = counts.tp / relevant if relevant > 0 else 0.0
    f = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return ClassScore(precision=precision, recall=recall, f=f)


def is_skipped(counts: ConfusionCounts) -> bool:
    """True when a frame-class has nothing predicted and nothing to find."""
    return counts.tp + counts.fp == 0 and counts.tp + counts.fn == 0


def evaluate_frame(frame_id: str, pred: ClassMap, truth: GroundTruth) -> list[FrameScore]:
    """Score one frame's prediction for both shadow classes."""
    records = []
    for shadow_class in (ShadowClass.CAST_SHADOW, ShadowClass.SELF_SHADOW):
        counts = confusion(pred, truth, shadow_class)
        result = None if is_skipped(counts) else score(counts)
        records.append(
            FrameScore(
                frame_id=frame_id, shadow_class=shadow_class, counts=counts, result=result
            )
        )
    return records


def aggregate(records: Sequence[FrameScore], dataset: str = "dataset") -> DatasetReport:
    """Average per-frame scores into a dataset report.

    Means are arithmetic over the evaluated (non-skipped) frames of each
    class; a class with no evaluated frames gets no mean.
    """
    if len(records) == 0:
        raise ValidationError("cannot aggregate an empty set of frame scores")
    means: dict[ShadowClass, MeanScore | None] = {}
    for shadow_class in (ShadowClass.CAST_SHADOW, ShadowClass.SELF_SHADOW):
        scored = [
            r.result
            for r in records
            if r.shadow_class is shadow_class and r.result is not None
        ]
        if not scored:
            means[shadow_class] = None
            continue
        n = len(scored)
        means[shadow_class] = MeanScore(
            precision=sum(s.precision for s in scored) / n,
            recall=sum(s.recall for s in scored) / n,
            f=sum(s.f for s in scored) / n,
            frames=n,
        )
    return DatasetReport(dataset=dataset, records=tuple(records), means=means)


def format_report(report: DatasetReport) -> str:
    """Render a report as structured text.

    One line per frame and class with the raw counts and scores, then a
    summary block with per-class means and a final dataset row giving the
    mean F per class.
    """
    lines = []
    for r in report.records:
        name = _CLASS_NAMES[r.shadow_class]
        prefix = (
            f"frame={r.frame_id} class={name} "
            f"tp={r.counts.tp} fp={r.counts.fp} fn={r.counts.fn}"
        )
        if r.result is None:
            lines.append(f"{prefix} skipped=1")
        else:
            lines.append(
                f"{prefix} precision={r.result.precision:.6f} "
                f"recall={r.result.recall:.6f} f={r.result.f:.6f}"
            )
    for shadow_class in (ShadowClass.CAST_SHADOW, ShadowClass.SELF_SHADOW):
        name = _CLASS_NAMES[shadow_class]
        mean = report.means.get(shadow_class)
        if mean is None:
            lines.append(f"summary dataset={report.dataset} class={name} frames=0")
        else:
            lines.append(
                f"summary dataset={report.dataset} class={name} frames={mean.frames} "
                f"mean_precision={mean.precision:.6f} mean_recall={mean.recall:.6f} "
                f"mean_f={mean.f:.6f}"
            )
    cast_mean = report.means.get(ShadowClass.CAST_SHADOW)
    self_mean = report.means.get(ShadowClass.SELF_SHADOW)
    cast_f = f"{cast_mean.f:.6f}" if cast_mean else "n/a"
    self_f = f"{self_mean.f:.6f}" if self_mean else "n/a"
    lines.append(f"summary dataset={report.dataset} mean_f_cast={cast_f} mean_f_self={self_f}")
    return "\n".join(lines) + "\n"
