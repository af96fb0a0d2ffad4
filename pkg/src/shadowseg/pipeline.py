"""End-to-end orchestration: motion, cleanup, shadow classification, scoring.

Frames are consumed as consecutive pairs; every output is named after the
second frame of its pair, which also provides the colors. Outputs are
deterministic for a fixed configuration and input set.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import ValidationError
from .frames import (
    GroundTruth,
    RgbFrame,
    load_frame,
    load_ground_truth,
    save_frame,
    save_mask,
)
from .metrics import DatasetReport, FrameScore, aggregate, evaluate_frame, format_report
from .motion import DEFAULT_THRESHOLD, segment_motion
from .postprocess import HoleFilledFrame, StructuringElement, erode, fill_holes, superimpose
from .shadows import (
    DEFAULT_PERCENTILE,
    ClassMap,
    EigenSumMap,
    ShadowIntervals,
    calibrate_intervals,
    classify_shadows,
    eigen_sum_map,
)

_FRAME_SUFFIXES = {".png", ".jpg", ".jpeg"}

MOTION_SUFFIX = ".motion.png"
FILLED_SUFFIX = ".filled.png"
DUALMAP_SUFFIX = ".dualmap.png"
CLASSES_SUFFIX = ".classes.png"
CAST_GT_SUFFIX = ".cast.png"
SELF_GT_SUFFIX = ".self.png"
REPORT_NAME = "report.txt"


@dataclass
class PipelineConfig:
    """Everything one pipeline run needs.

    ``intervals`` may be None when ``calibrate`` is set, in which case the
    intervals are fitted from the ground truth before classification.
    """

    input_dir: Path
    output_dir: Path
    frame_start: int = 0
    frame_stop: int | None = None
    motion_threshold: float = DEFAULT_THRESHOLD
    erosion_passes: int = 1
    structuring_element: StructuringElement = field(default_factory=StructuringElement)
    intervals: ShadowIntervals | None = None
    calibrate: bool = False
    calibration_percentile: float = DEFAULT_PERCENTILE
    gt_dir: Path | None = None
    emit_motion: bool = True
    emit_filled: bool = True
    emit_dualmap: bool = True
    emit_report: bool = True
    dataset_name: str = ""

    def __post_init__(self):
        self.input_dir = Path(self.input_dir)
        self.output_dir = Path(self.output_dir)
        if self.gt_dir is not None:
            self.gt_dir = Path(self.gt_dir)
        if not self.dataset_name:
            self.dataset_name = self.input_dir.name or "dataset"

    def validate(self) -> None:
        """Raise ValidationError naming the offending field."""
        if self.motion_threshold < 0:
            raise ValidationError(
                f"motion_threshold: must be >= 0, got {self.motion_threshold}"
            )
        if self.erosion_passes < 1:
            raise ValidationError(
                f"erosion_passes: must be >= 1, got {self.erosion_passes}"
            )
        if not 0.0 < self.calibration_percentile < 50.0:
            raise ValidationError(
                "calibration_percentile: must be in (0, 50), "
                f"got {self.calibration_percentile}"
            )
        if self.frame_start < 0:
            raise ValidationError(f"frame_start: must be >= 0, got {self.frame_start}")
        if self.frame_stop is not None and self.frame_stop <= self.frame_start:
            raise ValidationError(
                f"frame_stop: empty frame range [{self.frame_start}, {self.frame_stop})"
            )
        if self.intervals is None and not self.calibrate:
            raise ValidationError(
                "intervals: give explicit intervals or enable calibration"
            )
        if self.calibrate and self.gt_dir is None:
            raise ValidationError("gt_dir: calibration needs ground truth")


@dataclass(frozen=True)
class PipelineResult:
    """What a run produced: fitted/used intervals, report, written paths."""

    intervals: ShadowIntervals
    report: DatasetReport | None
    outputs: tuple[Path, ...]


@dataclass(frozen=True)
class SweepEntry:
    """Scores for one (threshold, intervals) combination."""

    motion_threshold: float
    intervals: ShadowIntervals
    mean_cast_f: float | None
    mean_self_f: float | None
    mean_f: float


def list_frames(input_dir: Path) -> list[Path]:
    """Sorted frame files of a sequence directory."""
    input_dir = Path(input_dir)
    frames = sorted(
        p
        for p in input_dir.iterdir()
        if p.suffix.lower() in _FRAME_SUFFIXES and not _is_derived(p.name)
    )
    return frames


def _is_derived(name: str) -> bool:
    lowered = name.lower()
    return any(
        lowered.endswith(sfx)
        for sfx in (
            MOTION_SUFFIX,
            FILLED_SUFFIX,
            DUALMAP_SUFFIX,
            CLASSES_SUFFIX,
            CAST_GT_SUFFIX,
            SELF_GT_SUFFIX,
        )
    )


def _select_frames(cfg: PipelineConfig) -> list[Path]:
    if not cfg.input_dir.is_dir():
        raise FileNotFoundError(f"frame directory not found: {cfg.input_dir}")
    frames = list_frames(cfg.input_dir)[cfg.frame_start : cfg.frame_stop]
    if len(frames) < 2:
        raise FileNotFoundError(
            f"need at least two frames in range, found {len(frames)} in {cfg.input_dir}"
        )
    return frames


def _ground_truth_for(gt_dir: Path | None, stem: str) -> GroundTruth | None:
    if gt_dir is None:
        return None
    cast_path = gt_dir / f"{stem}{CAST_GT_SUFFIX}"
    self_path = gt_dir / f"{stem}{SELF_GT_SUFFIX}"
    if not cast_path.exists() or not self_path.exists():
        return None
    return load_ground_truth(cast_path, self_path)


@dataclass(frozen=True)
class _Stage:
    """Per-pair intermediate products shared by run, calibrate and sweep."""

    stem: str
    cur: RgbFrame
    motion_mask: np.ndarray
    cleaned: HoleFilledFrame
    eig_map: EigenSumMap
    truth: GroundTruth | None


def _stages(cfg: PipelineConfig, frames: list[Path]) -> Iterator[_Stage]:
    prev = load_frame(frames[0])
    for path in frames[1:]:
        cur = load_frame(path)
        stem = path.stem
        moving = segment_motion(prev, cur, cfg.motion_threshold)
        filled = fill_holes(moving.mask)
        eroded = erode(filled, cfg.structuring_element, cfg.erosion_passes)
        cleaned = superimpose(cur, eroded)
        yield _Stage(
            stem=stem,
            cur=cur,
            motion_mask=moving.mask.bits,
            cleaned=cleaned,
            eig_map=eigen_sum_map(cleaned),
            truth=_ground_truth_for(cfg.gt_dir, stem),
        )
        prev = cur


def fit_intervals(cfg: PipelineConfig) -> ShadowIntervals:
    """Calibrate shadow intervals from the configured frames and ground truth."""
    fit_cfg = replace(cfg, calibrate=True, intervals=None)
    fit_cfg.validate()
    frames = _select_frames(fit_cfg)
    maps = []
    truths = []
    for stage in _stages(fit_cfg, frames):
        if stage.truth is not None:
            maps.append(stage.eig_map)
            truths.append(stage.truth)
    if not maps:
        raise ValidationError(f"gt_dir: no ground-truth pairs found under {cfg.gt_dir}")
    return calibrate_intervals(maps, truths, cfg.calibration_percentile)


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Run the full pipeline and write the configured artifacts.

    Stops at the first error. Returns the intervals actually used, the
    dataset report when ground truth was available, and the list of files
    written (in write order).
    """
    cfg.validate()
    frames = _select_frames(cfg)
    intervals = cfg.intervals
    if intervals is None:
        intervals = fit_intervals(cfg)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []
    records: list[FrameScore] = []
    for stage in _stages(cfg, frames):
        class_map, overlay = classify_shadows(stage.eig_map, stage.cleaned, intervals)
        if cfg.emit_motion:
            outputs.append(_write_mask(cfg.output_dir, stage.stem, MOTION_SUFFIX, stage.motion_mask))
        if cfg.emit_filled:
            outputs.append(
                _write_mask(cfg.output_dir, stage.stem, FILLED_SUFFIX, stage.cleaned.mask.bits)
            )
        if cfg.emit_dualmap:
            dualmap_path = cfg.output_dir / f"{stage.stem}{DUALMAP_SUFFIX}"
            save_frame(overlay, dualmap_path)
            outputs.append(dualmap_path)
            classes_path = cfg.output_dir / f"{stage.stem}{CLASSES_SUFFIX}"
            _write_labels(class_map, classes_path)
            outputs.append(classes_path)
        if cfg.emit_report and stage.truth is not None:
            records.extend(evaluate_frame(stage.stem, class_map, stage.truth))

    report = None
    if records:
        report = aggregate(records, dataset=cfg.dataset_name)
        report_path = cfg.output_dir / REPORT_NAME
        report_path.write_text(format_report(report), encoding="utf-8")
        outputs.append(report_path)
    return PipelineResult(intervals=intervals, report=report, outputs=tuple(outputs))


def _write_mask(output_dir: Path, stem: str, suffix: str, bits: np.ndarray) -> Path:
    from .frames import BinaryMask

    path = output_dir / f"{stem}{suffix}"
    save_mask(BinaryMask(bits), path)
    return path


def _write_labels(class_map: ClassMap, path: Path) -> None:
    from PIL import Image

    Image.fromarray(class_map.labels, "L").save(path, format="PNG")


def load_label_map(path: Path) -> ClassMap:
    """Read back a label map written next to a dual-map overlay."""
    from PIL import Image

    with Image.open(path) as img:
        labels = np.asarray(img.convert("L"))
    return ClassMap(labels)


def sweep(
    cfg: PipelineConfig,
    thresholds: list[float],
    candidates: list[ShadowIntervals],
) -> list[SweepEntry]:
    """Score every (motion threshold, intervals) combination against ground truth.

    Entries come back sorted by mean F descending; ties break on ascending
    (threshold, cast_min, self_min).
    """
    if cfg.gt_dir is None:
        raise ValidationError("gt_dir: sweep needs ground truth")
    if not thresholds:
        raise ValidationError("thresholds: need at least one value")
    if not candidates:
        raise ValidationError("candidates: need at least one intervals candidate")
    for t in thresholds:
        if t < 0:
            raise ValidationError(f"thresholds: must be >= 0, got {t}")

    base = replace(cfg, intervals=candidates[0], calibrate=False)
    base.validate()
    frames = _select_frames(base)

    entries = []
    for threshold in thresholds:
        run_cfg = replace(base, motion_threshold=threshold)
        per_candidate: list[list[FrameScore]] = [[] for _ in candidates]
        pairs_with_truth = 0
        for stage in _stages(run_cfg, frames):
            if stage.truth is None:
                continue
            pairs_with_truth += 1
            for i, candidate in enumerate(candidates):
                class_map, _ = classify_shadows(stage.eig_map, stage.cleaned, candidate)
                per_candidate[i].extend(evaluate_frame(stage.stem, class_map, stage.truth))
        if pairs_with_truth == 0:
            raise ValidationError(f"gt_dir: no ground-truth pairs found under {cfg.gt_dir}")
        for candidate, records in zip(candidates, per_candidate):
            report = aggregate(records, dataset=cfg.dataset_name)
            entries.append(_to_entry(threshold, candidate, report))
    entries.sort(
        key=lambda e: (-e.mean_f, e.motion_threshold, e.intervals.cast_min, e.intervals.self_min)
    )
    return entries


def _to_entry(threshold: float, intervals: ShadowIntervals, report: DatasetReport) -> SweepEntry:
    from .shadows import ShadowClass

    cast_mean = report.means.get(ShadowClass.CAST_SHADOW)
    self_mean = report.means.get(ShadowClass.SELF_SHADOW)
    available = [m.f for m in (cast_mean, self_mean) if m is not None]
    mean_f = sum(available) / len(available) if available else 0.0
    return SweepEntry(
        motion_threshold=threshold,
        intervals=intervals,
        mean_cast_f=cast_mean.f if cast_mean else None,
        mean_self_f=self_mean.f if self_mean else None,
        mean_f=mean_f,
    )


def format_sweep(entries: list[SweepEntry]) -> str:
    """Render ranked sweep results as structured text."""
    lines = []
    for rank, e in enumerate(entries, start=1):
        cast_f = f"{e.mean_cast_f:.6f}" if e.mean_cast_f is not None else "n/a"
        self_f = f"{e.mean_self_f:.6f}" if e.mean_self_f is not None else "n/a"
        lines.append(
            f"rank={rank} T={e.motion_threshold:g} "
            f"cast=[{e.intervals.cast_min:g},{e.intervals.cast_max:g}] "
            f"self=[{e.intervals.self_min:g},{e.intervals.self_max:g}] "
            f"mean_f={e.mean_f:.6f} mean_f_cast={cast_f} mean_f_self={self_f}"
        )
    return "\n".join(lines) + "\n"
