"""Temporal motion segmentation between successive frames.

A pixel is declared moving when the mean absolute intensity difference
over its 3x3 neighborhood in two consecutive grayscale frames exceeds a
threshold. Comparison is strict, so ties go to background.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .frames import BinaryMask, GrayFrame, RgbFrame, neighborhood, to_gray

DEFAULT_THRESHOLD = 10.0


@dataclass(frozen=True, eq=False)
class MotionFrame:
    """Moving pixels of a frame: original colors on the mask, black elsewhere."""

    frame: RgbFrame
    mask: BinaryMask

    def __post_init__(self):
        if self.frame.pixels.shape[:2] != self.mask.bits.shape:
            raise ValidationError(
                f"frame {self.frame.pixels.shape[:2]} and mask {self.mask.bits.shape} "
                "differ in size"
            )
        if self.frame.pixels[~self.mask.bits].any():
            raise ValidationError("off-mask pixels must be black")


def motion_distance_map(prev: GrayFrame, cur: GrayFrame) -> np.ndarray:
    """Mean 3x3 neighborhood distance between two frames at every pixel.

    Windows are replicate-padded at the frame border. Returns an (H, W)
    float64 array of nonnegative distances.
    """
    if prev.values.shape != cur.values.shape:
        raise ValidationError(
            f"frame sizes differ: {prev.values.shape} vs {cur.values.shape}"
        )
    absdiff = np.abs(prev.values - cur.values)
    padded = np.pad(absdiff, 1, mode="edge")
    h, w = absdiff.shape
    total = np.zeros_like(absdiff)
    # accumulate the nine offsets in row-major order so results are
    # bit-identical to a per-pixel left-to-right summation
    for dy in range(3):
        for dx in range(3):
            total += padded[dy : dy + h, dx : dx + w]
    return total / 9.0


def mean_neighborhood_distance(prev: GrayFrame, cur: GrayFrame, w: int, h: int) -> float:
    """Mean 3x3 neighborhood distance at one pixel.

    Grayscale values are scalars, so the per-position distance is the
    absolute difference.
    """
    if prev.values.shape != cur.values.shape:
        raise ValidationError(
            f"frame sizes differ: {prev.values.shape} vs {cur.values.shape}"
        )
    prev_win = neighborhood(prev, w, h)
    cur_win = neighborhood(cur, w, h)
    total = 0.0
    for dy in range(3):
        for dx in range(3):
            total += abs(float(prev_win[dy, dx]) - float(cur_win[dy, dx]))
    return total / 9.0


def segment_motion(
    prev_rgb: RgbFrame, cur_rgb: RgbFrame, threshold: float = DEFAULT_THRESHOLD
) -> MotionFrame:
    """Segment pixels moving between two frames.

    A pixel keeps the current frame's RGB where the mean neighborhood
    distance strictly exceeds ``threshold`` and is black otherwise.
    """
    if threshold < 0:
        raise ValidationError(f"motion threshold must be >= 0, got {threshold}")
    if prev_rgb.pixels.shape != cur_rgb.pixels.shape:
        raise ValidationError(
            f"frame sizes differ: {prev_rgb.pixels.shape} vs {cur_rgb.pixels.shape}"
        )
    distances = motion_distance_map(to_gray(prev_rgb), to_gray(cur_rgb))
    bits = distances > threshold
    pixels = np.where(bits[:, :, None], cur_rgb.pixels, np.uint8(0))
    return MotionFrame(frame=RgbFrame(pixels), mask=BinaryMask(bits))
