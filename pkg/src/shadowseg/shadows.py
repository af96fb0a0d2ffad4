"""Cast and self shadow classification from neighborhood eigenvalue sums.

Each blob pixel's 3x3 grayscale neighborhood is treated as a matrix and
the sum of its three eigenvalues is taken as the pixel's feature. That
sum equals the matrix trace, so the map is computed in O(1) per pixel;
the cubic characteristic-polynomial solver is kept as an independent
route to the same quantity and as the public eigenvalue API.

Classification is by interval membership of the summed eigenvalue: one
interval for cast shadow, one for self shadow, everything else on the
blob is object. Intervals can be calibrated from labeled frames by
trimmed-percentile bounds over each class's feature distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from .errors import CalibrationError, ValidationError
from .frames import GroundTruth, RgbFrame, to_gray
from .postprocess import HoleFilledFrame

# repeated-root handling: p and q coefficients of the depressed cubic are
# differences of large products, so "zero" is judged against the size of
# the terms that cancelled, not against an absolute epsilon
_COEFF_RTOL = 1e-12
_DISC_RTOL = 1e-12

CAST_COLOR = (255, 0, 0)
SELF_COLOR = (0, 0, 255)

DEFAULT_PERCENTILE = 5.0


class ShadowClass(IntEnum):
    BACKGROUND = 0
    OBJECT = 1
    CAST_SHADOW = 2
    SELF_SHADOW = 3


def _characteristic_coeffs(m: np.ndarray) -> tuple[float, float, float]:
    """Trace, sum of principal 2x2 minors, and determinant of a 3x3 matrix."""
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    minors = (
        m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
        + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
        + m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    )
    det = (
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )
    return float(trace), float(minors), float(det)


def eigen_values_3x3(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of a real 3x3 matrix via its characteristic cubic.

    Solves lambda^3 - tr(m) lambda^2 + c2 lambda - det(m) = 0, where c2 is
    the sum of principal 2x2 minors, using the depressed-cubic Cardano and
    trigonometric formulas. Non-real roots come out as a conjugate pair.

    Parameters
    ----------
    m : array_like
        Real (3, 3) matrix.

    Returns
    -------
    np.ndarray
        Three complex128 roots in no particular order.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValidationError(f"expected a 3x3 matrix, got shape {m.shape}")
    trace, minors, det = _characteristic_coeffs(m)
    a, b, c = -trace, minors, -det

    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    shift = -a / 3.0
    half_q = q / 2.0
    third_p = p / 3.0

    p_floor = _COEFF_RTOL * (1.0 + abs(b) + a * a / 3.0)
    q_floor = _COEFF_RTOL * (1.0 + 2.0 * abs(a) ** 3 / 27.0 + abs(a * b) / 3.0 + abs(c))
    if abs(p) <= p_floor and abs(q) <= q_floor:
        # triple root at the centroid
        return np.array([shift, shift, shift], dtype=np.complex128)

    disc = half_q * half_q + third_p**3
    disc_scale = half_q * half_q + abs(third_p) ** 3
    if abs(disc) <= _DISC_RTOL * disc_scale and abs(p) > p_floor:
        # one single and one double real root
        x1 = 3.0 * q / p
        x2 = -1.5 * q / p
        return np.array([x1 + shift, x2 + shift, x2 + shift], dtype=np.complex128)

    if disc >= 0.0:
        # one real root and a conjugate pair
        sqrt_disc = math.sqrt(disc)
        if q <= 0.0:
            s = (-half_q + sqrt_disc) ** (1.0 / 3.0)
        else:
            s = -((half_q + sqrt_disc) ** (1.0 / 3.0))
        t = -third_p / s if s != 0.0 else 0.0
        x1 = s + t
        re = -x1 / 2.0
        im = (math.sqrt(3.0) / 2.0) * (s - t)
        return np.array(
            [complex(x1 + shift, 0.0), complex(re + shift, im), complex(re + shift, -im)],
            dtype=np.complex128,
        )

    # three distinct real roots
    radius = math.sqrt(-third_p)
    cos_arg = half_q / (third_p * radius)
    cos_arg = max(-1.0, min(1.0, cos_arg))
    theta = math.acos(cos_arg)
    roots = [
        2.0 * radius * math.cos((theta + 2.0 * math.pi * k) / 3.0) + shift for k in range(3)
    ]
    return np.array(roots, dtype=np.complex128)


def eigen_sum(m: np.ndarray) -> float:
    """Sum of the three eigenvalues of a 3x3 matrix.

    Equal to the trace, which is how it is computed; the cubic solver in
    :func:`eigen_values_3x3` provides the independent cross-check.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValidationError(f"expected a 3x3 matrix, got shape {m.shape}")
    return float(m[0, 0] + m[1, 1] + m[2, 2])


@dataclass(frozen=True, eq=False)
class EigenSumMap:
    """Per-pixel eigenvalue sums, defined where the motion mask is set."""

    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if values.ndim != 2 or values.shape != valid.shape:
            raise ValidationError(
                f"values {values.shape} and validity mask {valid.shape} must be equal 2-D shapes"
            )
        values = values.copy()
        valid = valid.copy()
        values.flags.writeable = False
        valid.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)


def eigen_sum_map(d_hf: HoleFilledFrame) -> EigenSumMap:
    """Eigenvalue-sum feature at every pixel of a cleaned motion frame.

    The frame is reduced to grayscale and each pixel's 3x3 neighborhood is
    summed along its main diagonal (the trace). Neighborhoods at blob
    borders include the black background; replicate padding applies only
    at the frame border. Off-blob pixels are marked invalid.
    """
    gray = to_gray(d_hf.frame).values
    padded = np.pad(gray, 1, mode="edge")
    h, w = gray.shape
    # NW + center + SE: the diagonal of each pixel's 3x3 window, added in
    # the same order as the per-pixel trace for bit-identical results
    sums = padded[0:h, 0:w] + padded[1 : h + 1, 1 : w + 1] + padded[2 : h + 2, 2 : w + 2]
    return EigenSumMap(values=sums, valid=d_hf.mask.bits)


@dataclass(frozen=True)
class ShadowIntervals:
    """Inclusive eigenvalue-sum bounds for the two shadow classes."""

    cast_min: float
    cast_max: float
    self_min: float
    self_max: float

    def __post_init__(self):
        if not (self.cast_min <= self.cast_max):
            raise ValidationError(
                f"cast interval is empty: [{self.cast_min}, {self.cast_max}]"
            )
        if not (self.self_min <= self.self_max):
            raise ValidationError(
                f"self interval is empty: [{self.self_min}, {self.self_max}]"
            )

    def shifted(self, offset: float) -> "ShadowIntervals":
        """Both intervals translated by a constant."""
        return ShadowIntervals(
            self.cast_min + offset,
            self.cast_max + offset,
            self.self_min + offset,
            self.self_max + offset,
        )


@dataclass(frozen=True, eq=False)
class ClassMap:
    """Per-pixel class labels (background, object, cast shadow, self shadow)."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ValidationError(f"expected an (H, W) label grid, got shape {labels.shape}")
        if labels.size and not np.isin(labels, [int(c) for c in ShadowClass]).all():
            raise ValidationError("labels must be ShadowClass values")
        labels = np.array(labels, dtype=np.uint8, copy=True)
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    def mask_of(self, cls: ShadowClass) -> np.ndarray:
        return self.labels == int(cls)


def classify_shadows(
    eig_map: EigenSumMap, d_hf: HoleFilledFrame, intervals: ShadowIntervals
) -> tuple[ClassMap, RgbFrame]:
    """Classify blob pixels by interval membership of their eigenvalue sum.

    A valid pixel is cast shadow when its value lies in the cast interval
    (inclusive at both endpoints), else self shadow when it lies in the
    self interval, else object. The cast test runs first, so it wins when
    the intervals overlap. Invalid pixels are background.

    Returns the label map and its rendering: cast red, self blue, object
    with the cleaned frame's colors, background black.
    """
    if eig_map.values.shape != d_hf.mask.bits.shape:
        raise ValidationError(
            f"eigen map {eig_map.values.shape} and frame {d_hf.mask.bits.shape} "
            "differ in size"
        )
    values = eig_map.values
    valid = eig_map.valid
    in_cast = valid & (values >= intervals.cast_min) & (values <= intervals.cast_max)
    in_self = (
        valid & ~in_cast & (values >= intervals.self_min) & (values <= intervals.self_max)
    )
    is_object = valid & ~in_cast & ~in_self

    labels = np.full(values.shape, int(ShadowClass.BACKGROUND), dtype=np.uint8)
    labels[is_object] = int(ShadowClass.OBJECT)
    labels[in_cast] = int(ShadowClass.CAST_SHADOW)
    labels[in_self] = int(ShadowClass.SELF_SHADOW)

    render = np.zeros(values.shape + (3,), dtype=np.uint8)
    render[is_object] = d_hf.frame.pixels[is_object]
    render[in_cast] = CAST_COLOR
    render[in_self] = SELF_COLOR
    return ClassMap(labels), RgbFrame(render)


def _nearest_rank_bounds(samples: np.ndarray, percentile: float) -> tuple[float, float]:
    """Symmetric lower-nearest-rank percentile bounds of a sample set.

    The same rank k = ceil(p*n/100) is trimmed from both ends: the lower
    bound is the k-th smallest sample, the upper bound the k-th largest.
    """
    ordered = np.sort(samples)
    n = ordered.size
    # tiny slack so exact-integer ranks are not pushed up by fp noise
    k = max(1, math.ceil(percentile * n / 100.0 - 1e-12))
    return float(ordered[k - 1]), float(ordered[n - k])


def calibrate_intervals(
    maps: Sequence[EigenSumMap],
    truths: Sequence[GroundTruth],
    percentile: float = DEFAULT_PERCENTILE,
) -> ShadowIntervals:
    """Fit shadow intervals from labeled frames.

    Pools eigenvalue sums over every blob pixel labeled cast (resp. self)
    across the given frames and takes trimmed nearest-rank percentile
    bounds per class. Deterministic for fixed inputs.
    """
    if not 0.0 < percentile < 50.0:
        raise ValidationError(f"percentile must be in (0, 50), got {percentile}")
    if len(maps) == 0 or len(maps) != len(truths):
        raise ValidationError(
            f"need equal, nonzero counts of maps and ground truths, "
            f"got {len(maps)} and {len(truths)}"
        )
    cast_samples = []
    self_samples = []
    for emap, truth in zip(maps, truths):
        if emap.values.shape != truth.cast_shadow.bits.shape:
            raise ValidationError(
                f"eigen map {emap.values.shape} and ground truth "
                f"{truth.cast_shadow.bits.shape} differ in size"
            )
        cast_samples.append(emap.values[emap.valid & truth.cast_shadow.bits])
        self_samples.append(emap.values[emap.valid & truth.self_shadow.bits])
    cast_pool = np.concatenate(cast_samples)
    self_pool = np.concatenate(self_samples)
    if cast_pool.size == 0:
        raise CalibrationError("no cast-labeled pixels inside motion blobs")
    if self_pool.size == 0:
        raise CalibrationError("no self-labeled pixels inside motion blobs")
    cast_lo, cast_hi = _nearest_rank_bounds(cast_pool, percentile)
    self_lo, self_hi = _nearest_rank_bounds(self_pool, percentile)
    return ShadowIntervals(cast_lo, cast_hi, self_lo, self_hi)
