"""Frame and mask containers plus image and ground-truth loading.

Pixel grids are stored row-major as numpy arrays of shape (height, width)
or (height, width, 3). Pixel coordinates in function signatures follow the
(w, h) = (column, row) convention used throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError, ValidationError

# 3x3 neighborhood windows need at least one full window per axis
MIN_SIDE = 3

# 8-bit modes Pillow can hand us without losing depth; everything else
# (16-bit PNG, 32-bit int, float TIFF) is rejected rather than truncated.
_ACCEPTED_MODES = {"1", "L", "LA", "P", "RGB", "RGBA"}


@dataclass(frozen=True, eq=False)
class RgbFrame:
    """8-bit RGB frame, pixels shaped (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValidationError(f"expected an (H, W, 3) pixel grid, got shape {px.shape}")
        if px.dtype != np.uint8:
            if not np.issubdtype(px.dtype, np.integer):
                raise ValidationError("pixel channels must be integers in [0, 255]")
            if px.size and (px.min() < 0 or px.max() > 255):
                raise ValidationError("pixel channels must lie in [0, 255]")
        if px.shape[0] < MIN_SIDE or px.shape[1] < MIN_SIDE:
            raise ValidationError(
                f"frame must be at least {MIN_SIDE}x{MIN_SIDE}, got {px.shape[1]}x{px.shape[0]}"
            )
        px = np.array(px, dtype=np.uint8, copy=True)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True, eq=False)
class GrayFrame:
    """Real-valued intensity frame in [0, 255], shaped (height, width)."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValidationError(f"expected an (H, W) value grid, got shape {vals.shape}")
        if vals.shape[0] < MIN_SIDE or vals.shape[1] < MIN_SIDE:
            raise ValidationError(
                f"frame must be at least {MIN_SIDE}x{MIN_SIDE}, got {vals.shape[1]}x{vals.shape[0]}"
            )
        if vals.size and (vals.min() < 0.0 or vals.max() > 255.0):
            raise ValidationError("intensities must lie in [0, 255]")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean pixel mask, shaped (height, width)."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ValidationError(f"expected an (H, W) bit grid, got shape {bits.shape}")
        if bits.shape[0] < MIN_SIDE or bits.shape[1] < MIN_SIDE:
            raise ValidationError(
                f"mask must be at least {MIN_SIDE}x{MIN_SIDE}, got {bits.shape[1]}x{bits.shape[0]}"
            )
        bits = np.array(bits, dtype=bool, copy=True)
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Manually labeled cast and self shadow regions for one frame.

    The two masks must have equal dimensions and be disjoint: a pixel
    carries at most one shadow label.
    """

    cast_shadow: BinaryMask
    self_shadow: BinaryMask

    def __post_init__(self):
        if self.cast_shadow.bits.shape != self.self_shadow.bits.shape:
            raise ValidationError(
                "cast and self ground-truth masks differ in size: "
                f"{self.cast_shadow.bits.shape} vs {self.self_shadow.bits.shape}"
            )
        overlap = self.cast_shadow.bits & self.self_shadow.bits
        if overlap.any():
            n = int(overlap.sum())
            raise ValidationError(f"{n} pixel(s) labeled both cast and self shadow")


def to_gray(frame: RgbFrame) -> GrayFrame:
    """Reduce an RGB frame to the per-pixel mean of its three channels.

    The mean is kept real-valued; no rounding back to integers.
    """
    px = frame.pixels.astype(np.float64)
    return GrayFrame((px[:, :, 0] + px[:, :, 1] + px[:, :, 2]) / 3.0)


def neighborhood(frame: GrayFrame, w: int, h: int) -> np.ndarray:
    """Extract the 3x3 window centered at column w, row h.

    Positions falling outside the frame take the nearest in-frame value
    (replicate padding), so the window is always fully populated.

    Returns a writable (3, 3) float64 copy.
    """
    if not (0 <= w < frame.width and 0 <= h < frame.height):
        raise IndexError(f"pixel ({w}, {h}) outside {frame.width}x{frame.height} frame")
    rows = np.clip(np.arange(h - 1, h + 2), 0, frame.height - 1)
    cols = np.clip(np.arange(w - 1, w + 2), 0, frame.width - 1)
    return frame.values[np.ix_(rows, cols)]


def _open_8bit(path: Path) -> Image.Image:
    try:
        img = Image.open(path)
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path}: not a decodable image") from exc
    if img.mode not in _ACCEPTED_MODES:
        mode = img.mode
        img.close()
        raise FormatError(f"{path}: unsupported image mode {mode!r} (8-bit inputs only)")
    return img


def load_frame(path: str | Path) -> RgbFrame:
    """Load an 8-bit PNG or JPEG frame from disk.

    Grayscale and palette images are promoted to RGB; alpha is dropped.
    Images deeper than 8 bits per channel or smaller than 3x3 are rejected.
    """
    path = Path(path)
    with _open_8bit(path) as img:
        if img.width < MIN_SIDE or img.height < MIN_SIDE:
            raise FormatError(
                f"{path}: image is {img.width}x{img.height}, below the "
                f"{MIN_SIDE}x{MIN_SIDE} minimum"
            )
        rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return RgbFrame(rgb)


def save_frame(frame: RgbFrame, path: str | Path) -> None:
    """Write a frame to disk as PNG (lossless round trip)."""
    Image.fromarray(np.ascontiguousarray(frame.pixels), "RGB").save(Path(path), format="PNG")


def load_mask(path: str | Path) -> BinaryMask:
    """Load a mask image; any nonzero pixel counts as labeled."""
    path = Path(path)
    with _open_8bit(path) as img:
        if img.width < MIN_SIDE or img.height < MIN_SIDE:
            raise FormatError(
                f"{path}: image is {img.width}x{img.height}, below the "
                f"{MIN_SIDE}x{MIN_SIDE} minimum"
            )
        gray = np.asarray(img.convert("L"))
    return BinaryMask(gray > 0)


def save_mask(mask: BinaryMask, path: str | Path) -> None:
    """Write a mask to disk as an 8-bit PNG (255 where set)."""
    arr = np.where(mask.bits, 255, 0).astype(np.uint8)
    Image.fromarray(arr, "L").save(Path(path), format="PNG")


def load_ground_truth(cast_path: str | Path, self_path: str | Path) -> GroundTruth:
    """Load cast and self shadow ground truth from two mask images."""
    cast = load_mask(cast_path)
    self_mask = load_mask(self_path)
    if cast.bits.shape != self_mask.bits.shape:
        raise FormatError(
            f"ground-truth size mismatch: {cast_path} is {cast.width}x{cast.height}, "
            f"{self_path} is {self_mask.width}x{self_mask.height}"
        )
    return GroundTruth(cast_shadow=cast, self_shadow=self_mask)
