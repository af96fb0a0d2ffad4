"""Blob cleanup: hole filling, erosion, and color superimposition.

Temporal differencing leaves holes inside moving blobs and speckle noise
outside them. Holes are filled first, one or more erosion passes remove
the noise, and the original colors are then superimposed on the cleaned
mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .frames import BinaryMask, RgbFrame

# background connectivity is 4-connected; foreground blobs are its
# 8-connected complement
_BACKGROUND_STRUCTURE = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def _full_3x3() -> np.ndarray:
    return np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class StructuringElement:
    """3x3 boolean erosion kernel; the origin (center) must be set."""

    grid: np.ndarray = field(default_factory=_full_3x3)

    def __post_init__(self):
        grid = np.asarray(self.grid)
        if grid.shape != (3, 3):
            raise ValidationError(f"structuring element must be 3x3, got {grid.shape}")
        grid = np.array(grid, dtype=bool, copy=True)
        if not grid[1, 1]:
            raise ValidationError("structuring element origin must be set")
        grid.flags.writeable = False
        object.__setattr__(self, "grid", grid)

    @classmethod
    def from_bits(cls, bits: str) -> "StructuringElement":
        """Build from nine row-major '0'/'1' characters, e.g. '010111010'."""
        if len(bits) != 9 or set(bits) - {"0", "1"}:
            raise ValidationError(f"expected nine '0'/'1' characters, got {bits!r}")
        return cls(np.array([c == "1" for c in bits], dtype=bool).reshape(3, 3))


@dataclass(frozen=True, eq=False)
class HoleFilledFrame:
    """Cleaned motion blob with original colors superimposed.

    The mask is hole free (every background pixel reaches the frame border
    through 4-connected background) and the frame is black exactly where
    the mask is unset.
    """

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
        filled = ndimage.binary_fill_holes(self.mask.bits, structure=_BACKGROUND_STRUCTURE)
        if (filled != self.mask.bits).any():
            raise ValidationError("mask still contains holes")


def fill_holes(mask: BinaryMask) -> BinaryMask:
    """Fill enclosed background regions of a mask.

    Background pixels 4-connected to the frame border stay background;
    every other background pixel becomes foreground. Foreground never
    shrinks, and the operation is idempotent.
    """
    filled = ndimage.binary_fill_holes(mask.bits, structure=_BACKGROUND_STRUCTURE)
    return BinaryMask(filled)


def erode(mask: BinaryMask, se: StructuringElement | None = None, passes: int = 1) -> BinaryMask:
    """Erode a mask by a structuring element.

    An output pixel stays set only if every set SE offset lands on a set
    mask pixel; positions outside the frame count as unset.
    """
    if passes < 1:
        raise ValidationError(f"erosion passes must be >= 1, got {passes}")
    kernel = (se or StructuringElement()).grid
    eroded = ndimage.binary_erosion(
        mask.bits, structure=kernel, iterations=passes, border_value=0
    )
    return BinaryMask(eroded)


def superimpose(frame: RgbFrame, mask: BinaryMask) -> HoleFilledFrame:
    """Superimpose a frame's colors on a cleaned mask.

    On-mask pixels keep the frame's RGB; off-mask pixels are black.
    """
    if frame.pixels.shape[:2] != mask.bits.shape:
        raise ValidationError(
            f"frame {frame.pixels.shape[:2]} and mask {mask.bits.shape} differ in size"
        )
    pixels = np.where(mask.bits[:, :, None], frame.pixels, np.uint8(0))
    return HoleFilledFrame(frame=RgbFrame(pixels), mask=mask)
