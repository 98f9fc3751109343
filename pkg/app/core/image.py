"""
Pixel containers shared by every stage of the pipeline.

All grids are row-major numpy arrays that are frozen (read-only) after
construction, so values can be handed to worker threads without copying.
Channel values live in [0, 1]; 8-bit files are mapped by v/255 on load and
round(v*255) on save.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from app.core.errors import ArgumentError, AssetError, DimensionError


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Image:
    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise DimensionError(f"image must be (height, width, 3), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError("image must be at least 1x1")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ArgumentError("image channel values must lie in [0, 1]")
        object.__setattr__(self, "pixels", _freeze(arr))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def size(self) -> tuple[int, int]:
        """(height, width)"""
        return self.pixels.shape[0], self.pixels.shape[1]

    @classmethod
    def filled(cls, height: int, width: int, value=0.0) -> "Image":
        return cls(np.broadcast_to(np.asarray(value, dtype=np.float64), (height, width, 3)))

    def to_uint8(self) -> np.ndarray:
        return np.round(self.pixels * 255.0).astype(np.uint8)

    @classmethod
    def from_uint8(cls, arr: np.ndarray) -> "Image":
        return cls(np.asarray(arr, dtype=np.float64) / 255.0)

    def quantized(self) -> "Image":
        """The image as it reads back after an 8-bit save."""
        return Image.from_uint8(self.to_uint8())


@dataclass(frozen=True, eq=False)
class Mask:
    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"mask must be a non-empty 2-D grid, got {arr.shape}")
        if arr.dtype != np.bool_:
            if not np.all((arr == 0) | (arr == 1)):
                raise ArgumentError("mask elements must be 0 or 1")
        object.__setattr__(self, "bits", _freeze(np.array(arr, dtype=bool)))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def size(self) -> tuple[int, int]:
        return self.bits.shape[0], self.bits.shape[1]

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    def is_empty(self) -> bool:
        return not self.bits.any()

    @classmethod
    def empty(cls, height: int, width: int) -> "Mask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def full(cls, height: int, width: int) -> "Mask":
        return cls(np.ones((height, width), dtype=bool))

    def bbox(self) -> tuple[int, int, int, int] | None:
        """Inclusive (x0, y0, x1, y1) of the set bits, or None."""
        ys, xs = np.nonzero(self.bits)
        if ys.size == 0:
            return None
        return int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())


@dataclass(frozen=True, eq=False)
class AlphaMap:
    alphas: np.ndarray

    def __post_init__(self):
        arr = np.array(self.alphas, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"alpha map must be a non-empty 2-D grid, got {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ArgumentError("alpha values must lie in [0, 1]")
        object.__setattr__(self, "alphas", _freeze(arr))

    @property
    def size(self) -> tuple[int, int]:
        return self.alphas.shape[0], self.alphas.shape[1]

    @classmethod
    def constant(cls, height: int, width: int, value: float) -> "AlphaMap":
        return cls(np.full((height, width), value, dtype=np.float64))


def check_same_size(*grids) -> tuple[int, int]:
    sizes = {g.size for g in grids}
    if len(sizes) != 1:
        raise DimensionError(f"resolution mismatch: {sorted(sizes)}")
    return sizes.pop()


def load_image(path: Path) -> Image:
    try:
        with PILImage.open(path) as im:
            arr = np.asarray(im.convert("RGB"))
    except (OSError, ValueError) as e:
        raise AssetError(f"cannot read image {path}: {e}") from e
    return Image.from_uint8(arr)


def save_image(image: Image, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(image.to_uint8()).save(path, format="PNG")


def load_mask(path: Path, strict: bool = False) -> Mask:
    try:
        with PILImage.open(path) as im:
            arr = np.asarray(im.convert("L"))
    except (OSError, ValueError) as e:
        raise AssetError(f"cannot read mask {path}: {e}") from e
    if strict and not np.all((arr == 0) | (arr == 255)):
        raise AssetError(f"mask {path} holds values other than 0 and 255")
    return Mask(arr != 0)


def save_mask(mask: Mask, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.where(mask.bits, 255, 0).astype(np.uint8)
    PILImage.fromarray(arr).save(path, format="PNG")
