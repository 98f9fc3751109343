"""
Asset discovery for dataset synthesis.

    backgrounds/<stem>.png           clean background
    backgrounds/<stem>_region.png    optional placement region (non-zero = allowed anchor)
    persons/<stem>.png               donor photo
    persons/<stem>_mask.png          person mask of the donor
"""

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from app.core.errors import AssetError
from app.core.image import Image, Mask, load_image, load_mask

REGION_SUFFIX = "_region"
MASK_SUFFIX = "_mask"
CACHE_SIZE = 8  # decoded images are float64, 24 bytes per pixel


@lru_cache(maxsize=CACHE_SIZE)
def _image(path: Path) -> Image:
    return load_image(path)


@lru_cache(maxsize=CACHE_SIZE)
def _mask(path: Path) -> Mask:
    return load_mask(path)


def default_region(height: int, width: int, top_fraction: float) -> Mask:
    bits = np.zeros((height, width), dtype=bool)
    bits[int(top_fraction * height) :, :] = True
    return Mask(bits)


@dataclass(frozen=True)
class BackgroundAsset:
    asset_id: str
    image_path: Path
    region_path: Path | None = None

    def load(self, default_region_top: float = 0.5) -> tuple[Image, Mask]:
        image = _image(self.image_path)
        if self.region_path is None:
            return image, default_region(image.height, image.width, default_region_top)
        region = _mask(self.region_path)
        if region.size != image.size:
            raise AssetError(
                f"region {self.region_path} is {region.size}, background {self.image_path} is {image.size}"
            )
        return image, region


@dataclass(frozen=True)
class PersonAsset:
    asset_id: str
    image_path: Path
    mask_path: Path

    def load_sprite(self, feather_radius: int):
        from app.synth.mosaic import extract_sprite

        donor = _image(self.image_path)
        mask = _mask(self.mask_path)
        if mask.size != donor.size:
            raise AssetError(f"person mask {self.mask_path} does not match {self.image_path}")
        return extract_sprite(donor, mask, feather_radius, origin_id=self.asset_id)


def _png_stems(directory: Path) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise AssetError(f"asset directory '{directory}' not found")
    return sorted(p for p in directory.glob("*.png") if p.is_file())


def discover_backgrounds(directory: Path) -> list[BackgroundAsset]:
    assets = []
    for path in _png_stems(directory):
        if path.stem.endswith(REGION_SUFFIX):
            continue
        region = path.with_name(f"{path.stem}{REGION_SUFFIX}.png")
        assets.append(BackgroundAsset(path.stem, path, region if region.exists() else None))
    if not assets:
        raise AssetError(f"no background images found in '{directory}'")
    return assets


def discover_persons(directory: Path) -> list[PersonAsset]:
    assets = []
    for path in _png_stems(directory):
        if path.stem.endswith(MASK_SUFFIX):
            continue
        mask = path.with_name(f"{path.stem}{MASK_SUFFIX}.png")
        if not mask.exists():
            raise AssetError(f"person image {path} has no mask file {mask.name}")
        assets.append(PersonAsset(path.stem, path, mask))
    if not assets:
        raise AssetError(f"no person images found in '{directory}'")
    return assets
