"""
Procedural stand-in assets: smooth backgrounds with a ground region and
textured person-shaped donors. Lets the pipeline run end to end without
photographs.
"""

import logging
from pathlib import Path

import numpy as np

from app.core.image import Image, Mask, save_image, save_mask
from app.synth.assets import MASK_SUFFIX, REGION_SUFFIX

logger = logging.getLogger(__name__)


def smooth_background(height: int, width: int, rng: np.random.Generator) -> Image:
    """Two-colour gradient plus a low-frequency wave; no sharp edges."""
    y, x = np.mgrid[0:height, 0:width] / np.array([height, width])[:, None, None]
    top, bottom = rng.uniform(0.2, 0.8, size=(2, 3))
    ramp = (1 - y)[..., None] * top + y[..., None] * bottom
    phase = rng.uniform(0, 2 * np.pi)
    wave = 0.05 * np.sin(2 * np.pi * (x + 0.5 * y) + phase)
    return Image(np.clip(ramp + wave[..., None], 0.0, 1.0))


def person_donor(height: int, width: int, rng: np.random.Generator) -> tuple[Image, Mask]:
    """Standing figure (head + torso + legs as ellipses) on a plain donor backdrop."""
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    cx = width / 2
    head = ((x - cx) / (0.12 * width)) ** 2 + ((y - 0.14 * height) / (0.09 * height)) ** 2 <= 1
    torso = ((x - cx) / (0.22 * width)) ** 2 + ((y - 0.42 * height) / (0.2 * height)) ** 2 <= 1
    legs = (np.abs(x - cx) <= 0.14 * width) & (y >= 0.55 * height) & (y <= 0.95 * height)
    silhouette = head | torso | legs

    backdrop = rng.uniform(0.3, 0.7, size=3)
    clothing = rng.uniform(0.0, 1.0, size=3)
    stripes = 0.15 * np.sign(np.sin(2 * np.pi * y / rng.integers(4, 9)))
    pixels = np.broadcast_to(backdrop, (height, width, 3)).copy()
    pixels[silhouette] = np.clip(clothing + stripes[silhouette][:, None], 0.0, 1.0)
    return Image(pixels), Mask(silhouette)


def write_demo_assets(
    root: Path,
    n_backgrounds: int = 4,
    n_persons: int = 3,
    size: tuple[int, int] = (96, 128),
    seed: int = 0,
) -> tuple[Path, Path]:
    """Writes root/backgrounds and root/persons in the layout discovery expects."""
    root = Path(root)
    bg_dir, person_dir = root / "backgrounds", root / "persons"
    rng = np.random.default_rng(seed)
    height, width = size

    for i in range(n_backgrounds):
        image = smooth_background(height, width, rng)
        region = np.zeros((height, width), dtype=bool)
        region[int(0.6 * height) : height - 2, width // 8 : width - width // 8] = True
        save_image(image, bg_dir / f"bg{i:03d}.png")
        save_mask(Mask(region), bg_dir / f"bg{i:03d}{REGION_SUFFIX}.png")

    donor_h, donor_w = height // 2, max(8, width // 5)
    for i in range(n_persons):
        donor, mask = person_donor(donor_h, donor_w, rng)
        save_image(donor, person_dir / f"p{i:03d}.png")
        save_mask(mask, person_dir / f"p{i:03d}{MASK_SUFFIX}.png")

    logger.info("wrote %d backgrounds and %d persons under %s", n_backgrounds, n_persons, root)
    return bg_dir, person_dir
