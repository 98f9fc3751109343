"""
Image-mosaic dataset synthesis: cut a person out of a donor photo with its
mask, paste it onto a clean background and keep (source, target, mask).
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, TypeVar

import numpy as np
from scipy import ndimage

from app.core.compose import alpha_blend, feather
from app.core.config import MosaicConfig, ScaleRuleConfig
from app.core.errors import ArgumentError, EmptySelectionError, PlacementError
from app.core.image import AlphaMap, Image, Mask, check_same_size
from app.core.workers import parallel_map
from app.synth.assets import BackgroundAsset, PersonAsset

logger = logging.getLogger(__name__)

MAX_PLACEMENT_ATTEMPTS = 100
MASK_THRESHOLD = 0.5

T = TypeVar("T")


@dataclass(frozen=True, eq=False)
class PersonSprite:
    patch: Image
    alpha: AlphaMap
    origin_id: str = ""
    feather_radius: int = 0

    def __post_init__(self):
        check_same_size(self.patch, self.alpha)
        if self.feather_radius < 0:
            raise ArgumentError("feather radius must be >= 0")

    @property
    def silhouette(self) -> Mask:
        return Mask(self.alpha.alphas >= 1.0)


@dataclass(frozen=True)
class Placement:
    anchor_x: int
    anchor_y: int
    scale: float = 1.0
    flip: bool = False

    def __post_init__(self):
        if not math.isfinite(self.scale) or self.scale <= 0:
            raise ArgumentError(f"placement scale must be > 0, got {self.scale}")

    def to_dict(self) -> dict:
        return {
            "anchor_x": self.anchor_x,
            "anchor_y": self.anchor_y,
            "scale": self.scale,
            "flip": self.flip,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Placement":
        return cls(
            anchor_x=int(data["anchor_x"]),
            anchor_y=int(data["anchor_y"]),
            scale=float(data.get("scale", 1.0)),
            flip=bool(data.get("flip", False)),
        )


@dataclass(frozen=True)
class GroundLineRule:
    """scale = base_scale * anchor_y / horizon_offset, floored at min_scale."""

    base_scale: float = 1.0
    horizon_offset: float | None = None
    min_scale: float = 0.1

    def __call__(self, anchor_y: int) -> float:
        if self.horizon_offset is None:
            return self.base_scale
        return max(self.min_scale, self.base_scale * anchor_y / self.horizon_offset)

    @classmethod
    def from_config(cls, config: ScaleRuleConfig) -> "GroundLineRule":
        return cls(config.base_scale, config.horizon_offset, config.min_scale)


@dataclass(frozen=True, eq=False)
class CompositeTriplet:
    source: Image
    target: Image
    mask: Mask
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        check_same_size(self.source, self.target, self.mask)


def extract_sprite(donor: Image, donor_mask: Mask, feather_radius: int, origin_id: str = "") -> PersonSprite:
    """
    Crops the person's bounding box widened by `feather_radius` on every side
    (clipped to the donor frame). With radius 0 this is the tight box; with a
    positive radius the margin holds the ramp, so alpha reaches 0 on the patch
    border wherever the donor frame leaves room.
    """
    check_same_size(donor, donor_mask)
    if feather_radius < 0:
        raise ArgumentError(f"feather radius must be >= 0, got {feather_radius}")
    box = donor_mask.bbox()
    if box is None:
        raise EmptySelectionError(f"person mask of '{origin_id or 'donor'}' is empty")
    x0, y0, x1, y1 = box
    y0 = max(0, y0 - feather_radius)
    x0 = max(0, x0 - feather_radius)
    y1 = min(donor.height - 1, y1 + feather_radius)
    x1 = min(donor.width - 1, x1 + feather_radius)

    patch = Image(donor.pixels[y0 : y1 + 1, x0 : x1 + 1])
    silhouette = Mask(donor_mask.bits[y0 : y1 + 1, x0 : x1 + 1])
    return PersonSprite(patch, feather(silhouette, feather_radius), origin_id, feather_radius)


def footprint(sprite: PersonSprite, placement: Placement) -> tuple[int, int, int, int]:
    """(top, left, height, width) of the scaled sprite in background coordinates."""
    h = max(1, int(round(sprite.patch.height * placement.scale)))
    w = max(1, int(round(sprite.patch.width * placement.scale)))
    top = placement.anchor_y - h + 1
    left = placement.anchor_x - w // 2
    return top, left, h, w


def _resample(arr: np.ndarray, out_h: int, out_w: int, order: int) -> np.ndarray:
    in_h, in_w = arr.shape[:2]
    if (in_h, in_w) == (out_h, out_w):
        return arr
    if order == 0:
        rows = np.minimum((np.arange(out_h) + 0.5) * in_h / out_h, in_h - 1).astype(int)
        cols = np.minimum((np.arange(out_w) + 0.5) * in_w / out_w, in_w - 1).astype(int)
        return arr[rows][:, cols]
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    grid = np.meshgrid(ys, xs, indexing="ij")
    channels = [
        ndimage.map_coordinates(arr[..., c], grid, order=1, mode="nearest")
        for c in range(arr.shape[2])
    ]
    return np.clip(np.stack(channels, axis=-1), 0.0, 1.0)


def _layout(sprite: PersonSprite, placement: Placement, size: tuple[int, int]):
    """
    Scales, mirrors and clips the sprite onto a background-sized canvas.
    Returns (layer pixels, silhouette bits, footprint coverage bits).
    """
    height, width = size
    top, left, h, w = footprint(sprite, placement)
    y0, y1 = max(0, top), min(height, top + h)
    x0, x1 = max(0, left), min(width, left + w)
    if y0 >= y1 or x0 >= x1:
        raise PlacementError(
            f"sprite footprint {h}x{w} at ({placement.anchor_x}, {placement.anchor_y}) "
            f"does not overlap the {width}x{height} background"
        )

    patch = _resample(sprite.patch.pixels, h, w, order=1)
    sil = _resample(sprite.silhouette.bits, h, w, order=0)
    if placement.flip:
        patch = patch[:, ::-1]
        sil = sil[:, ::-1]

    layer = np.zeros((height, width, 3), dtype=np.float64)
    silhouette = np.zeros((height, width), dtype=bool)
    cover = np.zeros((height, width), dtype=bool)
    src = (slice(y0 - top, y1 - top), slice(x0 - left, x1 - left))
    layer[y0:y1, x0:x1] = patch[src]
    silhouette[y0:y1, x0:x1] = sil[src]
    cover[y0:y1, x0:x1] = True
    return layer, silhouette, cover


def paste(background: Image, sprite: PersonSprite, placement: Placement) -> CompositeTriplet:
    """
    Blends the sprite over the background. The pasted alpha is re-feathered
    on the clipped, scaled silhouette so the ramp stays `feather_radius`
    background pixels wide at every scale; it never leaves the footprint.
    """
    layer, silhouette, cover = _layout(sprite, placement, background.size)
    if not silhouette.any():
        logger.warning(
            "sprite '%s' leaves no visible silhouette at %s; mask is empty",
            sprite.origin_id,
            placement,
        )
    alpha = feather(Mask(silhouette), sprite.feather_radius).alphas * cover

    source = alpha_blend(background, Image(layer), AlphaMap(1.0 - alpha))
    mask = Mask(alpha >= MASK_THRESHOLD)
    meta = {"sprite_id": sprite.origin_id, "placement": placement.to_dict()}
    return CompositeTriplet(source=source, target=background, mask=mask, meta=meta)


def _visible(sprite: PersonSprite, placement: Placement, size: tuple[int, int]) -> bool:
    try:
        _, silhouette, _ = _layout(sprite, placement, size)
    except PlacementError:
        return False
    return bool(silhouette.any())


def sample_placement(
    region: Mask,
    sprite: PersonSprite,
    rng_seed: int,
    scale_rule: GroundLineRule,
    flip_probability: float = 0.5,
) -> Placement:
    """
    Draws the anchor uniformly among the region's set bits. Placements whose
    silhouette is clipped away entirely are redrawn, up to
    MAX_PLACEMENT_ATTEMPTS times.
    """
    coords = np.argwhere(region.bits)
    if coords.size == 0:
        raise EmptySelectionError("placement region is empty")
    rng = np.random.default_rng(rng_seed)
    for _ in range(MAX_PLACEMENT_ATTEMPTS):
        y, x = coords[rng.integers(len(coords))]
        flip = bool(rng.random() < flip_probability)
        placement = Placement(int(x), int(y), scale_rule(int(y)), flip)
        if _visible(sprite, placement, region.size):
            return placement
    raise PlacementError(
        f"no visible placement for sprite '{sprite.origin_id}' after {MAX_PLACEMENT_ATTEMPTS} attempts"
    )


# one RNG stream per kind of per-item draw
PAIRING_STREAM = 0
PLACEMENT_STREAM = 1
LIGHTING_STREAM = 2


def stream_seed(seed: int, index: int, stream: int) -> int:
    """Seed of the `stream` draws for batch item `index`."""
    entropy = [seed % 2**64, index, stream]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class Scene:
    """One planned composition: assets resolved, placement sampled."""

    index: int
    seed: int
    background_id: str
    background: Image
    sprite: PersonSprite
    placement: Placement

    def provenance(self) -> dict:
        return {
            "index": self.index,
            "seed": self.seed,
            "background_id": self.background_id,
            "sprite_id": self.sprite.origin_id,
            "placement": self.placement.to_dict(),
        }


def plan_pairs(n_backgrounds: int, n_persons: int, count: int, seed: int, pairing: str) -> list[tuple[int, int]]:
    if pairing == "exhaustive":
        per_round = n_backgrounds * n_persons
        return [((i % per_round) // n_persons, i % n_persons) for i in range(count)]
    pairs = []
    for i in range(count):
        rng = np.random.default_rng(stream_seed(seed, i, PAIRING_STREAM))
        pairs.append((int(rng.integers(n_backgrounds)), int(rng.integers(n_persons))))
    return pairs


@dataclass(frozen=True, eq=False)
class ScenePlanner:
    """
    Pairs are fixed up front; images are loaded and placements sampled only
    when a scene is asked for, so a batch holds one scene per worker.
    """

    backgrounds: list[BackgroundAsset]
    persons: list[PersonAsset]
    config: MosaicConfig
    seed: int
    pairs: list[tuple[int, int]]

    @classmethod
    def create(
        cls,
        backgrounds: list[BackgroundAsset],
        persons: list[PersonAsset],
        count: int,
        config: MosaicConfig,
        seed: int = 0,
    ) -> "ScenePlanner":
        if not backgrounds or not persons:
            raise ArgumentError("need at least one background and one person asset")
        if count < 1:
            raise ArgumentError(f"count must be >= 1, got {count}")
        pairs = plan_pairs(len(backgrounds), len(persons), count, seed, config.pairing)
        return cls(list(backgrounds), list(persons), config, seed, pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def scene(self, index: int) -> Scene:
        bi, pi = self.pairs[index]
        bg_asset, person = self.backgrounds[bi], self.persons[pi]
        background, region = bg_asset.load(self.config.default_region_top)
        sprite = person.load_sprite(self.config.feather_radius)
        placement = sample_placement(
            region,
            sprite,
            stream_seed(self.seed, index, PLACEMENT_STREAM),
            GroundLineRule.from_config(self.config.scale_rule),
            self.config.flip_probability,
        )
        return Scene(index, self.seed, bg_asset.asset_id, background, sprite, placement)


def synth_mosaic_batch(
    backgrounds: list[BackgroundAsset],
    sprites: list[PersonAsset],
    count: int,
    config: MosaicConfig,
    seed: int = 0,
    workers: int = 1,
    sink: Callable[[int, CompositeTriplet], T] | None = None,
) -> list[CompositeTriplet] | list[T]:
    """
    Returns the triplets, or with `sink` whatever sink(index, triplet) returns
    for each; the triplet itself is dropped as soon as the sink has it.
    """
    planner = ScenePlanner.create(backgrounds, sprites, count, config, seed)

    def compose(index: int):
        scene = planner.scene(index)
        triplet = paste(scene.background, scene.sprite, scene.placement)
        meta = {**scene.provenance(), "method": "mosaic", "feather_radius": scene.sprite.feather_radius}
        triplet = replace(triplet, meta=meta)
        return triplet if sink is None else sink(index, triplet)

    return parallel_map(compose, range(len(planner)), workers, desc="Pasting persons")
