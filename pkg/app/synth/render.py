"""
Virtual-rendering stand-in: a person sprite drawn as a lit billboard over a
real background. Lighting is a five-part model (per-channel gain, offset,
gamma and a directional ramp) that can be edited or fitted per scene.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, TypeVar

import numpy as np

from app.core.config import LightFitConfig, LightingConfig, MosaicConfig, RenderConfig
from app.core.errors import ArgumentError
from app.core.image import Image
from app.core.workers import parallel_map
from app.synth.assets import BackgroundAsset, PersonAsset
from app.synth.mosaic import (
    LIGHTING_STREAM,
    CompositeTriplet,
    PersonSprite,
    Placement,
    Scene,
    ScenePlanner,
    paste,
    stream_seed,
)

logger = logging.getLogger(__name__)

GAIN_RANGE = (0.1, 3.0)
OFFSET_RANGE = (-0.5, 0.5)
GAMMA_RANGE = (0.2, 5.0)
RAMP_RANGE = (0.0, 1.0)

T = TypeVar("T")

# coordinate order used by descent and by the --grid flag
COORDINATES = ("gamma", "gain_r", "gain_g", "gain_b", "offset", "angle", "ramp_strength")
_RANGES = {
    "gamma": GAMMA_RANGE,
    "gain_r": GAIN_RANGE,
    "gain_g": GAIN_RANGE,
    "gain_b": GAIN_RANGE,
    "offset": OFFSET_RANGE,
    "ramp_strength": RAMP_RANGE,
}


def _check_range(name: str, value: float, lo: float, hi: float) -> None:
    if not (math.isfinite(value) and lo <= value <= hi):
        raise ArgumentError(f"lighting {name}={value} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class LightingParams:
    gain: tuple[float, float, float] = (1.0, 1.0, 1.0)
    offset: float = 0.0
    gamma: float = 1.0
    angle_deg: float = 0.0
    ramp_strength: float = 0.0

    def __post_init__(self):
        if len(self.gain) != 3:
            raise ArgumentError(f"gain needs three channels, got {self.gain}")
        object.__setattr__(self, "gain", tuple(float(g) for g in self.gain))
        for g in self.gain:
            _check_range("gain", g, *GAIN_RANGE)
        _check_range("offset", self.offset, *OFFSET_RANGE)
        _check_range("gamma", self.gamma, *GAMMA_RANGE)
        _check_range("ramp_strength", self.ramp_strength, *RAMP_RANGE)
        if not (math.isfinite(self.angle_deg) and 0.0 <= self.angle_deg < 360.0):
            raise ArgumentError(f"lighting angle_deg={self.angle_deg} outside [0, 360)")

    @classmethod
    def identity(cls) -> "LightingParams":
        return cls()

    @classmethod
    def from_config(cls, config: LightingConfig) -> "LightingParams":
        return cls(config.gain, config.offset, config.gamma, config.angle_deg % 360.0, config.ramp_strength)

    def to_dict(self) -> dict:
        return {
            "gain": list(self.gain),
            "offset": self.offset,
            "gamma": self.gamma,
            "angle_deg": self.angle_deg,
            "ramp_strength": self.ramp_strength,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LightingParams":
        try:
            return cls(
                gain=tuple(data.get("gain", (1.0, 1.0, 1.0))),
                offset=float(data.get("offset", 0.0)),
                gamma=float(data.get("gamma", 1.0)),
                angle_deg=float(data.get("angle_deg", 0.0)),
                ramp_strength=float(data.get("ramp_strength", 0.0)),
            )
        except ArgumentError:
            raise
        except (TypeError, ValueError) as e:
            raise ArgumentError(f"malformed lighting params {data}: {e}") from e

    def coordinate(self, name: str) -> float:
        if name.startswith("gain_"):
            return self.gain["rgb".index(name[-1])]
        if name == "angle":
            return self.angle_deg
        if name in ("gamma", "offset", "ramp_strength"):
            return getattr(self, name)
        raise ArgumentError(f"unknown lighting coordinate '{name}'")

    def with_coordinate(self, name: str, value: float, clamp: bool = False) -> "LightingParams":
        """Copy with one coordinate changed; `gain` sets all three channels, angles wrap."""
        if name == "angle":
            return replace(self, angle_deg=float(value) % 360.0)
        if clamp and name in _RANGES:
            lo, hi = _RANGES[name]
            value = min(hi, max(lo, value))
        if clamp and name == "gain":
            value = min(GAIN_RANGE[1], max(GAIN_RANGE[0], value))
        if name == "gain":
            return replace(self, gain=(value, value, value))
        if name.startswith("gain_"):
            gain = list(self.gain)
            gain["rgb".index(name[-1])] = value
            return replace(self, gain=tuple(gain))
        if name in ("gamma", "offset", "ramp_strength"):
            return replace(self, **{name: float(value)})
        raise ArgumentError(f"unknown lighting coordinate '{name}'")


def sample_lighting(rng: np.random.Generator) -> LightingParams:
    # narrower than the legal ranges; extreme corners look nothing like street lighting
    return LightingParams(
        gain=tuple(float(g) for g in rng.uniform(0.6, 1.4, size=3)),
        offset=float(rng.uniform(-0.15, 0.15)),
        gamma=float(rng.uniform(0.7, 1.4)),
        angle_deg=float(rng.uniform(0.0, 360.0)),
        ramp_strength=float(rng.uniform(0.0, 0.4)),
    )


@dataclass(frozen=True, eq=False)
class DepthMap:
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ArgumentError(f"depth map must be 2-D, got {arr.shape}")
        if arr.size and arr.min() < 0:
            raise ArgumentError("depth values must be >= 0")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def size(self) -> tuple[int, int]:
        return self.values.shape[0], self.values.shape[1]


def directional_ramp(sprite: PersonSprite, angle_deg: float, strength: float) -> np.ndarray:
    """
    Planar gradient along `angle_deg` (0 = brighter to the right, 90 = brighter
    downwards), zero-mean over the silhouette with peak |value| == strength.
    """
    h, w = sprite.patch.size
    support = sprite.silhouette.bits
    if not support.any():
        support = sprite.alpha.alphas > 0
    if not support.any() or strength == 0:
        return np.zeros((h, w))
    ys, xs = np.mgrid[0:h, 0:w]
    theta = math.radians(angle_deg)
    g = xs * math.cos(theta) + ys * math.sin(theta)
    g = g - g[support].mean()
    peak = np.abs(g[support]).max()
    if peak == 0:
        return np.zeros((h, w))
    return g * (strength / peak)


def apply_lighting(sprite: PersonSprite, params: LightingParams) -> PersonSprite:
    if not isinstance(params, LightingParams):
        raise ArgumentError(f"expected LightingParams, got {type(params).__name__}")
    pixels = sprite.patch.pixels
    out = np.asarray(params.gain) * np.power(pixels, params.gamma) + params.offset
    if params.ramp_strength > 0:
        out = out + directional_ramp(sprite, params.angle_deg, params.ramp_strength)[..., None]
    return replace(sprite, patch=Image(np.clip(out, 0.0, 1.0)))


def render_scene(
    background: Image,
    sprite: PersonSprite,
    placement: Placement,
    params: LightingParams,
) -> tuple[CompositeTriplet, DepthMap]:
    triplet = paste(background, apply_lighting(sprite, params), placement)
    meta = {**triplet.meta, "lighting": params.to_dict(), "bbox": triplet.mask.bbox()}
    depth = DepthMap(triplet.mask.bits.astype(np.float64))
    return replace(triplet, meta=meta), depth


def enumerate_angles(n: int) -> list[float]:
    if n < 1:
        raise ArgumentError(f"angle count must be >= 1, got {n}")
    return [k * 360.0 / n for k in range(n)]


def _scene_lighting(
    scene: Scene,
    render: RenderConfig,
    lightfit: LightFitConfig,
) -> list[LightingParams]:
    base = LightingParams.from_config(render.fixed)
    if render.lighting == "fixed":
        return [base]
    if render.lighting == "random":
        rng = np.random.default_rng(stream_seed(scene.seed, scene.index, LIGHTING_STREAM))
        return [sample_lighting(rng)]
    if render.lighting == "full":
        return [
            replace(base, angle_deg=angle, ramp_strength=render.ramp_strength)
            for angle in enumerate_angles(render.angle_count)
        ]
    # learned: fit to the background the person stands on
    from app.synth.lightfit import fit_descent

    result = fit_descent(
        scene.background,
        scene.sprite,
        scene.placement,
        base,
        lightfit.budget,
        loss_region=lightfit.loss_region,
        ring_width=lightfit.ring_width,
    )
    logger.debug("scene %d: fitted lighting loss %.5f", scene.index, result.loss)
    return [result.params]


def variants_per_scene(render: RenderConfig) -> int:
    return render.angle_count if render.lighting == "full" else 1


def synth_render_batch(
    backgrounds: list[BackgroundAsset],
    sprites: list[PersonAsset],
    count: int,
    mosaic: MosaicConfig,
    render: RenderConfig,
    lightfit: LightFitConfig,
    seed: int = 0,
    workers: int = 1,
    sink: Callable[[int, CompositeTriplet, DepthMap], T] | None = None,
) -> list[tuple[CompositeTriplet, DepthMap]] | list[T]:
    """
    `count` scenes; the `full` regime emits one image per illumination angle
    for every scene. Output k is variant k % n of scene k // n. With `sink`,
    returns sink(k, triplet, depth) for each instead of the images.
    """
    planner = ScenePlanner.create(backgrounds, sprites, count, mosaic, seed)
    per_scene = variants_per_scene(render)

    def render_all(index: int) -> list:
        scene = planner.scene(index)
        rendered = []
        for variant, params in enumerate(_scene_lighting(scene, render, lightfit)):
            triplet, depth = render_scene(scene.background, scene.sprite, scene.placement, params)
            meta = {
                **scene.provenance(),
                **triplet.meta,
                "method": "render",
                "regime": render.lighting,
                "variant": variant,
                "feather_radius": scene.sprite.feather_radius,
            }
            triplet = replace(triplet, meta=meta)
            if sink is None:
                rendered.append((triplet, depth))
            else:
                rendered.append(sink(index * per_scene + variant, triplet, depth))
        return rendered

    batches = parallel_map(render_all, range(len(planner)), workers, desc="Rendering scenes")
    return [item for batch in batches for item in batch]
