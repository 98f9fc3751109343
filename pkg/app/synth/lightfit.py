"""
Illumination fitting: pick LightingParams so the lit person region looks as
much as possible like the background it covers (masked L1).
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from app.core.compose import ring
from app.core.errors import ArgumentError, EmptySelectionError
from app.core.image import Image, Mask, check_same_size
from app.core.workers import parallel_map
from app.synth.mosaic import PersonSprite, Placement
from app.synth.render import COORDINATES, LightingParams, render_scene

logger = logging.getLogger(__name__)

INITIAL_STEPS = {
    "gamma": 0.5,
    "gain_r": 0.25,
    "gain_g": 0.25,
    "gain_b": 0.25,
    "offset": 0.1,
    "angle": 45.0,
    "ramp_strength": 0.25,
}
STEP_FLOOR = 1e-3
GRID_AXES = COORDINATES + ("gain",)


@dataclass(frozen=True)
class FitResult:
    params: LightingParams
    loss: float
    evaluations: int
    trace: list[tuple[LightingParams, float]] = field(default_factory=list)

    def to_dict(self, include_trace: bool = False) -> dict:
        out = {
            "params": self.params.to_dict(),
            "loss": self.loss,
            "evaluations": self.evaluations,
        }
        if include_trace:
            out["trace"] = [{"params": p.to_dict(), "loss": loss} for p, loss in self.trace]
        return out


def illum_loss(source: Image, target: Image, mask: Mask) -> float:
    check_same_size(source, target, mask)
    if mask.is_empty():
        raise EmptySelectionError("illumination loss needs a non-empty mask")
    diff = np.abs(source.pixels[mask.bits] - target.pixels[mask.bits])
    return float(diff.mean())


def ring_loss(source: Image, target: Image, mask: Mask, width: int = 4) -> float:
    """
    Mean-colour comparison, not per-pixel: the mean lit person colour under
    the mask against the mean background colour over a `width`-px ring around
    it, averaged over channels. Falls back to `illum_loss` when the ring is
    empty (mask fills the frame).
    """
    check_same_size(source, target, mask)
    if mask.is_empty():
        raise EmptySelectionError("illumination loss needs a non-empty mask")
    band = ring(mask, width)
    if band.is_empty():
        return illum_loss(source, target, mask)
    person = source.pixels[mask.bits].mean(axis=0)
    surround = target.pixels[band.bits].mean(axis=0)
    return float(np.abs(person - surround).mean())


def scene_loss(
    background: Image,
    sprite: PersonSprite,
    placement: Placement,
    params: LightingParams,
    loss_region: str = "mask",
    ring_width: int = 4,
) -> float:
    triplet, _ = render_scene(background, sprite, placement, params)
    if loss_region == "ring":
        return ring_loss(triplet.source, triplet.target, triplet.mask, ring_width)
    return illum_loss(triplet.source, triplet.target, triplet.mask)


@dataclass(frozen=True)
class LightingGrid:
    """Cartesian lattice over lighting coordinates; unlisted ones come from `base`."""

    axes: tuple[tuple[str, tuple[float, ...]], ...] = ()
    base: LightingParams = LightingParams()

    def __post_init__(self):
        for name, _ in self.axes:
            if name not in GRID_AXES:
                raise ArgumentError(f"unknown grid axis '{name}', expected one of {', '.join(GRID_AXES)}")

    @classmethod
    def from_axes(cls, axes: dict[str, list[float]], base: LightingParams | None = None) -> "LightingGrid":
        return cls(
            tuple((name, tuple(float(v) for v in values)) for name, values in axes.items()),
            base or LightingParams(),
        )

    def __len__(self) -> int:
        n = 1
        for _, values in self.axes:
            n *= len(values)
        return n

    def __iter__(self):
        names = [name for name, _ in self.axes]
        for combo in itertools.product(*(values for _, values in self.axes)):
            params = self.base
            for name, value in zip(names, combo):
                params = params.with_coordinate(name, value)
            yield params


def parse_grid_axis(spec: str) -> tuple[str, list[float]]:
    """'angle=0:336:15' -> ('angle', [0, 24, ..., 336])"""
    try:
        name, rng = spec.split("=", 1)
        lo, hi, steps = rng.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError as e:
        raise ArgumentError(f"grid axis '{spec}' must look like param=lo:hi:steps") from e
    if steps < 1:
        raise ArgumentError(f"grid axis '{spec}' needs at least one step")
    name = name.strip()
    if name not in GRID_AXES:
        raise ArgumentError(f"unknown grid axis '{name}', expected one of {', '.join(GRID_AXES)}")
    return name, [float(v) for v in np.linspace(lo, hi, steps)]


def fit_grid(
    background: Image,
    sprite: PersonSprite,
    placement: Placement,
    grid: LightingGrid,
    loss_region: str = "mask",
    ring_width: int = 4,
    workers: int = 1,
) -> FitResult:
    """
    Exhaustive search. Ties go to the earliest lattice point; the trace holds
    the successive incumbents.
    """
    points = list(grid)
    if not points:
        raise ArgumentError("lighting grid is empty")
    loss_fn = partial(scene_loss, background, sprite, placement, loss_region=loss_region, ring_width=ring_width)
    losses = parallel_map(loss_fn, points, workers, desc="Grid search")

    best, best_loss = None, float("inf")
    trace = []
    for params, loss in zip(points, losses):
        if best is None or loss < best_loss:
            best, best_loss = params, loss
            trace.append((params, loss))
    return FitResult(best, best_loss, len(points), trace)


def fit_descent(
    background: Image,
    sprite: PersonSprite,
    placement: Placement,
    init: LightingParams,
    budget: int,
    loss_region: str = "mask",
    ring_width: int = 4,
) -> FitResult:
    """
    Cyclic coordinate descent. Each coordinate tries +step then -step and
    keeps the first strict improvement; a coordinate that fails both ways
    halves its step. Stops when the budget is spent or every step is below
    STEP_FLOOR.
    """
    if not isinstance(init, LightingParams):
        raise ArgumentError(f"init must be LightingParams, got {type(init).__name__}")
    if budget < 1:
        raise ArgumentError(f"budget must be >= 1, got {budget}")
    loss_fn = partial(scene_loss, background, sprite, placement, loss_region=loss_region, ring_width=ring_width)

    current, current_loss = init, loss_fn(init)
    evaluations = 1
    trace = [(current, current_loss)]
    steps = dict(INITIAL_STEPS)

    while evaluations < budget and any(s >= STEP_FLOOR for s in steps.values()):
        for name in COORDINATES:
            step = steps[name]
            if step < STEP_FLOOR:
                continue
            improved = False
            for direction in (1.0, -1.0):
                if evaluations >= budget:
                    break
                value = current.coordinate(name) + direction * step
                candidate = current.with_coordinate(name, value, clamp=True)
                if candidate == current:
                    continue
                loss = loss_fn(candidate)
                evaluations += 1
                if loss < current_loss:
                    current, current_loss = candidate, loss
                    trace.append((current, current_loss))
                    improved = True
                    break
            if evaluations >= budget:
                break
            if not improved:
                steps[name] = step / 2.0

    logger.debug("descent finished: loss %.6f after %d evaluations", current_loss, evaluations)
    return FitResult(current, current_loss, evaluations, trace)
