"""
Person removal pipelines around a restorer G.

    legacy      T = (1 - m) * I + m * G(I', m),  I' = I with the person zeroed
    mask-guided T = (1 - m) * I + m * G(I, m)
    refinement  T_k+1 = (1 - m) * I + m * G(T_k, m)
"""

import logging
from dataclasses import dataclass, field

from app.core.compose import compose_masked, dilate, subtract_person
from app.core.config import RemovalConfig
from app.core.errors import ArgumentError, DimensionError, RestorerError
from app.core.image import Image, Mask, check_same_size
from app.removal.restorers import Restorer, build_restorer

logger = logging.getLogger(__name__)


def _restore(g: Restorer, image: Image, mask: Mask) -> Image:
    restored = g.restore(image, mask)
    if restored.size != image.size:
        raise RestorerError(f"restorer '{g.name}' returned {restored.size}, expected {image.size}")
    return restored


def remove_legacy(source: Image, mask: Mask, g: Restorer) -> Image:
    check_same_size(source, mask)
    return compose_masked(source, _restore(g, subtract_person(source, mask), mask), mask)


def remove_mask_guided(source: Image, mask: Mask, g: Restorer) -> Image:
    check_same_size(source, mask)
    return compose_masked(source, _restore(g, source, mask), mask)


def refine(source: Image, previous: Image, mask: Mask, g: Restorer) -> Image:
    """One refinement step; outside the mask the original source is kept."""
    return compose_masked(source, _restore(g, previous, mask), mask)


def remove_coarse_to_fine(source: Image, mask: Mask, g: Restorer, iters: int) -> tuple[Image, list[Image]]:
    if iters < 1:
        raise ArgumentError(f"iters must be >= 1, got {iters}")
    current = remove_mask_guided(source, mask, g)
    stages = [current]
    for _ in range(iters - 1):
        current = refine(source, current, mask, g)
        stages.append(current)
    return current, stages


@dataclass(frozen=True, eq=False)
class RemovalResult:
    image: Image
    stages: list[Image] = field(default_factory=list)
    # the mask handed to the restorer (after dilation)
    mask: Mask | None = None


def remove(source: Image, mask: Mask, config: RemovalConfig, g: Restorer | None = None) -> RemovalResult:
    """
    Runs the configured pipeline. The mask is dilated by `mask_dilation`
    before restoration; refinement steps follow either starting point.
    """
    if source.size != mask.size:
        raise DimensionError(f"source is {source.size}, mask is {mask.size}")
    g = g or build_restorer(config.restorer)
    work_mask = dilate(mask, config.mask_dilation)
    if work_mask.is_empty():
        return RemovalResult(source, [source], work_mask)

    if config.mode == "legacy_inpaint":
        current = remove_legacy(source, work_mask, g)
        stages = [current]
        for _ in range(config.refine_iters - 1):
            current = refine(source, current, work_mask, g)
            stages.append(current)
    else:
        current, stages = remove_coarse_to_fine(source, work_mask, g, config.refine_iters)
    logger.debug("removed %d px with %s/%s in %d stage(s)", work_mask.count, config.mode, g.name, len(stages))
    return RemovalResult(current, stages, work_mask)
