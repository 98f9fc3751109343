"""
Composition algebra shared by dataset synthesis and person removal.

    alpha_blend      I = a*T + (1 - a)*O
    compose_masked   (1 - m)*source + m*prediction
    subtract_person  source with the person region zeroed
"""

import numpy as np
from scipy import ndimage

from app.core.errors import ArgumentError
from app.core.image import AlphaMap, Image, Mask, check_same_size

HOLE_VALUE = 0.0


def alpha_blend(target: Image, layer: Image, alpha: AlphaMap) -> Image:
    check_same_size(target, layer, alpha)
    a = alpha.alphas[..., None]
    out = a * target.pixels + (1.0 - a) * layer.pixels
    return Image(np.clip(out, 0.0, 1.0))


def compose_masked(source: Image, prediction: Image, mask: Mask) -> Image:
    check_same_size(source, prediction, mask)
    return Image(np.where(mask.bits[..., None], prediction.pixels, source.pixels))


def subtract_person(source: Image, mask: Mask) -> Image:
    check_same_size(source, mask)
    return Image(np.where(mask.bits[..., None], HOLE_VALUE, source.pixels))


def dilate(mask: Mask, radius: int) -> Mask:
    """Chebyshev dilation: a bit is set iff a set input bit lies within `radius`."""
    if radius < 0:
        raise ArgumentError(f"dilation radius must be >= 0, got {radius}")
    if radius == 0 or mask.is_empty():
        return Mask(mask.bits)
    size = 2 * radius + 1
    grown = ndimage.maximum_filter(mask.bits.astype(np.uint8), size=size, mode="constant", cval=0)
    return Mask(grown.astype(bool))


def feather(silhouette: Mask, radius: int) -> AlphaMap:
    """1 on the silhouette, falling linearly to 0 at Euclidean distance `radius`."""
    if radius < 0:
        raise ArgumentError(f"feather radius must be >= 0, got {radius}")
    bits = silhouette.bits
    if radius == 0 or not bits.any():
        return AlphaMap(bits.astype(np.float64))
    dist = ndimage.distance_transform_edt(~bits)
    return AlphaMap(np.clip(1.0 - dist / radius, 0.0, 1.0))


def ring(mask: Mask, width: int) -> Mask:
    """Pixels within `width` of the mask but outside it."""
    grown = dilate(mask, width)
    return Mask(grown.bits & ~mask.bits)
