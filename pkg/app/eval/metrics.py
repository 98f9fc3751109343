"""
Image quality metrics on the 0-255 scale: PSNR, SSIM, RMSE and the
mask-restricted RMSEw.
"""

import math

import numpy as np
from scipy import ndimage

from app.core.errors import DimensionError, EmptySelectionError
from app.core.image import Image, Mask, check_same_size

PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
LUMA = np.array([0.299, 0.587, 0.114])


def rmse(a: Image, b: Image) -> float:
    check_same_size(a, b)
    diff = 255.0 * (a.pixels - b.pixels)
    return float(np.sqrt(np.mean(diff**2)))


def rmse_weighted(a: Image, b: Image, mask: Mask) -> float:
    check_same_size(a, b, mask)
    if mask.is_empty():
        raise EmptySelectionError("RMSEw needs a non-empty mask")
    diff = 255.0 * (a.pixels[mask.bits] - b.pixels[mask.bits])
    return float(np.sqrt(np.mean(diff**2)))


def psnr_from_rmse(value: float) -> float:
    if value == 0:
        return PSNR_CAP
    return min(PSNR_CAP, 20.0 * math.log10(255.0 / value))


def psnr(a: Image, b: Image) -> float:
    return psnr_from_rmse(rmse(a, b))


def luma(image: Image) -> np.ndarray:
    """ITU-R 601 luma on the 0-255 scale."""
    return 255.0 * (image.pixels @ LUMA)


def ssim(a: Image, b: Image) -> float:
    """
    Mean SSIM over the valid 11x11 Gaussian windows (sigma 1.5) of the luma
    planes, with C1 = (0.01*255)^2 and C2 = (0.03*255)^2.
    """
    check_same_size(a, b)
    if min(a.size) < SSIM_WINDOW:
        raise DimensionError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.size}")
    x, y = luma(a), luma(b)
    c1 = (SSIM_K1 * 255.0) ** 2
    c2 = (SSIM_K2 * 255.0) ** 2
    truncate = ((SSIM_WINDOW - 1) / 2) / SSIM_SIGMA

    def blur(img):
        return ndimage.gaussian_filter(img, sigma=SSIM_SIGMA, truncate=truncate, mode="reflect")

    ux, uy = blur(x), blur(y)
    vx = blur(x * x) - ux * ux
    vy = blur(y * y) - uy * uy
    vxy = blur(x * y) - ux * uy

    num = (2 * ux * uy + c1) * (2 * vxy + c2)
    den = (ux**2 + uy**2 + c1) * (vx + vy + c2)
    s = num / den
    pad = (SSIM_WINDOW - 1) // 2
    return float(s[pad:-pad, pad:-pad].mean())
