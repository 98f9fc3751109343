"""
Restorers fill the masked region of an image. Every restorer is
deterministic, keeps the input resolution and leaves unmasked pixels alone.
"""

import logging
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from app.core.config import RestorerConfig
from app.core.errors import ArgumentError, NoBoundaryError, RestorerError
from app.core.image import Image, Mask, check_same_size, load_image, save_image, save_mask

logger = logging.getLogger(__name__)

_CROSS = ndimage.generate_binary_structure(2, 1)


@runtime_checkable
class Restorer(Protocol):
    name: str

    def restore(self, image: Image, mask: Mask) -> Image: ...


def _boundary_clip(filled: np.ndarray, hole: np.ndarray) -> np.ndarray:
    """Clamps every 4-connected hole to the per-channel range of its boundary ring."""
    labels, n = ndimage.label(hole, structure=_CROSS)
    for k in range(1, n + 1):
        component = labels == k
        boundary = ndimage.binary_dilation(component, structure=_CROSS) & ~hole
        lo = filled[boundary].min(axis=0)
        hi = filled[boundary].max(axis=0)
        filled[component] = np.clip(filled[component], lo, hi)
    return filled


def diffusion_restore(image: Image, mask: Mask, iters: int = 2000, tol: float = 1e-5) -> Image:
    """
    Harmonic fill by Jacobi iteration: each masked pixel becomes the mean of
    its in-image 4-neighbours until the largest change drops below `tol`.
    Iteration starts from the input's own masked values.
    """
    check_same_size(image, mask)
    if iters < 1:
        raise ArgumentError(f"iters must be >= 1, got {iters}")
    if tol <= 0:
        raise ArgumentError(f"tol must be > 0, got {tol}")
    hole = mask.bits
    if not hole.any():
        return image
    if hole.all():
        raise NoBoundaryError("mask covers the whole image; nothing to diffuse from")

    ys, xs = np.nonzero(hole)
    y0, y1 = max(0, ys.min() - 1), min(image.height, ys.max() + 2)
    x0, x1 = max(0, xs.min() - 1), min(image.width, xs.max() + 2)
    u = np.array(image.pixels[y0:y1, x0:x1])
    h = hole[y0:y1, x0:x1]

    ones = np.ones(h.shape)
    counts = np.zeros(h.shape)
    counts[1:] += ones[:-1]
    counts[:-1] += ones[1:]
    counts[:, 1:] += ones[:, :-1]
    counts[:, :-1] += ones[:, 1:]
    counts = counts[..., None]

    for it in range(iters):
        s = np.zeros_like(u)
        s[1:] += u[:-1]
        s[:-1] += u[1:]
        s[:, 1:] += u[:, :-1]
        s[:, :-1] += u[:, 1:]
        new = s / counts
        change = np.abs(new[h] - u[h]).max()
        u[h] = new[h]
        if change < tol:
            logger.debug("diffusion converged after %d iterations", it + 1)
            break

    u = _boundary_clip(u, h)
    out = np.array(image.pixels)
    out[y0:y1, x0:x1] = np.where(h[..., None], u, out[y0:y1, x0:x1])
    return Image(np.clip(out, 0.0, 1.0))


@dataclass
class FillReport:
    exemplar_pixels: int = 0
    fallback_pixels: int = 0


def exemplar_fill(
    image: Image,
    mask: Mask,
    patch_size: int = 9,
    search_radius: int = 64,
) -> tuple[Image, FillReport]:
    """
    Greedy exemplar fill from the hole front inwards. The front pixel whose
    window holds the most known pixels goes first (raster order breaks ties);
    its window's unknown pixels are copied from the best-SSD fully unmasked
    patch whose centre lies within `search_radius`. Pixels with no exemplar in
    reach are handed to diffusion_restore at the end.
    """
    check_same_size(image, mask)
    if patch_size < 3 or patch_size % 2 == 0:
        raise ArgumentError(f"patch_size must be odd and >= 3, got {patch_size}")
    if search_radius < patch_size:
        raise ArgumentError(f"search_radius ({search_radius}) must be >= patch_size ({patch_size})")
    report = FillReport()
    hole = mask.bits
    if not hole.any():
        return image, report

    H, W = image.size
    half = patch_size // 2
    pad = ((half, half), (half, half))
    u = np.pad(np.array(image.pixels), pad + ((0, 0),))
    known = np.pad(~hole, pad, constant_values=False)
    hole_padded = np.pad(hole, pad, constant_values=False)
    deferred = np.zeros_like(known)

    # candidate centres: whole patch inside the image and free of original hole pixels
    valid = np.zeros((H, W), dtype=bool)
    exemplars = None
    if H >= patch_size and W >= patch_size:
        hole_in_window = ndimage.uniform_filter(hole.astype(np.float64), size=patch_size, mode="constant")
        valid[half : H - half, half : W - half] = hole_in_window[half : H - half, half : W - half] < 1e-12
        exemplars = sliding_window_view(image.pixels, (patch_size, patch_size), axis=(0, 1))

    while True:
        todo = ~known & ~deferred
        todo[:half] = todo[-half:] = False
        todo[:, :half] = todo[:, -half:] = False
        if not todo.any():
            break
        front = todo & ndimage.binary_dilation(known, structure=_CROSS)
        if not front.any():
            front = todo
        support = ndimage.uniform_filter(known.astype(np.float64), size=patch_size, mode="constant")
        priority = np.where(front, support, -1.0)
        py, px = np.unravel_index(np.argmax(priority), priority.shape)
        ty, tx = py - half, px - half  # image coordinates of the target centre

        window = (slice(py - half, py + half + 1), slice(px - half, px + half + 1))
        weights = known[window].astype(np.float64)
        target = u[window].transpose(2, 0, 1)

        cy0, cy1 = max(half, ty - search_radius), min(H - half, ty + search_radius + 1)
        cx0, cx1 = max(half, tx - search_radius), min(W - half, tx + search_radius + 1)
        best = None
        if cy0 < cy1 and cx0 < cx1:
            cand_valid = valid[cy0:cy1, cx0:cx1]
            if cand_valid.any():
                cands = exemplars[cy0 - half : cy1 - half, cx0 - half : cx1 - half]
                ssd = np.einsum("ijcab,ab->ij", (cands - target) ** 2, weights)
                ssd = np.where(cand_valid, ssd, np.inf)
                iy, ix = np.unravel_index(np.argmin(ssd), ssd.shape)
                best = (cy0 + iy, cx0 + ix)

        unknown = hole_padded[window] & ~known[window] & ~deferred[window]
        if best is None:
            deferred[window] |= unknown
            report.fallback_pixels += int(unknown.sum())
            continue
        by, bx = best
        source = image.pixels[by - half : by + half + 1, bx - half : bx + half + 1]
        region = u[window]
        region[unknown] = source[unknown]
        known[window] |= unknown
        report.exemplar_pixels += int(unknown.sum())

    filled = u[half : half + H, half : half + W]
    result = Image(np.where(hole[..., None], np.clip(filled, 0.0, 1.0), image.pixels))
    rest = deferred[half : half + H, half : half + W]
    if rest.any():
        logger.warning("exemplar fill found no patch for %d pixels; diffusing them", int(rest.sum()))
        result = diffusion_restore(result, Mask(rest))
    return result, report


def exemplar_restore(image: Image, mask: Mask, patch_size: int = 9, search_radius: int = 64) -> Image:
    return exemplar_fill(image, mask, patch_size, search_radius)[0]


class DiffusionRestorer:
    name = "diffusion"

    def __init__(self, iters: int = 2000, tol: float = 1e-5):
        self.iters = iters
        self.tol = tol

    def restore(self, image: Image, mask: Mask) -> Image:
        return diffusion_restore(image, mask, self.iters, self.tol)


class ExemplarRestorer:
    name = "exemplar"

    def __init__(self, patch_size: int = 9, search_radius: int = 64):
        self.patch_size = patch_size
        self.search_radius = search_radius

    def restore(self, image: Image, mask: Mask) -> Image:
        return exemplar_restore(image, mask, self.patch_size, self.search_radius)

    def fill(self, image: Image, mask: Mask) -> tuple[Image, FillReport]:
        return exemplar_fill(image, mask, self.patch_size, self.search_radius)


class IdentityRestorer:
    """Returns its input; the removal pipelines then show what they feed G."""

    name = "identity"

    def restore(self, image: Image, mask: Mask) -> Image:
        return image


class SubprocessRestorer:
    """
    Runs an external program as `<command...> <source.png> <mask.png> <out.png>`,
    so a learned model can stand in for G. Non-zero exit is a RestorerError.
    """

    name = "subprocess"

    def __init__(self, command: list[str], timeout: float | None = None):
        if not command:
            raise ArgumentError("subprocess restorer needs a command")
        self.command = list(command)
        self.timeout = timeout

    def restore(self, image: Image, mask: Mask) -> Image:
        with tempfile.TemporaryDirectory(prefix="prk-restore-") as tmp:
            tmp = Path(tmp)
            src, msk, out = tmp / "source.png", tmp / "mask.png", tmp / "out.png"
            save_image(image, src)
            save_mask(mask, msk)
            try:
                proc = subprocess.run(
                    [*self.command, str(src), str(msk), str(out)],
                    capture_output=True,
                    text=True,
                    timeout=self.timeout,
                )
            except (OSError, subprocess.TimeoutExpired) as e:
                raise RestorerError(f"restorer command {self.command[0]!r} failed to run: {e}") from e
            if proc.returncode != 0:
                raise RestorerError(
                    f"restorer command exited with {proc.returncode}: {proc.stderr.strip()[:500]}"
                )
            if not out.exists():
                raise RestorerError("restorer command wrote no output image")
            result = load_image(out)
        if result.size != image.size:
            raise RestorerError(f"restorer returned {result.size}, expected {image.size}")
        return result


def build_restorer(config: RestorerConfig) -> Restorer:
    if config.name == "diffusion":
        return DiffusionRestorer(config.diffusion_iters, config.diffusion_tol)
    if config.name == "exemplar":
        return ExemplarRestorer(config.patch_size, config.search_radius)
    if config.name == "subprocess":
        return SubprocessRestorer(config.command)
    return IdentityRestorer()
