import sys

import numpy as np
import pytest

from app.core.compose import subtract_person
from app.core.config import RestorerConfig
from app.core.errors import ArgumentError, NoBoundaryError, RestorerError
from app.core.image import Image, Mask
from app.removal.restorers import (
    DiffusionRestorer,
    ExemplarRestorer,
    IdentityRestorer,
    Restorer,
    SubprocessRestorer,
    build_restorer,
    diffusion_restore,
    exemplar_fill,
)


def _hole(height, width, y0, y1, x0, x1):
    bits = np.zeros((height, width), dtype=bool)
    bits[y0:y1, x0:x1] = True
    return Mask(bits)


def _stripes(height=48, width=48):
    levels = np.array([0.1, 0.25, 0.4, 0.55, 0.7, 0.85])
    row = levels[np.arange(width) % 6]
    return Image(np.broadcast_to(row[None, :, None], (height, width, 3)))


def test_diffusion_reproduces_a_linear_gradient():
    ys, xs = np.mgrid[0:16, 0:16]
    truth = Image(np.repeat(((xs + 2 * ys) / 45.0)[..., None], 3, axis=2))
    mask = _hole(16, 16, 6, 9, 7, 10)
    out = diffusion_restore(subtract_person(truth, mask), mask, iters=2000, tol=1e-5)
    assert np.abs(out.pixels - truth.pixels).max() < 1e-4


def test_diffusion_obeys_the_maximum_principle(random_image):
    image = random_image(20, 20)
    mask = _hole(20, 20, 5, 12, 4, 15)
    out = diffusion_restore(image, mask)
    ring = np.zeros((20, 20), dtype=bool)
    ring[4:13, 3:16] = True
    ring &= ~mask.bits
    for c in range(3):
        inside = out.pixels[..., c][mask.bits]
        assert inside.min() >= image.pixels[..., c][ring].min() - 1e-12
        assert inside.max() <= image.pixels[..., c][ring].max() + 1e-12
    assert np.array_equal(out.pixels[~mask.bits], image.pixels[~mask.bits])


def test_diffusion_edge_cases(random_image):
    image = random_image(6, 6)
    assert diffusion_restore(image, Mask.empty(6, 6)) is image
    with pytest.raises(NoBoundaryError):
        diffusion_restore(image, Mask.full(6, 6))
    with pytest.raises(ArgumentError):
        diffusion_restore(image, Mask.empty(6, 6), iters=0)


def test_uniform_image_stays_uniform():
    image = Image.filled(24, 24, 0.7)
    mask = _hole(24, 24, 8, 14, 9, 15)
    hollow = subtract_person(image, mask)
    for g in (DiffusionRestorer(), ExemplarRestorer()):
        assert np.allclose(g.restore(hollow, mask).pixels, 0.7)


def test_exemplar_continues_a_periodic_texture():
    truth = _stripes()
    mask = _hole(48, 48, 20, 28, 18, 27)
    filled, report = exemplar_fill(subtract_person(truth, mask), mask, patch_size=9, search_radius=64)
    err = np.abs(filled.pixels - truth.pixels).max(axis=2)[mask.bits]
    assert np.mean(err <= 2 / 255) >= 0.95
    assert report.exemplar_pixels == mask.count
    assert report.fallback_pixels == 0
    assert np.array_equal(filled.pixels[~mask.bits], truth.pixels[~mask.bits])


def test_exemplar_falls_back_to_diffusion_without_candidates():
    image = Image.filled(6, 6, 0.3)
    mask = _hole(6, 6, 2, 4, 2, 4)
    filled, report = exemplar_fill(image, mask, patch_size=9, search_radius=16)
    assert report.fallback_pixels == 4
    assert np.allclose(filled.pixels, 0.3)


def test_exemplar_validates_parameters(random_image):
    with pytest.raises(ArgumentError):
        exemplar_fill(random_image(12, 12), Mask.empty(12, 12), patch_size=8)
    with pytest.raises(ArgumentError):
        exemplar_fill(random_image(12, 12), Mask.empty(12, 12), patch_size=9, search_radius=4)


def test_exemplar_is_deterministic(random_image):
    image = random_image(30, 30)
    mask = _hole(30, 30, 10, 16, 12, 18)
    a, _ = exemplar_fill(image, mask)
    b, _ = exemplar_fill(image, mask)
    assert np.array_equal(a.pixels, b.pixels)


def test_subprocess_restorer_round_trips_through_files(random_image):
    copy = [sys.executable, "-c", "import shutil, sys; shutil.copy(sys.argv[1], sys.argv[3])"]
    image = random_image(8, 8)
    out = SubprocessRestorer(copy).restore(image, Mask.empty(8, 8))
    assert np.array_equal(out.pixels, image.quantized().pixels)


def test_subprocess_restorer_reports_failures(random_image):
    failing = SubprocessRestorer([sys.executable, "-c", "import sys; sys.exit(3)"])
    with pytest.raises(RestorerError):
        failing.restore(random_image(4, 4), Mask.empty(4, 4))
    with pytest.raises(ArgumentError):
        SubprocessRestorer([])


def test_build_restorer_by_name():
    assert isinstance(build_restorer(RestorerConfig(name="diffusion")), DiffusionRestorer)
    assert isinstance(build_restorer(RestorerConfig(name="exemplar", patch_size=7)), ExemplarRestorer)
    assert isinstance(build_restorer(RestorerConfig(name="identity")), IdentityRestorer)
    g = build_restorer(RestorerConfig(name="subprocess", command=["true"]))
    assert isinstance(g, SubprocessRestorer)
    assert isinstance(g, Restorer)
