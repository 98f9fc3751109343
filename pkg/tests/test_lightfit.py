from dataclasses import replace

import numpy as np
import pytest

from app.core.errors import ArgumentError, EmptySelectionError
from app.core.image import AlphaMap, Image, Mask
from app.synth.lightfit import (
    LightingGrid,
    fit_descent,
    fit_grid,
    illum_loss,
    parse_grid_axis,
    ring_loss,
    scene_loss,
)
from app.synth.mosaic import PersonSprite, Placement, footprint
from app.synth.render import LightingParams, apply_lighting

SIZE = 32
PLACEMENT = Placement(16, 26)


def _scene(seed: int):
    """
    Flat-coloured billboard whose background patch is the billboard lit
    with known params plus noise, so those params are near-optimal.
    """
    rng = np.random.default_rng(seed)
    colour = rng.uniform(0.35, 0.5, size=3)
    sprite = PersonSprite(
        Image(np.broadcast_to(colour, (12, 8, 3))), AlphaMap(np.ones((12, 8))), f"s{seed}", 0
    )
    truth = LightingParams(
        gain=tuple(float(g) for g in rng.uniform(0.8, 1.2, size=3)),
        offset=float(rng.uniform(-0.05, 0.05)),
    )
    pixels = rng.uniform(0.2, 0.8, size=(SIZE, SIZE, 3))
    top, left, h, w = footprint(sprite, PLACEMENT)
    lit = apply_lighting(sprite, truth).patch.pixels
    pixels[top : top + h, left : left + w] = lit + rng.uniform(-0.05, 0.05, size=lit.shape)
    return Image(np.clip(pixels, 0.0, 1.0)), sprite, truth


def test_illum_loss_examples():
    mask = Mask(np.array([[True, True, False]]))
    zeros = Image.filled(1, 3, 0.0)
    assert illum_loss(zeros, zeros, mask) == 0.0
    assert illum_loss(zeros, Image.filled(1, 3, 1.0), mask) == 1.0
    target = Image(np.array([[[0.1] * 3, [0.3] * 3, [0.9] * 3]]))
    assert illum_loss(zeros, target, mask) == pytest.approx(0.2)


def test_illum_loss_is_symmetric(random_image, random_mask):
    a, b, m = random_image(), random_image(), random_mask()
    assert illum_loss(a, b, m) == pytest.approx(illum_loss(b, a, m))


def test_illum_loss_needs_a_mask(random_image):
    with pytest.raises(EmptySelectionError):
        illum_loss(random_image(4, 4), random_image(4, 4), Mask.empty(4, 4))


def test_ring_loss_compares_against_the_surround():
    bits = np.zeros((9, 9), dtype=bool)
    bits[3:6, 3:6] = True
    source = Image.filled(9, 9, 0.6)
    target = Image.filled(9, 9, 0.2)
    assert ring_loss(source, target, Mask(bits), width=2) == pytest.approx(0.4)


def test_grid_counts_and_singleton():
    background, sprite, truth = _scene(0)
    grid = LightingGrid.from_axes({"angle": list(range(0, 360, 24)), "gain": [0.9, 1.0, 1.1]})
    assert len(grid) == 45
    one = LightingGrid.from_axes({"offset": [0.0]})
    result = fit_grid(background, sprite, PLACEMENT, one)
    assert result.evaluations == 1
    assert result.params == LightingParams()


def test_grid_rejects_unknown_axes():
    with pytest.raises(ArgumentError):
        LightingGrid.from_axes({"hue": [0.0]})
    with pytest.raises(ArgumentError):
        parse_grid_axis("gain=1:2")


def test_parse_grid_axis():
    assert parse_grid_axis("offset=-0.1:0.1:3") == ("offset", pytest.approx([-0.1, 0.0, 0.1]))


@pytest.mark.parametrize("seed", range(20))
def test_grid_beats_the_generating_params(seed):
    background, sprite, truth = _scene(seed)
    offsets = sorted({truth.offset - 0.05, truth.offset, truth.offset + 0.05})
    base = replace(truth, offset=0.0)
    grid = LightingGrid.from_axes({"offset": offsets, "gamma": [0.9, 1.0, 1.1]}, base)
    result = fit_grid(background, sprite, PLACEMENT, grid, workers=2)

    losses = [scene_loss(background, sprite, PLACEMENT, p) for p in grid]
    assert result.loss == min(losses)
    assert result.params == list(grid)[losses.index(min(losses))]
    assert result.loss <= scene_loss(background, sprite, PLACEMENT, truth)


def test_descent_recovers_near_optimal_lighting():
    successes = 0
    for seed in range(20):
        background, sprite, truth = _scene(seed)
        target_loss = scene_loss(background, sprite, PLACEMENT, truth)
        init = truth.with_coordinate("offset", truth.offset + 0.3)
        result = fit_descent(background, sprite, PLACEMENT, init, budget=500)
        assert result.evaluations <= 500
        if result.loss <= 1.05 * target_loss:
            successes += 1
    assert successes >= 18


def test_descent_trace_never_increases_and_is_deterministic():
    background, sprite, _ = _scene(3)
    first = fit_descent(background, sprite, PLACEMENT, LightingParams(), budget=120)
    second = fit_descent(background, sprite, PLACEMENT, LightingParams(), budget=120)
    losses = [loss for _, loss in first.trace]
    assert all(b <= a for a, b in zip(losses, losses[1:]))
    assert losses[-1] == first.loss
    assert first.loss == pytest.approx(scene_loss(background, sprite, PLACEMENT, first.params))
    assert first.to_dict(include_trace=True) == second.to_dict(include_trace=True)


def test_descent_budget_of_one_returns_the_init():
    background, sprite, _ = _scene(4)
    init = LightingParams(offset=0.1)
    result = fit_descent(background, sprite, PLACEMENT, init, budget=1)
    assert result.evaluations == 1
    assert result.params == init


def test_descent_rejects_bad_init():
    background, sprite, _ = _scene(5)
    with pytest.raises(ArgumentError):
        fit_descent(background, sprite, PLACEMENT, {"offset": 0.0}, budget=10)


def test_illum_loss_obeys_the_triangle_inequality(random_image, random_mask):
    for _ in range(50):
        a, b, c = random_image(), random_image(), random_image()
        mask = random_mask()
        if mask.is_empty():
            continue
        assert illum_loss(a, c, mask) <= illum_loss(a, b, mask) + illum_loss(b, c, mask) + 1e-12


def test_ring_loss_only_sees_mean_colours():
    bits = np.zeros((9, 9), dtype=bool)
    bits[3:6, 3:6] = True
    checker = np.where((np.indices((9, 9)).sum(axis=0) % 2)[..., None] == 0, 0.2, 0.6)
    source = Image(np.broadcast_to(checker, (9, 9, 3)))
    # person mean (5 dark, 4 bright cells) equals the flat surround
    target = Image.filled(9, 9, (5 * 0.2 + 4 * 0.6) / 9)
    mask = Mask(bits)
    assert ring_loss(source, target, mask, width=2) == pytest.approx(0.0)
    assert illum_loss(source, target, mask) > 0.1
