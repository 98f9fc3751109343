import json
import logging
from dataclasses import replace
from pathlib import Path

import click

from app.api.common import build_settings, global_options
from app.core.image import load_image, load_mask
from app.synth.lightfit import LightingGrid, fit_descent, fit_grid, parse_grid_axis
from app.synth.mosaic import Placement, extract_sprite
from app.synth.render import LightingParams, enumerate_angles

logger = logging.getLogger(__name__)

EXISTING_FILE = click.Path(exists=True, dir_okay=False, path_type=Path)


@click.command("fit-light")
@global_options
@click.option("--background", required=True, type=EXISTING_FILE, help="Background PNG.")
@click.option("--person", required=True, type=EXISTING_FILE, help="Donor PNG holding the person.")
@click.option("--person-mask", required=True, type=EXISTING_FILE, help="Donor person mask PNG.")
@click.option("--anchor", required=True, nargs=2, type=int, help="Feet position X Y on the background.")
@click.option("--scale", type=float, default=1.0, show_default=True, help="Sprite scale.")
@click.option("--flip", is_flag=True, help="Mirror the sprite.")
@click.option("--feather", type=click.IntRange(min=0), help="Feather radius in pixels.")
@click.option("--method", type=click.Choice(["grid", "descent"]), default="descent", show_default=True)
@click.option(
    "--grid",
    "grid_axes",
    multiple=True,
    help="Grid axis param=lo:hi:steps, repeatable (default: every render angle).",
)
@click.option("--budget", type=click.IntRange(min=1), help="Evaluation budget for descent.")
@click.option("--loss-region", type=click.Choice(["mask", "ring"]), help="Compare under the mask or against a ring.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), help="JSON result (default: stdout).")
@click.option("--trace", is_flag=True, help="Include the incumbent trace.")
def fit_light(
    config_path,
    seed,
    workers,
    verbose,
    background,
    person,
    person_mask,
    anchor,
    scale,
    flip,
    feather,
    method,
    grid_axes,
    budget,
    loss_region,
    out_path,
    trace,
):
    """Fit lighting so a pasted person matches the background it covers."""
    settings = build_settings(
        config_path,
        verbose,
        {
            "seed": seed,
            "workers": workers,
            "mosaic.feather_radius": feather,
            "lightfit.budget": budget,
            "lightfit.loss_region": loss_region,
        },
    )
    fit = settings.lightfit
    sprite = extract_sprite(
        load_image(person), load_mask(person_mask), settings.mosaic.feather_radius, origin_id=person.stem
    )
    placement = Placement(anchor_x=anchor[0], anchor_y=anchor[1], scale=scale, flip=flip)
    bg = load_image(background)
    start = LightingParams.from_config(settings.render.fixed)

    if method == "grid":
        if grid_axes:
            axes = dict(parse_grid_axis(spec) for spec in grid_axes)
        else:
            axes = {"angle": enumerate_angles(settings.render.angle_count)}
        base = replace(start, ramp_strength=settings.render.ramp_strength)
        grid = LightingGrid.from_axes(axes, base)
        logger.info("grid search over %d lighting settings", len(grid))
        result = fit_grid(bg, sprite, placement, grid, fit.loss_region, fit.ring_width, settings.workers)
    else:
        result = fit_descent(bg, sprite, placement, start, fit.budget, fit.loss_region, fit.ring_width)
    logger.info("best loss %.6f after %d evaluations", result.loss, result.evaluations)

    payload = json.dumps(result.to_dict(include_trace=trace), indent=2)
    if out_path is None:
        click.echo(payload)
    else:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(payload + "\n", encoding="utf-8")
    return 0
