import logging
from pathlib import Path

import click

from app.api.common import build_settings, global_options
from app.db.manifest import TripletWriter
from app.synth.assets import discover_backgrounds, discover_persons
from app.synth.mosaic import synth_mosaic_batch
from app.synth.render import synth_render_batch

logger = logging.getLogger(__name__)


def asset_options(fn):
    options = [
        click.option("--count", type=click.IntRange(min=1), help="Number of scenes to synthesize."),
        click.option(
            "--backgrounds",
            type=click.Path(file_okay=False, path_type=Path),
            help="Directory of background PNGs (with optional *_region.png).",
        ),
        click.option(
            "--persons",
            type=click.Path(file_okay=False, path_type=Path),
            help="Directory of donor PNGs with *_mask.png.",
        ),
        click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), help="Output directory."),
        click.option("--feather", type=click.IntRange(min=0), help="Feather radius in pixels."),
        click.option("--pairing", type=click.Choice(["random", "exhaustive"]), help="Background/person pairing."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _asset_overrides(seed, workers, count, backgrounds, persons, out_dir, feather, pairing) -> dict:
    return {
        "seed": seed,
        "workers": workers,
        "mosaic.count": count,
        "mosaic.backgrounds_dir": backgrounds,
        "mosaic.persons_dir": persons,
        "mosaic.out_dir": out_dir,
        "mosaic.feather_radius": feather,
        "mosaic.pairing": pairing,
    }


@click.command("synth-mosaic")
@global_options
@asset_options
def synth_mosaic(config_path, seed, workers, verbose, count, backgrounds, persons, out_dir, feather, pairing):
    """Cut persons out of donor photos and paste them onto backgrounds."""
    settings = build_settings(
        config_path,
        verbose,
        _asset_overrides(seed, workers, count, backgrounds, persons, out_dir, feather, pairing),
    )
    m = settings.mosaic
    writer = TripletWriter(m.out_dir)
    entries = synth_mosaic_batch(
        discover_backgrounds(m.backgrounds_dir),
        discover_persons(m.persons_dir),
        m.count,
        m,
        seed=settings.seed,
        workers=settings.workers,
        sink=writer,
    )
    manifest = writer.finish(entries)
    logger.info("wrote %d triplets to %s", len(manifest.entries), m.out_dir)
    return 0


@click.command("synth-render")
@global_options
@asset_options
@click.option(
    "--lighting",
    type=click.Choice(["fixed", "random", "learned", "full"]),
    help="Lighting regime: one fixed setting, random, fitted per scene, or every angle.",
)
@click.option("--angles", type=click.IntRange(min=1), help="Illumination angles for the full regime.")
@click.option("--budget", type=click.IntRange(min=1), help="Evaluation budget for learned lighting.")
@click.option("--depth/--no-depth", default=None, help="Write depth maps.")
def synth_render(
    config_path,
    seed,
    workers,
    verbose,
    count,
    backgrounds,
    persons,
    out_dir,
    feather,
    pairing,
    lighting,
    angles,
    budget,
    depth,
):
    """Place persons as lit billboards with editable illumination."""
    overrides = _asset_overrides(seed, workers, count, backgrounds, persons, out_dir, feather, pairing)
    overrides.update(
        {
            "render.lighting": lighting,
            "render.angle_count": angles,
            "render.write_depth": depth,
            "lightfit.budget": budget,
        }
    )
    settings = build_settings(config_path, verbose, overrides)
    m = settings.mosaic
    writer = TripletWriter(m.out_dir, write_depth=settings.render.write_depth)
    entries = synth_render_batch(
        discover_backgrounds(m.backgrounds_dir),
        discover_persons(m.persons_dir),
        m.count,
        m,
        settings.render,
        settings.lightfit,
        seed=settings.seed,
        workers=settings.workers,
        sink=writer,
    )
    manifest = writer.finish(entries)
    logger.info("wrote %d rendered triplets to %s", len(manifest.entries), m.out_dir)
    return 0
