import logging
from pathlib import Path

import click

from app.api.common import build_settings, global_options, removal_options, removal_overrides
from app.core.image import load_image, load_mask, save_image
from app.removal.pipeline import remove

logger = logging.getLogger(__name__)


@click.command("remove")
@global_options
@removal_options
@click.option(
    "--in",
    "in_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Source image with the person.",
)
@click.option(
    "--mask",
    "mask_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Binary person mask.",
)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--strict-mask", is_flag=True, help="Reject masks holding values other than 0 and 255.")
@click.option(
    "--stages",
    "stages_dir",
    type=click.Path(file_okay=False, path_type=Path),
    help="Also write every coarse-to-fine stage here.",
)
def remove_person(
    config_path,
    seed,
    workers,
    verbose,
    mode,
    restorer,
    refine_iters,
    dilation,
    restorer_command,
    in_path,
    mask_path,
    out_path,
    strict_mask,
    stages_dir,
):
    """Remove the masked person from one image."""
    overrides = {"seed": seed, "workers": workers}
    overrides.update(removal_overrides(mode, restorer, refine_iters, dilation, restorer_command))
    settings = build_settings(config_path, verbose, overrides)

    source = load_image(in_path)
    mask = load_mask(mask_path, strict=strict_mask)
    result = remove(source, mask, settings.removal)
    save_image(result.image, out_path)
    if stages_dir is not None:
        for k, stage in enumerate(result.stages, start=1):
            save_image(stage, stages_dir / f"stage_{k}.png")
    logger.info("wrote %s (%d stage(s))", out_path, len(result.stages))
    return 0
