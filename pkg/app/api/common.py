import shlex
from pathlib import Path

import click

from app.core.config import ENV_WORKERS, Settings, load_settings
from app.core.log import setup_logging

MODES = click.Choice(["legacy_inpaint", "mask_guided"])
RESTORERS = click.Choice(["diffusion", "exemplar", "subprocess", "identity"])


def global_options(fn):
    """--config / --seed / --workers / --verbose, accepted by every subcommand."""
    options = [
        click.option(
            "--config",
            "config_path",
            type=click.Path(exists=True, dir_okay=False, path_type=Path),
            help="TOML config file; flags override its values.",
        ),
        click.option("--seed", type=int, help="Overrides the config seed."),
        click.option(
            "--workers",
            type=click.IntRange(min=1),
            help=f"Worker threads (default: ${ENV_WORKERS}, then the config, then 1).",
        ),
        click.option("--verbose", "-v", is_flag=True, help="Debug logging on stderr."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def removal_options(fn):
    options = [
        click.option("--mode", type=MODES, help="Composition pipeline."),
        click.option("--restorer", type=RESTORERS, help="Restorer G."),
        click.option("--refine-iters", type=click.IntRange(min=1), help="Coarse-to-fine stages (1 = none)."),
        click.option("--dilation", type=click.IntRange(min=0), help="Mask dilation before restoration, px."),
        click.option("--command", "restorer_command", help="External restorer command (subprocess restorer)."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def removal_overrides(mode, restorer, refine_iters, dilation, restorer_command) -> dict:
    return {
        "removal.mode": mode,
        "removal.restorer.name": restorer,
        "removal.refine_iters": refine_iters,
        "removal.mask_dilation": dilation,
        "removal.restorer.command": shlex.split(restorer_command) if restorer_command else None,
    }


def build_settings(config_path: Path | None, verbose: bool, overrides: dict) -> Settings:
    setup_logging(verbose)
    return load_settings(config_path, overrides)
