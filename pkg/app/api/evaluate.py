import json
import logging
from pathlib import Path

import click

from app.api.common import build_settings, global_options, removal_options, removal_overrides
from app.db.manifest import MANIFEST_NAME, read_manifest, validate_manifest, write_manifest
from app.eval.harness import run_ablation, run_eval, split
from app.eval.report import comparison_table, load_lpips

logger = logging.getLogger(__name__)

MANIFEST = click.Path(exists=True, dir_okay=False, path_type=Path)


@click.command("evaluate")
@global_options
@removal_options
@click.option("--manifest", "manifest_path", required=True, type=MANIFEST)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--lpips-file", type=MANIFEST, help="JSON of precomputed LPIPS values by entry id.")
def evaluate(
    config_path,
    seed,
    workers,
    verbose,
    mode,
    restorer,
    refine_iters,
    dilation,
    restorer_command,
    manifest_path,
    out_dir,
    lpips_file,
):
    """Run removal over the test split and write report.csv / report.md."""
    overrides = {"seed": seed, "workers": workers}
    overrides.update(removal_overrides(mode, restorer, refine_iters, dilation, restorer_command))
    settings = build_settings(config_path, verbose, overrides)

    manifest = read_manifest(manifest_path)
    lpips = load_lpips(lpips_file) if lpips_file else None
    report = run_eval(
        manifest, settings.removal, out_dir, settings.workers, lpips, pred_name=settings.harness.pred_dir
    )
    report.write(out_dir)
    click.echo(comparison_table([report]))
    if report.failures:
        logger.error("%d of %d entries failed", len(report.failures), len(report.failures) + len(report.rows))
        return 1
    return 0


@click.command("ablate")
@global_options
@removal_options
@click.option("--manifest", "manifest_path", required=True, type=MANIFEST)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--lpips-file", type=MANIFEST)
def ablate(
    config_path,
    seed,
    workers,
    verbose,
    mode,
    restorer,
    refine_iters,
    dilation,
    restorer_command,
    manifest_path,
    out_dir,
    lpips_file,
):
    """Compare legacy, mask-guided and coarse-to-fine removal on one split."""
    overrides = {"seed": seed, "workers": workers}
    overrides.update(removal_overrides(mode, restorer, refine_iters, dilation, restorer_command))
    settings = build_settings(config_path, verbose, overrides)

    manifest = read_manifest(manifest_path)
    lpips = load_lpips(lpips_file) if lpips_file else None
    reports = run_ablation(manifest, settings.removal, out_dir, settings.workers, lpips)
    click.echo(comparison_table(reports))
    return 1 if any(r.failures for r in reports) else 0


@click.command("split")
@global_options
@click.option("--manifest", "manifest_path", required=True, type=MANIFEST)
@click.option("--train-fraction", type=click.FloatRange(0, 1, min_open=True, max_open=True))
@click.option("--incremental", is_flag=True, help="Keep existing train/test tags; deal only new entries.")
@click.option(
    "--out",
    "out_path",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Where to write the tagged manifest (default: in place).",
)
def split_manifest(config_path, seed, workers, verbose, manifest_path, train_fraction, incremental, out_path):
    """Tag manifest entries train/test with a seeded shuffle."""
    settings = build_settings(
        config_path,
        verbose,
        {"seed": seed, "workers": workers, "harness.train_fraction": train_fraction},
    )
    manifest = read_manifest(manifest_path)
    tagged = split(manifest, settings.harness.train_fraction, settings.seed, incremental=incremental)
    target = out_path or manifest_path
    if target.parent.resolve() != manifest_path.parent.resolve():
        logger.warning("%s is not beside the images; relative paths will not resolve", target)
    write_manifest(tagged, target)
    logger.info(
        "%d train / %d test -> %s", len(tagged.by_split("train")), len(tagged.by_split("test")), target
    )
    return 0


@click.command("validate-manifest")
@global_options
@click.option(
    "--manifest",
    "manifest_path",
    type=MANIFEST,
    help=f"Manifest to check (default: ./{MANIFEST_NAME}).",
)
def validate(config_path, seed, workers, verbose, manifest_path):
    """Check that every entry's files exist and ids are unique."""
    build_settings(config_path, verbose, {"seed": seed, "workers": workers})
    manifest = read_manifest(manifest_path or Path(MANIFEST_NAME))
    problems = validate_manifest(manifest)
    click.echo(json.dumps({"entries": len(manifest.entries), "problems": problems}, indent=2))
    return 1 if problems else 0
