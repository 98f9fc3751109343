"""
Experiment orchestration: seeded train/test splits and batch removal runs
scored with the metric suite.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from app.core.config import RemovalConfig, config_hash
from app.core.errors import ArgumentError, AssetError, DimensionError, InvariantViolation, KitError
from app.core.image import load_image, load_mask, save_image
from app.core.workers import parallel_map
from app.db.manifest import Manifest, ManifestEntry
from app.eval.metrics import psnr, rmse, rmse_weighted, ssim
from app.eval.report import MetricsReport, MetricsRow, comparison_table
from app.removal.pipeline import remove
from app.removal.restorers import Restorer, build_restorer

logger = logging.getLogger(__name__)


def split(manifest: Manifest, train_fraction: float, seed: int, incremental: bool = False) -> Manifest:
    """
    Seeded shuffle, then the first round(train_fraction * N) entries train and
    the rest test (each side keeps at least one entry). With `incremental`,
    entries already tagged keep their tag and only unassigned ones are dealt.
    """
    if not 0 < train_fraction < 1:
        raise ArgumentError(f"train fraction must be in (0, 1), got {train_fraction}")
    n = len(manifest.entries)
    if n < 2:
        raise ArgumentError(f"need at least 2 entries to split, got {n}")
    n_train = min(n - 1, max(1, round(train_fraction * n)))
    rng = np.random.default_rng(seed)

    if incremental:
        pending = [i for i, e in enumerate(manifest.entries) if e.split == "unassigned"]
        have_train = sum(1 for e in manifest.entries if e.split == "train")
        want = min(len(pending), max(0, n_train - have_train))
        order = rng.permutation(len(pending))
        train_idx = {pending[k] for k in order[:want]}
        assign = {i: ("train" if i in train_idx else "test") for i in pending}
    else:
        order = rng.permutation(n)
        train_idx = set(order[:n_train].tolist())
        assign = {i: ("train" if i in train_idx else "test") for i in range(n)}

    entries = [
        e.model_copy(update={"split": assign[i]}) if i in assign else e
        for i, e in enumerate(manifest.entries)
    ]
    return Manifest(entries=entries, root=manifest.root)


def method_name(config: RemovalConfig) -> str:
    name = f"{config.mode}/{config.restorer.name}"
    if config.refine_iters > 1:
        name += f"/cf{config.refine_iters}"
    return name


@dataclass(frozen=True)
class EntryFailure:
    id: str
    message: str


def _evaluate_entry(
    manifest: Manifest,
    entry: ManifestEntry,
    config: RemovalConfig,
    g: Restorer,
    pred_dir: Path,
    lpips: dict[str, float],
) -> MetricsRow:
    try:
        source = load_image(manifest.resolve(entry.source_path))
        target = load_image(manifest.resolve(entry.target_path))
        mask = load_mask(manifest.resolve(entry.mask_path))
    except AssetError as e:
        raise AssetError(f"entry {entry.id}: {e}") from e
    if not (source.size == target.size == mask.size):
        raise DimensionError(f"entry {entry.id}: source, target and mask differ in size")

    if mask.is_empty():
        prediction = source
    else:
        result = remove(source, mask, config, g)
        prediction = result.image
        outside = ~result.mask.bits
        if not np.array_equal(prediction.pixels[outside], source.pixels[outside]):
            raise InvariantViolation(f"entry {entry.id}: prediction changed pixels outside the mask")

    prediction = prediction.quantized()
    save_image(prediction, pred_dir / f"{entry.id}.png")
    return MetricsRow(
        id=entry.id,
        psnr=psnr(prediction, target),
        ssim=ssim(prediction, target),
        rmse=rmse(prediction, target),
        rmsew=None if mask.is_empty() else rmse_weighted(prediction, target, mask),
        lpips=lpips.get(entry.id),
    )


def run_eval(
    manifest: Manifest,
    config: RemovalConfig,
    out_dir: Path,
    workers: int = 1,
    lpips: dict[str, float] | None = None,
    restorer: Restorer | None = None,
    pred_name: str = "pred",
) -> MetricsReport:
    """
    Removes the person from every test entry, writes predictions to
    out_dir/pred/ and scores them against the targets. Failing entries are
    listed in the report and left out of the aggregates.
    """
    tests = manifest.by_split("test")
    if not tests:
        raise ArgumentError("test split is empty; run split first")
    g = restorer or build_restorer(config.restorer)
    pred_dir = Path(out_dir) / pred_name
    lpips = lpips or {}

    def evaluate(entry: ManifestEntry) -> MetricsRow | EntryFailure:
        try:
            return _evaluate_entry(manifest, entry, config, g, pred_dir, lpips)
        except (KitError, OSError) as e:
            logger.warning("entry %s failed: %s", entry.id, e)
            return EntryFailure(entry.id, str(e))

    results = parallel_map(evaluate, tests, workers, desc=f"Evaluating {method_name(config)}")
    rows = sorted((r for r in results if isinstance(r, MetricsRow)), key=lambda r: r.id)
    failures = sorted(((r.id, r.message) for r in results if isinstance(r, EntryFailure)))
    meta = {
        "method": method_name(config),
        "dataset": manifest.root.name or str(manifest.root),
        "config_hash": config_hash(config),
    }
    return MetricsReport(rows=rows, failures=failures, meta=meta)


ABLATIONS = {
    "legacy": {"mode": "legacy_inpaint", "refine_iters": 1},
    "mask_guided": {"mode": "mask_guided", "refine_iters": 1},
    "mask_guided_cf": {"mode": "mask_guided"},
}


def run_ablation(
    manifest: Manifest,
    config: RemovalConfig,
    out_dir: Path,
    workers: int = 1,
    lpips: dict[str, float] | None = None,
) -> list[MetricsReport]:
    """
    Same test split under the legacy pipeline, mask guidance alone and mask
    guidance with refinement; writes one report per variant plus ablation.md.
    """
    out_dir = Path(out_dir)
    reports = []
    for name, update in ABLATIONS.items():
        if name == "mask_guided_cf":
            update = {**update, "refine_iters": max(2, config.refine_iters)}
        variant = config.model_copy(update=update)
        report = run_eval(manifest, variant, out_dir / name, workers, lpips)
        report.write(out_dir / name)
        reports.append(report)
    (out_dir / "ablation.md").write_text(comparison_table(reports) + "\n", encoding="utf-8")
    return reports
