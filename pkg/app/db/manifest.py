"""
Dataset storage: triplet PNGs on disk indexed by a JSON Lines manifest whose
paths are relative to the manifest's own directory.
"""

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, ValidationError

from app.core.errors import ManifestError
from app.core.image import Mask, save_image, save_mask
from app.synth.mosaic import CompositeTriplet
from app.synth.render import DepthMap

MANIFEST_NAME = "manifest.jsonl"

Split = Literal["train", "test", "unassigned"]


class ManifestEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    source_path: str
    target_path: str
    mask_path: str
    depth_path: str | None = None
    provenance: dict = {}
    split: Split = "unassigned"


class Manifest(BaseModel):
    entries: list[ManifestEntry] = []
    root: Path = Path(".")

    def resolve(self, relative: str) -> Path:
        path = Path(relative)
        return path if path.is_absolute() else self.root / path

    def by_split(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]


def read_manifest(path: Path) -> Manifest:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ManifestError(f"cannot read manifest {path}: {e}") from e
    entries = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            entries.append(ManifestEntry.model_validate_json(line))
        except ValidationError as e:
            raise ManifestError(f"{path}:{lineno}: invalid entry: {e.errors()[0]['msg']}") from e
    return Manifest(entries=entries, root=path.parent)


def write_manifest(manifest: Manifest, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        json.dumps(entry.model_dump(mode="json"), sort_keys=True, ensure_ascii=False)
        for entry in manifest.entries
    ]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


def validate_manifest(manifest: Manifest) -> list[str]:
    """Problems found (empty when the manifest is sound)."""
    problems = []
    seen = set()
    for entry in manifest.entries:
        if entry.id in seen:
            problems.append(f"duplicate id {entry.id}")
        seen.add(entry.id)
        paths = [entry.source_path, entry.target_path, entry.mask_path]
        if entry.depth_path:
            paths.append(entry.depth_path)
        for rel in paths:
            if not manifest.resolve(rel).is_file():
                problems.append(f"{entry.id}: missing file {rel}")
    return problems


def entry_id(index: int) -> str:
    return f"{index:05d}"


class TripletWriter:
    """
    Writes one triplet's {source,target,mask[,depth]}/NNNNN.png as soon as it
    exists and hands back its manifest entry. Safe to call from workers: every
    index owns its own files.
    """

    def __init__(self, out_dir: Path, write_depth: bool = False):
        self.out_dir = Path(out_dir)
        self.write_depth = write_depth

    def __call__(self, index: int, triplet: CompositeTriplet, depth: DepthMap | None = None) -> ManifestEntry:
        eid = entry_id(index)
        rel = {kind: f"{kind}/{eid}.png" for kind in ("source", "target", "mask", "depth")}
        save_image(triplet.source, self.out_dir / rel["source"])
        save_image(triplet.target, self.out_dir / rel["target"])
        save_mask(triplet.mask, self.out_dir / rel["mask"])
        depth_path = None
        if self.write_depth and depth is not None:
            save_mask(Mask(depth.values > 0), self.out_dir / rel["depth"])
            depth_path = rel["depth"]
        return ManifestEntry(
            id=eid,
            source_path=rel["source"],
            target_path=rel["target"],
            mask_path=rel["mask"],
            depth_path=depth_path,
            provenance=triplet.meta,
        )

    def finish(self, entries: list[ManifestEntry]) -> Manifest:
        manifest = Manifest(entries=list(entries), root=self.out_dir)
        write_manifest(manifest, self.out_dir / MANIFEST_NAME)
        return manifest


def save_triplets(
    triplets: list[CompositeTriplet],
    out_dir: Path,
    depths: list[DepthMap] | None = None,
) -> Manifest:
    """Writes already-built triplets; batch synthesis streams through TripletWriter instead."""
    writer = TripletWriter(out_dir, write_depth=depths is not None)
    entries = [
        writer(i, triplet, depths[i] if depths is not None else None)
        for i, triplet in enumerate(triplets)
    ]
    return writer.finish(entries)
