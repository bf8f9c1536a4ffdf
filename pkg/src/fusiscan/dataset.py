"""Dataset ingestion, deterministic shuffling/splitting, and the manifest format.

Directory layout: <root>/{black_sigatoka,fusarium_wilt_race1,healthy}/*.{png,jpg,ppm}.
The manifest is a single JSON document with stable key order so split
assignments diff cleanly across runs.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .augment import AugmentationConfig, ConfigError, augment, bilinear_resize
from .imageio import (
    CANONICAL_DIRS,
    IMAGE_SUFFIXES,
    ClassLabel,
    DecodeError,
    LabeledImage,
    load_labeled_image,
    read_image,
)
from .tensor import Rng, Tensor

log = logging.getLogger(__name__)

SPLITS = ("train", "validation", "test")


class LayoutError(ValueError):
    """The dataset directory does not have the expected class layout."""


@dataclass
class SplitRatios:
    train: float = 0.80
    validation: float = 0.15
    test: float = 0.05

    def __post_init__(self):
        parts = (self.train, self.validation, self.test)
        if any(p < 0 for p in parts):
            raise ConfigError(f"split ratios must be >= 0, got {parts}")
        if abs(sum(parts) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must sum to 1, got {sum(parts)!r}")


@dataclass
class ImageRef:
    """A labeled image on disk, decoded on demand."""

    source_path: str
    label: ClassLabel
    lineage: Optional[str] = None

    def load(self) -> LabeledImage:
        return load_labeled_image(self.source_path, self.label)


@dataclass
class LoadReport:
    images: list[ImageRef]
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def count_for(self, label: ClassLabel) -> int:
        return sum(1 for ref in self.images if ref.label == label)


def load_directory_dataset(root) -> LoadReport:
    """Scan the three canonical class directories into labeled references.

    Files are ordered lexicographically by relative path before any shuffle.
    Undecodable files are skipped with a warning and counted in the report;
    a missing class directory is a layout error.
    """
    root = Path(root)
    if not root.is_dir():
        raise LayoutError(f"dataset root {root} is not a directory")
    missing = [d for d in CANONICAL_DIRS if not (root / d).is_dir()]
    if missing:
        raise LayoutError(f"dataset root {root} is missing class directories: {missing}")
    report = LoadReport(images=[])
    for dir_name in CANONICAL_DIRS:
        label = ClassLabel.from_dir_name(dir_name)
        class_dir = root / dir_name
        for path in sorted(class_dir.rglob("*")):
            if not path.is_file() or path.suffix.lower() not in IMAGE_SUFFIXES:
                continue
            try:
                read_image(path)
            except DecodeError as exc:
                log.warning("skipping undecodable image %s: %s", path, exc)
                report.skipped.append((str(path), str(exc)))
                continue
            report.images.append(ImageRef(str(path), label))
    return report


@dataclass
class ManifestEntry:
    image_id: str
    source_path: str
    label: ClassLabel
    split: str
    lineage: Optional[str] = None


@dataclass
class DatasetManifest:
    """Split assignment for every image, plus the seed that produced it."""

    entries: list[ManifestEntry]
    seed: int

    def split_entries(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def split_sizes(self) -> tuple[int, int, int]:
        return tuple(len(self.split_entries(s)) for s in SPLITS)

    def counts(self) -> dict[str, dict[str, int]]:
        """Entries per split, broken down by class."""
        table = {s: {label.dir_name: 0 for label in ClassLabel} for s in SPLITS}
        for e in self.entries:
            table[e.split][e.label.dir_name] += 1
        return table

    def to_json(self) -> str:
        doc = {
            "seed": self.seed,
            "entries": [
                {
                    "imageId": e.image_id,
                    "sourcePath": e.source_path,
                    "label": e.label.dir_name,
                    "split": e.split,
                    "lineage": e.lineage,
                }
                for e in self.entries
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        doc = json.loads(text)
        entries = [
            ManifestEntry(
                image_id=e["imageId"],
                source_path=e["sourcePath"],
                label=ClassLabel.from_dir_name(e["label"]),
                split=e["split"],
                lineage=e.get("lineage"),
            )
            for e in doc["entries"]
        ]
        return cls(entries=entries, seed=int(doc["seed"]))


def make_items(images: Sequence) -> list[tuple[str, str, ClassLabel, Optional[str]]]:
    """Normalize LabeledImage/ImageRef sequences to (id, path, label, lineage) rows.

    Augmented variants share their source path, so ids get a per-source
    counter suffix to stay unique.
    """
    seen: dict[str, int] = {}
    rows = []
    for img in images:
        path = img.source_path
        lineage = img.lineage
        if lineage is None:
            image_id = path
        else:
            k = seen.get(path, 0)
            seen[path] = k + 1
            image_id = f"{path}::aug{k}"
        rows.append((image_id, path, img.label, lineage))
    return rows


def _floor_share(ratio: float, n: int) -> int:
    """floor(ratio * n) with a 1e-9 guard against float ratios landing just under an integer."""
    return int(ratio * n + 1e-9)


def shuffle_split(images: Sequence, ratios: SplitRatios, seed: int) -> DatasetManifest:
    """Fisher-Yates shuffle with the given seed, then contiguous floor-based splits.

    The first floor(train*n) entries become train, the next floor(validation*n)
    validation, and the remainder test.
    """
    rows = make_items(images)
    n = len(rows)
    perm = Rng(seed).shuffle(n)
    n_train = _floor_share(ratios.train, n)
    n_val = _floor_share(ratios.validation, n)
    entries = []
    for pos, idx in enumerate(perm):
        if pos < n_train:
            split = "train"
        elif pos < n_train + n_val:
            split = "validation"
        else:
            split = "test"
        image_id, path, label, lineage = rows[idx]
        entries.append(ManifestEntry(image_id, path, label, split, lineage))
    return DatasetManifest(entries=entries, seed=seed)


def rescale(img) -> Tensor:
    """Scale 8-bit channels by 1/255 and transpose HWC -> CHW."""
    px = img.pixels if isinstance(img, LabeledImage) else np.asarray(img)
    chw = px.astype(np.float32).transpose(2, 0, 1) / 255.0
    return Tensor(chw)


def to_model_input(imgs: Sequence, target_size: int) -> Tensor:
    """Bilinear-resize to target x target, rescale by 1/255, stack as [N,3,S,S].

    Resizing happens on float pixel values so no 8-bit rounding occurs
    between the source image and the model input.
    """
    batch = np.empty((len(imgs), 3, target_size, target_size), dtype=np.float32)
    for i, img in enumerate(imgs):
        px = img.pixels if isinstance(img, LabeledImage) else np.asarray(img)
        h, w = px.shape[:2]
        if (h, w) != (target_size, target_size):
            resized = bilinear_resize(px, target_size, target_size)
        else:
            resized = px.astype(np.float64)
        batch[i] = (resized.transpose(2, 0, 1) / 255.0).astype(np.float32)
    return Tensor(batch)


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def image_rng(seed: int, image_id: str) -> Rng:
    """Per-image child stream derived from (seed, image id); schedule independent."""
    return Rng(seed).child(_fnv1a64(image_id))


def expand_with_augmentation(
    images: Sequence[LabeledImage], cfg: AugmentationConfig, seed: int
) -> list[LabeledImage]:
    """Each source image yields itself plus cfg.per_image_variants augmented copies."""
    out = []
    for img in images:
        out.append(img)
        out.extend(augment(img, cfg, image_rng(seed, img.source_path)))
    return out


def load_split_images(
    report_or_images,
    ratios: SplitRatios,
    seed: int,
    cfg: Optional[AugmentationConfig] = None,
    paper_faithful: bool = False,
):
    """Assemble (manifest, {split: [LabeledImage]}) from loaded images.

    Default order augments only the training split, so validation and test
    never contain near-duplicates of training images.  `paper_faithful`
    instead expands the whole corpus first and shuffles the expanded list
    before splitting, reproducing the published recipe (and its leakage).
    """
    if isinstance(report_or_images, LoadReport):
        images = [ref.load() for ref in report_or_images.images]
    else:
        images = list(report_or_images)
    cfg = cfg or AugmentationConfig()
    if paper_faithful:
        expanded = expand_with_augmentation(images, cfg, seed)
        manifest = shuffle_split(expanded, ratios, seed)
        by_id = {row[0]: img for row, img in zip(make_items(expanded), expanded)}
        splits = {s: [by_id[e.image_id] for e in manifest.split_entries(s)] for s in SPLITS}
        return manifest, splits
    manifest = shuffle_split(images, ratios, seed)
    by_id = {row[0]: img for row, img in zip(make_items(images), images)}
    splits = {s: [by_id[e.image_id] for e in manifest.split_entries(s)] for s in SPLITS}
    train = splits["train"]
    augmented = []
    for img in train:
        augmented.extend(augment(img, cfg, image_rng(seed, img.source_path)))
    splits["train"] = train + augmented
    return manifest, splits
